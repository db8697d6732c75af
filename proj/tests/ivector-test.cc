// tests/ivector-test.cc

// Copyright 2026  The svtk Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <cmath>

#include "oracles.h"
#include "svtk/ivector.h"
#include "test-util.h"

namespace svtk {
namespace {

using testing::DenseIvector;
using testing::RandomMatrix;
using testing::RandomVector;

TvModel RandomTv(int c, int f, int r, Rng *rng) {
  TvModel tv;
  tv.t = RandomMatrix(c * f, r, rng);
  tv.sigma.resize(c * f);
  for (int i = 0; i < c * f; ++i) tv.sigma(i) = 0.3 + rng->Uniform();
  return tv;
}

BwStats RandomStats(int c, int f, Rng *rng) {
  BwStats s;
  s.n.resize(c);
  for (int i = 0; i < c; ++i) s.n(i) = 10.0 * rng->Uniform();
  s.f = RandomMatrix(c, f, rng, 3.0);
  return s;
}

TEST(ExtractIvector, ZeroStatisticsGiveZero) {
  Rng rng(1);
  const TvModel tv = RandomTv(3, 2, 4, &rng);
  BwStats s{Vector::Zero(3), Matrix::Zero(3, 2), {}};
  EXPECT_EQ(ExtractIvector(tv, s), Vector::Zero(4));
}

TEST(ExtractIvector, ScalarHandCase) {
  TvModel tv{Matrix::Ones(1, 1), Vector::Ones(1)};
  BwStats s{Vector::Ones(1), Matrix::Constant(1, 1, 4.0), {}};
  EXPECT_NEAR(ExtractIvector(tv, s)(0), 2.0, 1e-15);
}

TEST(ExtractIvector, MatchesDenseInverse) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const int c = 1 + static_cast<int>(rng.Index(3));
    const int f = 1 + static_cast<int>(rng.Index(3));
    const int r = 1 + static_cast<int>(rng.Index(4));
    const TvModel tv = RandomTv(c, f, r, &rng);
    const BwStats s = RandomStats(c, f, &rng);
    const Vector x = ExtractIvector(tv, s);
    const Vector oracle = DenseIvector(tv, s);
    EXPECT_LT((x - oracle).cwiseAbs().maxCoeff(), 1e-10)
        << "C=" << c << " F=" << f << " R=" << r;
  }
}

TEST(ExtractIvector, PosteriorPrecisionIsSymmetricPositiveDefinite) {
  Rng rng(3);
  const TvModel tv = RandomTv(2, 3, 3, &rng);
  const BwStats s = RandomStats(2, 3, &rng);
  IvectorExtractor ex(tv, 2);
  const FactorPosterior p = ex.Posterior(s);
  EXPECT_LT((p.precision - p.precision.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(p.precision);
  EXPECT_GE(eig.eigenvalues().minCoeff(), 1.0 - 1e-12);
  EXPECT_NEAR(p.log_det_precision, std::log(p.precision.determinant()), 1e-10);
  EXPECT_LT((p.mean - ex.Extract(s)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(ExtractIvector, LinearInFirstOrderStats) {
  Rng rng(4);
  const TvModel tv = RandomTv(3, 2, 3, &rng);
  BwStats a = RandomStats(3, 2, &rng);
  BwStats b = a;
  b.f = RandomMatrix(3, 2, &rng, 3.0);
  BwStats sum = a;
  sum.f = a.f + b.f;
  const Vector lhs = ExtractIvector(tv, sum);
  const Vector rhs = ExtractIvector(tv, a) + ExtractIvector(tv, b);
  EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ExtractIvector, PriorDominatesAsCountsVanish) {
  Rng rng(5);
  const TvModel tv = RandomTv(2, 2, 2, &rng);
  const BwStats base = RandomStats(2, 2, &rng);
  double prev = ExtractIvector(tv, base).norm();
  for (double eps : {1e-1, 1e-2, 1e-4, 1e-8}) {
    BwStats s{base.n * eps, base.f * eps, {}};
    const double norm = ExtractIvector(tv, s).norm();
    EXPECT_LT(norm, prev);
    prev = norm;
  }
  EXPECT_LT(prev, 1e-6);
}

TEST(ExtractIvector, Errors) {
  Rng rng(6);
  const TvModel tv = RandomTv(2, 2, 2, &rng);
  BwStats wrong = RandomStats(3, 2, &rng);
  EXPECT_THROW(ExtractIvector(tv, wrong), DimensionMismatch);
  BwStats negative = RandomStats(2, 2, &rng);
  negative.n(0) = -1.0;
  EXPECT_THROW(ExtractIvector(tv, negative), InvalidArgument);
}

TEST(TrainTv, ZeroIterationsReturnSeededInitialization) {
  const testing::TvFixture fx = testing::MakeTvFixture(2, 3, 2, 10, 7);
  TvOptions opts;
  opts.num_factors = 2;
  opts.iters = 0;
  opts.seed = 42;
  const TvTrainResult r = TrainTv(fx.stats, fx.ubm, opts);
  // Zero-mean Gaussian entries with variance 1/R, filled row by row.
  Rng rng(42);
  Matrix expect(6, 2);
  for (int i = 0; i < 6; ++i)
    for (int k = 0; k < 2; ++k) expect(i, k) = (1.0 / std::sqrt(2.0)) * rng.Normal();
  EXPECT_EQ(r.model.t, expect);
  EXPECT_EQ(r.model.sigma, Vector::Ones(6));
  EXPECT_EQ(r.objectives.size(), 1u);
}

TEST(TrainTv, DeterministicForSeed) {
  const testing::TvFixture fx = testing::MakeTvFixture(2, 3, 2, 40, 8);
  TvOptions opts;
  opts.num_factors = 2;
  opts.iters = 5;
  opts.seed = 3;
  EXPECT_EQ(TrainTv(fx.stats, fx.ubm, opts).model.t,
            TrainTv(fx.stats, fx.ubm, opts).model.t);
  TvOptions other = opts;
  other.seed = 4;
  EXPECT_NE(TrainTv(fx.stats, fx.ubm, opts).model.t,
            TrainTv(fx.stats, fx.ubm, other).model.t);
}

TEST(TrainTv, ObjectiveIsNonDecreasing) {
  const testing::TvFixture fx = testing::MakeTvFixture(3, 2, 3, 60, 9);
  TvOptions opts;
  opts.num_factors = 3;
  opts.iters = 15;
  const TvTrainResult r = TrainTv(fx.stats, fx.ubm, opts);
  for (std::size_t i = 1; i < r.objectives.size(); ++i)
    EXPECT_GE(r.objectives[i], r.objectives[i - 1] - 1e-6 * std::abs(r.objectives[i - 1]))
        << "iteration " << i;
}

TEST(TrainTv, ObjectiveIsNonDecreasingWithSigmaUpdates) {
  SynthSpec spec;
  spec.n_speakers = 8;
  spec.utts_per_speaker = 4;
  spec.frames_per_utt = 80;
  spec.feature_dim = 3;
  const Corpus corpus = SynthesizeCorpus(spec);
  UbmEmOptions uo;
  uo.num_components = 4;
  uo.iters = 5;
  const Ubm ubm = TrainUbmEm(corpus.features, uo).ubm;
  std::vector<BwStats> stats;
  for (const auto &fm : corpus.features) stats.push_back(ComputeBaumWelchStats(ubm, fm, true));
  TvOptions opts;
  opts.num_factors = 4;
  opts.iters = 12;
  opts.update_sigma = true;
  const TvTrainResult r = TrainTv(stats, ubm, opts);
  for (std::size_t i = 1; i < r.objectives.size(); ++i)
    EXPECT_GE(r.objectives[i], r.objectives[i - 1] - 1e-6 * std::abs(r.objectives[i - 1]))
        << "iteration " << i;
  EXPECT_GT(r.model.sigma.minCoeff(), 0.0);
  EXPECT_NE(r.model.sigma, TrainTv(stats, ubm, {4, 0, 1, false, kMinVariance}).model.sigma);
}

TEST(TrainTv, RecoversGeneratingSubspace) {
  const testing::TvFixture fx = testing::MakeTvFixture(2, 3, 2, 500, 10);
  TvOptions opts;
  opts.num_factors = 2;
  opts.iters = 20;
  const TvTrainResult r = TrainTv(fx.stats, fx.ubm, opts);
  EXPECT_LT(testing::MaxPrincipalAngle(r.model.t, fx.t_true), 0.05);
}

TEST(TrainTv, Errors) {
  const testing::TvFixture fx = testing::MakeTvFixture(2, 2, 2, 3, 11);
  TvOptions opts;
  opts.num_factors = 4;
  EXPECT_THROW(TrainTv(std::span(fx.stats).first(3), fx.ubm, opts), InsufficientData);
  opts.num_factors = 5;
  EXPECT_THROW(TrainTv(fx.stats, fx.ubm, opts), InvalidArgument);
  std::vector<BwStats> empty(4, BwStats{Vector::Zero(2), Matrix::Zero(2, 2), {}});
  opts.num_factors = 2;
  EXPECT_THROW(TrainTv(empty, fx.ubm, opts), InsufficientData);
  opts.update_sigma = true;
  EXPECT_THROW(TrainTv(fx.stats, fx.ubm, opts), InvalidArgument);
}

TEST(TvIo, RoundTrip) {
  testing::TempDir dir;
  Rng rng(12);
  const TvModel tv = RandomTv(3, 2, 4, &rng);
  SaveTvModel(dir.File("t.svt"), tv);
  const TvModel back = LoadTvModel(dir.File("t.svt"));
  EXPECT_EQ(back.t, tv.t);
  EXPECT_EQ(back.sigma, tv.sigma);
  const std::string bytes = testing::ReadBytes(dir.File("t.svt"));
  EXPECT_EQ(bytes.substr(0, 4), "SVT1");
  EXPECT_EQ(bytes.size(), 4u + 8u + 8u * (6 * 4 + 6));
}

}  // namespace
}  // namespace svtk
