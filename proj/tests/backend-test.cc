// tests/backend-test.cc

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
#include <numbers>

#include "oracles.h"
#include "svtk/backend.h"
#include "svtk/data.h"
#include "test-util.h"

namespace svtk {
namespace {

using testing::RandomMatrix;
using testing::RandomVector;
using testing::WithinClassCov;

struct Labeled {
  Matrix x;
  std::vector<int> labels;
  int classes = 0;
};

// Class means from N(0, between), samples add N(0, within) noise.
Labeled GaussianClasses(const Matrix &between_chol, const Matrix &within_chol,
                        int classes, int per_class, Rng *rng) {
  const Eigen::Index d = between_chol.rows();
  Labeled out;
  out.classes = classes;
  out.x.resize(d, static_cast<Eigen::Index>(classes) * per_class);
  Eigen::Index j = 0;
  for (int s = 0; s < classes; ++s) {
    const Vector mean = between_chol * RandomVector(d, rng);
    for (int k = 0; k < per_class; ++k, ++j) {
      out.x.col(j) = mean + within_chol * RandomVector(d, rng);
      out.labels.push_back(s);
    }
  }
  return out;
}

Labeled RandomLabeled(int d, int classes, int per_class, Rng *rng) {
  const Matrix a = RandomMatrix(d, d, rng);
  const Matrix b = RandomMatrix(d, d, rng, 0.5);
  return GaussianClasses(2.0 * a, b + Matrix::Identity(d, d), classes, per_class, rng);
}

// Utterance-mean features of the default synthetic corpus.
Labeled UtteranceMeans(const Corpus &corpus) {
  Labeled out;
  out.classes = static_cast<int>(corpus.index.NumSpeakers());
  out.x.resize(corpus.features.front().Dim(),
               static_cast<Eigen::Index>(corpus.features.size()));
  for (std::size_t u = 0; u < corpus.features.size(); ++u) {
    out.x.col(static_cast<Eigen::Index>(u)) =
        corpus.features[u].frames.colwise().mean().transpose();
    out.labels.push_back(static_cast<int>(
        corpus.index.SpeakerIndex(corpus.index.utterances()[u].speaker_id)));
  }
  return out;
}

// ---- linear regression --------------------------------------------------

TEST(FitLr, IdentityDesign) {
  const Matrix eye = Matrix::Identity(2, 2);
  EXPECT_LT((FitLr(eye, eye, 0.0).a - eye).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((FitLr(eye, eye, 0.5).a - (2.0 / 3.0) * eye).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(FitLr, MatchesIterativeLeastSquares) {
  Rng rng(1);
  const Matrix x = RandomMatrix(5, 40, &rng);
  std::vector<int> labels(40);
  for (int j = 0; j < 40; ++j) labels[j] = static_cast<int>(rng.Index(4));
  const Matrix y = IndicatorMatrix(labels, 4);
  const LrModel m = FitLr(x, y, 0.0);
  const Matrix oracle = testing::IterativeLeastSquares(x, y, 0.0, 1e-12);
  EXPECT_LT((m.a - oracle).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(FitLr, NormalEquationResidualVanishes) {
  Rng rng(2);
  for (double ridge : {0.0, 0.1, 3.0}) {
    const Matrix x = RandomMatrix(6, 30, &rng);
    const Matrix y = RandomMatrix(3, 30, &rng);
    const LrModel m = FitLr(x, y, ridge);
    const Matrix grad = 2.0 * (x * (x.transpose() * m.a - y.transpose()) + ridge * m.a);
    EXPECT_LT(grad.cwiseAbs().maxCoeff(), 1e-8) << "ridge " << ridge;
    EXPECT_EQ(m.ridge, ridge);
  }
}

TEST(FitLr, SingularDesignNeedsRidge) {
  Rng rng(3);
  const Matrix x = RandomMatrix(10, 4, &rng);
  const Matrix y = RandomMatrix(2, 4, &rng);
  try {
    FitLr(x, y, 0.0);
    FAIL() << "expected SingularMatrix";
  } catch (const SingularMatrix &e) {
    EXPECT_NE(std::string(e.what()).find("ridge"), std::string::npos);
  }
  EXPECT_NO_THROW(FitLr(x, y, DefaultRidge(x)));
}

TEST(FitLr, DefaultRidgeScalesWithTrace) {
  Rng rng(4);
  const Matrix x = RandomMatrix(7, 11, &rng);
  EXPECT_NEAR(DefaultRidge(x), 1e-6 * (x * x.transpose()).trace() / 7.0, 1e-18);
}

TEST(FitLr, CenteringSubtractsTheMean) {
  Rng rng(5);
  const Matrix x = RandomMatrix(3, 20, &rng);
  const Matrix y = RandomMatrix(2, 20, &rng);
  const LrModel m = FitLr(x, y, 0.0, true);
  const Vector mean = x.rowwise().mean();
  const LrModel plain = FitLr(x.colwise() - mean, y, 0.0);
  EXPECT_LT((m.a - plain.a).cwiseAbs().maxCoeff(), 1e-12);
  const Vector probe = RandomVector(3, &rng);
  EXPECT_LT((LrTransform(m, probe) - plain.a.transpose() * (probe - mean))
                .cwiseAbs().maxCoeff(),
            1e-12);
}

TEST(IndicatorMatrix, OneHotColumns) {
  const std::vector<int> labels = {2, 0, 1, 2};
  const Matrix y = IndicatorMatrix(labels, 3);
  EXPECT_EQ(y.colwise().sum(), Eigen::RowVectorXd::Ones(4));
  EXPECT_EQ(y(2, 0), 1.0);
  EXPECT_EQ(y(0, 1), 1.0);
  const std::vector<int> bad = {3};
  EXPECT_THROW(IndicatorMatrix(bad, 3), InvalidArgument);
}

TEST(LrTransform, Cases) {
  Rng rng(6);
  LrModel id{Matrix::Identity(3, 3), 0.0, {}};
  const Vector x = RandomVector(3, &rng);
  EXPECT_EQ(LrTransform(id, x), x);
  LrModel m{RandomMatrix(3, 2, &rng), 0.0, {}};
  EXPECT_EQ(LrTransform(m, Vector::Zero(3)), Vector::Zero(2));
  Vector expect(2);
  for (int s = 0; s < 2; ++s) {
    expect(s) = 0.0;
    for (int d = 0; d < 3; ++d) expect(s) += m.a(d, s) * x(d);
  }
  EXPECT_LT((LrTransform(m, x) - expect).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(LrTransform(m, Vector::Zero(4)), DimensionMismatch);
}

TEST(FitLr, ArgmaxRecoversTrainingSpeakers) {
  const Labeled data = UtteranceMeans(SynthesizeCorpus(SynthSpec()));
  const LrModel m = FitLr(data.x, IndicatorMatrix(data.labels, data.classes),
                          DefaultRidge(data.x));
  int hits = 0;
  for (Eigen::Index j = 0; j < data.x.cols(); ++j) {
    Eigen::Index arg;
    LrTransform(m, data.x.col(j)).maxCoeff(&arg);
    hits += arg == data.labels[static_cast<std::size_t>(j)];
  }
  const double rate = static_cast<double>(hits) / static_cast<double>(data.x.cols());
  RecordProperty("argmax_rate", std::to_string(rate));
  EXPECT_GE(rate, 0.95);
}

TEST(LrModelIo, RoundTrip) {
  testing::TempDir dir;
  Rng rng(7);
  LrModel m = FitLr(RandomMatrix(3, 10, &rng), RandomMatrix(2, 10, &rng), 0.25, true);
  SaveLrModel(dir.File("m.svlr"), m);
  const LrModel back = LoadLrModel(dir.File("m.svlr"));
  EXPECT_EQ(back.a, m.a);
  EXPECT_EQ(back.ridge, 0.25);
  EXPECT_EQ(back.center, m.center);
  EXPECT_EQ(testing::ReadBytes(dir.File("m.svlr")).substr(0, 4), "SVLR");
}

// ---- speaker models and cosine scoring ----------------------------------

TEST(MakeSpeakerModel, Averages) {
  Rng rng(8);
  const Vector v = RandomVector(4, &rng);
  std::vector<Vector> one = {v};
  EXPECT_EQ(MakeSpeakerModel(one).m, v);
  std::vector<Vector> pair = {v, -v};
  EXPECT_EQ(MakeSpeakerModel(pair).m, Vector::Zero(4));
  std::vector<Vector> three = {RandomVector(4, &rng), RandomVector(4, &rng),
                               RandomVector(4, &rng)};
  const SpeakerModel sm = MakeSpeakerModel(three);
  EXPECT_EQ(sm.n_utts, 3);
  EXPECT_LT((sm.m - (three[0] + three[1] + three[2]) / 3.0).cwiseAbs().maxCoeff(), 1e-12);
  std::vector<Vector> none;
  EXPECT_THROW(MakeSpeakerModel(none), InvalidArgument);
}

TEST(CosineScore, AnalyticCases) {
  Vector a(2), b(2), c(2);
  a << 1, 1;
  b << 1, 0;
  c << 0, 3;
  EXPECT_NEAR(CosineScore(a, a), 1.0, 1e-15);
  EXPECT_NEAR(CosineScore(b, c), 0.0, 1e-15);
  EXPECT_NEAR(CosineScore(a, b), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(CosineScore(a, b), 0.70711, 1e-5);
  EXPECT_THROW(CosineScore(a, Vector::Zero(2)), InvalidArgument);
  EXPECT_THROW(CosineScore(a, Vector::Ones(3)), DimensionMismatch);
}

TEST(CosineScore, ScaleInvariantAndSymmetric) {
  Rng rng(9);
  for (int i = 0; i < 50; ++i) {
    const Vector a = RandomVector(6, &rng), b = RandomVector(6, &rng);
    const double alpha = std::exp(3.0 * rng.Normal()), beta = std::exp(3.0 * rng.Normal());
    const double s = CosineScore(a, b);
    EXPECT_NEAR(CosineScore(alpha * a, beta * b), s, 1e-12);
    EXPECT_NEAR(CosineScore(b, a), s, 1e-15);
    EXPECT_LE(std::abs(s), 1.0 + 1e-15);
    const double theta = 2.0 * rng.Uniform() - 1.0;
    EXPECT_EQ(Decide(CosineScore(alpha * a, beta * b), theta), Decide(s, theta))
        << "flip near threshold " << theta << " score " << s;
  }
}

TEST(Decide, StrictThreshold) {
  EXPECT_TRUE(Decide(0.9, 0.5));
  EXPECT_FALSE(Decide(0.5, 0.5));
  EXPECT_FALSE(Decide(-1.0, 0.0));
}

// ---- WCCN ---------------------------------------------------------------

Matrix TransformedWithin(const WccnModel &m, const Matrix &x,
                         const std::vector<int> &labels) {
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) y.col(j) = ApplyWccn(m, x.col(j));
  return WithinClassCov(y, labels);
}

TEST(FitWccn, WhitensRandomLabeledSets) {
  Rng rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    const Labeled data = RandomLabeled(5, 6, 8, &rng);
    const WccnModel m = FitWccn(data.x, data.labels);
    const Matrix w = TransformedWithin(m, data.x, data.labels);
    EXPECT_LT((w - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-6);
    const Matrix inv = WithinClassCov(data.x, data.labels).inverse();
    EXPECT_LT((m.b * m.b.transpose() - inv).cwiseAbs().maxCoeff(),
              1e-8 * std::max(1.0, inv.cwiseAbs().maxCoeff()));
  }
}

// Two classes whose within-class scatter is exactly the given diagonal.
Labeled ExactWithin(double sx2, double sy2) {
  Labeled out;
  out.classes = 2;
  const double sx = std::sqrt(sx2), sy = std::sqrt(sy2);
  out.x.resize(2, 8);
  int j = 0;
  for (int s = 0; s < 2; ++s) {
    const double cx = s == 0 ? -3.0 : 5.0, cy = s == 0 ? 1.0 : 2.0;
    for (double dx : {-sx, sx})
      for (double dy : {-sy, sy}) {
        out.x(0, j) = cx + dx;
        out.x(1, j) = cy + dy;
        out.labels.push_back(s);
        ++j;
      }
  }
  return out;
}

TEST(FitWccn, AlreadyWhiteIsFixedPoint) {
  const Labeled data = ExactWithin(1.0, 1.0);
  EXPECT_LT((WithinClassCov(data.x, data.labels) - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(),
            1e-12);
  const WccnModel m = FitWccn(data.x, data.labels);
  EXPECT_LT((m.b.transpose() * m.b - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((TransformedWithin(m, data.x, data.labels) - Matrix::Identity(2, 2))
                .cwiseAbs().maxCoeff(),
            1e-8);
}

TEST(FitWccn, DiagonalWithin) {
  const Labeled data = ExactWithin(4.0, 1.0);
  const WccnModel m = FitWccn(data.x, data.labels);
  EXPECT_LT((TransformedWithin(m, data.x, data.labels) - Matrix::Identity(2, 2))
                .cwiseAbs().maxCoeff(),
            1e-8);
}

TEST(FitWccn, IsotropicSingleClass) {
  Rng rng(11);
  const double sigma = 2.5;
  Matrix x = sigma * RandomMatrix(3, 4000, &rng);
  const std::vector<int> labels(4000, 0);
  const WccnModel m = FitWccn(x, labels);
  const Matrix w = WithinClassCov(x, labels);
  // B is (1/sigma) times an orthogonal matrix up to the sampling error of w.
  EXPECT_LT((m.b.transpose() * m.b * sigma * sigma - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(),
            0.1);
  EXPECT_LT((TransformedWithin(m, x, labels) - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(),
            1e-8);
  EXPECT_LT((w - sigma * sigma * Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 0.5);
}

TEST(FitWccn, SingularWithoutRidge) {
  Matrix x(2, 4);
  x << 1, 2, 5, 6, 0, 0, 0, 0;
  const std::vector<int> labels = {0, 0, 1, 1};
  EXPECT_THROW(FitWccn(x, labels), SingularMatrix);
  EXPECT_NO_THROW(FitWccn(x, labels, 1e-3));
}

TEST(WccnModelIo, RoundTrip) {
  testing::TempDir dir;
  Rng rng(12);
  const Labeled data = RandomLabeled(3, 4, 5, &rng);
  const WccnModel m = FitWccn(data.x, data.labels);
  SaveWccnModel(dir.File("w.svwc"), m);
  EXPECT_EQ(LoadWccnModel(dir.File("w.svwc")).b, m.b);
}

// ---- LDA ----------------------------------------------------------------

TEST(FitLda, SeparatingAxis) {
  Rng rng(13);
  Labeled data;
  data.classes = 2;
  data.x.resize(2, 400);
  for (int j = 0; j < 400; ++j) {
    const int s = j % 2;
    data.x(0, j) = (s == 0 ? -2.0 : 2.0) + 0.3 * rng.Normal();
    data.x(1, j) = 3.0 * rng.Normal();
    data.labels.push_back(s);
  }
  const LdaModel m = FitLda(data.x, data.labels, 1);
  // Two classes: the direction is S_w^-1 (mu_1 - mu_0).
  const Scatter sc = ComputeScatter(data.x, data.labels);
  Vector mu0 = Vector::Zero(2), mu1 = Vector::Zero(2);
  for (int j = 0; j < 400; ++j) (j % 2 == 0 ? mu0 : mu1) += data.x.col(j) / 200.0;
  const Vector oracle = sc.within.ldlt().solve(mu1 - mu0);
  const Vector w = m.w.col(0);
  const double cos_oracle = std::abs(w.dot(oracle)) / (w.norm() * oracle.norm());
  EXPECT_GT(cos_oracle, 1.0 - 1e-12);
}

TEST(FitLda, ExactAxisWhenSamplesAreSymmetric) {
  // Full-factorial offsets per class, so S_w and S_b are both diagonal.
  Matrix x(2, 8);
  x << -1.1, -1.1, -0.9, -0.9, 0.9, 0.9, 1.1, 1.1,
       -2.0, 2.0, -2.0, 2.0, -2.0, 2.0, -2.0, 2.0;
  const std::vector<int> labels = {0, 0, 0, 0, 1, 1, 1, 1};
  const LdaModel m = FitLda(x, labels, 1);
  const double angle = std::acos(std::min(1.0, std::abs(m.w(0, 0)) / m.w.col(0).norm()));
  EXPECT_LT(angle, 1e-3);
}

TEST(FitLda, ColumnsAreWithinOrthonormalAndSolveEigenproblem) {
  Rng rng(14);
  const Labeled data = RandomLabeled(6, 8, 10, &rng);
  const LdaModel m = FitLda(data.x, data.labels, 4);
  const Scatter sc = ComputeScatter(data.x, data.labels);
  EXPECT_LT((m.w.transpose() * sc.within * m.w - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(),
            1e-6);
  const Matrix lhs = sc.between * m.w;
  const Matrix rhs = sc.within * m.w * m.eigenvalues.asDiagonal();
  EXPECT_LE((lhs - rhs).norm(), 1e-6 * lhs.norm());
  for (int k = 0; k < 4; ++k) {
    const Vector w = m.w.col(k);
    const double rayleigh = w.dot(sc.between * w) / w.dot(sc.within * w);
    EXPECT_NEAR(rayleigh, m.eigenvalues(k), 1e-8 * std::max(1.0, m.eigenvalues(k)));
    if (k > 0) EXPECT_GE(m.eigenvalues(k - 1), m.eigenvalues(k));
  }
}

TEST(FitLda, ScatterMatchesDefinition) {
  Rng rng(15);
  const Labeled data = RandomLabeled(3, 4, 6, &rng);
  const Scatter sc = ComputeScatter(data.x, data.labels);
  const double n = static_cast<double>(data.x.cols());
  const Vector mu = data.x.rowwise().mean();
  Matrix within = Matrix::Zero(3, 3), between = Matrix::Zero(3, 3);
  for (int s = 0; s < 4; ++s) {
    Vector m = Vector::Zero(3);
    for (int k = 0; k < 6; ++k) m += data.x.col(s * 6 + k) / 6.0;
    for (int k = 0; k < 6; ++k)
      within += (data.x.col(s * 6 + k) - m) * (data.x.col(s * 6 + k) - m).transpose();
    between += 6.0 * (m - mu) * (m - mu).transpose();
  }
  EXPECT_LT((sc.within - within / n).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((sc.between - between / n).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FitLda, EqualClassMeansAreRejected) {
  Matrix x(2, 4);
  x << 1, -1, 1, -1, 2, -2, -2, 2;
  const std::vector<int> labels = {0, 0, 1, 1};
  EXPECT_THROW(FitLda(x, labels, 1), InvalidArgument);
}

TEST(FitLda, RankErrorNamesAchievableRank) {
  Rng rng(16);
  const Labeled data = RandomLabeled(5, 3, 10, &rng);
  try {
    FitLda(data.x, data.labels, 3);
    FAIL() << "expected InvalidArgument";
  } catch (const InvalidArgument &e) {
    EXPECT_NE(std::string(e.what()).find("achievable rank 2"), std::string::npos) << e.what();
  }
}

TEST(LdaModelIo, RoundTrip) {
  testing::TempDir dir;
  Rng rng(17);
  const Labeled data = RandomLabeled(4, 5, 6, &rng);
  const LdaModel m = FitLda(data.x, data.labels, 3);
  SaveLdaModel(dir.File("l.svld"), m);
  const LdaModel back = LoadLdaModel(dir.File("l.svld"));
  EXPECT_EQ(back.w, m.w);
  EXPECT_EQ(back.eigenvalues, m.eigenvalues);
}

// ---- PLDA ---------------------------------------------------------------

double DensePldaLlr(const PldaModel &m, const Vector &a, const Vector &b) {
  const Eigen::Index d = m.Dim();
  const Matrix bc = m.BetweenCov();
  const Matrix t = bc + m.within_cov;
  Matrix joint(2 * d, 2 * d);
  joint << t, bc, bc, t;
  Vector ab(2 * d);
  ab << a - m.mean, b - m.mean;
  return testing::LogGaussFull(ab, joint) - testing::LogGaussFull(a - m.mean, t) -
         testing::LogGaussFull(b - m.mean, t);
}

TEST(FitPlda, ScoreMatchesDenseLikelihoodRatio) {
  Rng rng(18);
  const Labeled data = RandomLabeled(4, 20, 5, &rng);
  const PldaModel m = FitPlda(data.x, data.labels, {0, 5}).model;
  for (int i = 0; i < 20; ++i) {
    const Vector a = 2.0 * RandomVector(4, &rng), b = 2.0 * RandomVector(4, &rng);
    EXPECT_NEAR(PldaScore(m, a, b), DensePldaLlr(m, a, b), 1e-9);
  }
}

TEST(FitPlda, ScoreIsSymmetric) {
  Rng rng(19);
  const Labeled data = RandomLabeled(5, 15, 4, &rng);
  const PldaModel m = FitPlda(data.x, data.labels, {3, 5}).model;
  for (int i = 0; i < 50; ++i) {
    const Vector a = 3.0 * RandomVector(5, &rng), b = 3.0 * RandomVector(5, &rng);
    EXPECT_NEAR(PldaScore(m, a, b), PldaScore(m, b, a), 1e-10);
  }
}

TEST(FitPlda, SameClassOutscoresFarSample) {
  Rng rng(20);
  const Matrix between = 3.0 * Matrix::Identity(4, 4);
  const Matrix within = 0.5 * Matrix::Identity(4, 4);
  const Labeled data = GaussianClasses(between, within, 50, 6, &rng);
  const PldaModel m = FitPlda(data.x, data.labels, {0, 10}).model;
  for (int i = 0; i < 20; ++i) {
    const Vector mean = between * RandomVector(4, &rng);
    const Vector m1 = mean + within * RandomVector(4, &rng);
    const Vector near = mean + within * RandomVector(4, &rng);
    const Vector far = mean + 4.0 * between * RandomVector(4, &rng).normalized();
    EXPECT_GT(PldaScore(m, m1, near), PldaScore(m, m1, far));
  }
}

TEST(FitPlda, RecoversGeneratingCovariances) {
  Rng rng(21);
  Matrix between_chol(4, 4), within_chol(4, 4);
  between_chol << 2.0, 0, 0, 0, 0.5, 1.5, 0, 0, -0.3, 0.2, 1.0, 0, 0.1, 0.4, -0.2, 0.8;
  within_chol << 1.0, 0, 0, 0, 0.3, 0.7, 0, 0, 0.0, -0.2, 0.6, 0, 0.2, 0.1, 0.1, 0.5;
  const Labeled data = GaussianClasses(between_chol, within_chol, 1000, 5, &rng);
  const PldaFitResult r = FitPlda(data.x, data.labels, {0, 50});
  const Matrix b = between_chol * between_chol.transpose();
  const Matrix w = within_chol * within_chol.transpose();
  const double eb = (r.model.BetweenCov() - b).norm() / b.norm();
  const double ew = (r.model.within_cov - w).norm() / w.norm();
  RecordProperty("between_rel_error", std::to_string(eb));
  RecordProperty("within_rel_error", std::to_string(ew));
  EXPECT_LT(eb, 0.10);
  EXPECT_LT(ew, 0.10);
  EXPECT_FALSE(r.regularized);
}

TEST(FitPlda, LogLikelihoodIsNonDecreasing) {
  Rng rng(22);
  for (int latent : {0, 2}) {
    const Labeled data = RandomLabeled(5, 30, 4, &rng);
    const PldaFitResult r = FitPlda(data.x, data.labels, {latent, 25});
    ASSERT_EQ(r.log_likelihoods.size(), 26u);
    for (std::size_t i = 1; i < r.log_likelihoods.size(); ++i)
      EXPECT_GE(r.log_likelihoods[i],
                r.log_likelihoods[i - 1] - 1e-6 * std::abs(r.log_likelihoods[i - 1]))
          << "latent " << latent << " iteration " << i;
  }
}

TEST(FitPlda, LogLikelihoodMatchesDenseMarginal) {
  Rng rng(23);
  const Labeled data = RandomLabeled(3, 6, 3, &rng);
  const PldaFitResult r = FitPlda(data.x, data.labels, {0, 0});
  const PldaModel &m = r.model;
  // Each class block is jointly Gaussian with covariance I (x) W + 11^T (x) B.
  double ll = 0.0;
  for (int s = 0; s < 6; ++s) {
    Matrix cov(9, 9);
    Vector z(9);
    for (int i = 0; i < 3; ++i) {
      z.segment(3 * i, 3) = data.x.col(s * 3 + i) - m.mean;
      for (int k = 0; k < 3; ++k)
        cov.block(3 * i, 3 * k, 3, 3) =
            m.BetweenCov() + (i == k ? m.within_cov : Matrix::Zero(3, 3));
    }
    ll += testing::LogGaussFull(z, cov);
  }
  EXPECT_NEAR(r.log_likelihoods.front(), ll, 1e-8 * std::abs(ll));
}

TEST(FitPlda, DegenerateWithinIsRegularizedAndReported) {
  Rng rng(24);
  Matrix x = RandomMatrix(3, 12, &rng, 2.0);
  std::vector<int> labels;
  for (int j = 0; j < 12; ++j) labels.push_back(j / 3);
  x.row(2).setZero();
  const PldaFitResult r = FitPlda(x, labels, {0, 3});
  EXPECT_TRUE(r.regularized);
  EXPECT_TRUE(std::isfinite(PldaScore(r.model, x.col(0), x.col(5))));
}

TEST(FitPlda, Errors) {
  Rng rng(25);
  const Matrix x = RandomMatrix(3, 4, &rng);
  const std::vector<int> labels = {0, 1, 2, 3};
  EXPECT_THROW(FitPlda(x, labels, {0, 2}), InsufficientData);
  const std::vector<int> two = {0, 0, 1, 1};
  EXPECT_THROW(FitPlda(x, two, {4, 2}), InvalidArgument);
}

TEST(PldaModelIo, RoundTrip) {
  testing::TempDir dir;
  Rng rng(26);
  const Labeled data = RandomLabeled(4, 10, 4, &rng);
  const PldaModel m = FitPlda(data.x, data.labels, {2, 5}).model;
  SavePldaModel(dir.File("p.svpl"), m);
  const PldaModel back = LoadPldaModel(dir.File("p.svpl"));
  EXPECT_EQ(back.between_basis, m.between_basis);
  EXPECT_EQ(back.within_cov, m.within_cov);
  const Vector a = RandomVector(4, &rng), b = RandomVector(4, &rng);
  EXPECT_EQ(PldaScore(back, a, b), PldaScore(m, a, b));
}

// ---- pipeline -----------------------------------------------------------

TEST(Backend, NamesRoundTrip) {
  for (BackendKind k : AllBackendKinds())
    EXPECT_EQ(ParseBackendKind(BackendName(k)), k);
  EXPECT_FALSE(ParseBackendKind("plda_cosine").has_value());
  EXPECT_EQ(AllBackendKinds().size(), 5u);
}

TEST(Backend, StagesComposeAsDocumented) {
  Rng rng(27);
  const Labeled data = RandomLabeled(6, 10, 6, &rng);
  BackendOptions opts;
  opts.lda_dim = 3;
  const Vector probe = RandomVector(6, &rng), other = RandomVector(6, &rng);

  const Backend cos = Backend::Fit(BackendKind::kCosine, data.x, data.labels, 10, opts);
  EXPECT_EQ(cos.Transform(probe), probe);
  EXPECT_NEAR(cos.Score(probe, other), CosineScore(probe, other), 1e-15);

  const Backend wc = Backend::Fit(BackendKind::kWccnCosine, data.x, data.labels, 10, opts);
  EXPECT_EQ(wc.Transform(probe), ApplyWccn(FitWccn(data.x, data.labels), probe));

  const Backend lda = Backend::Fit(BackendKind::kLdaCosine, data.x, data.labels, 10, opts);
  EXPECT_EQ(lda.Transform(probe).size(), 3);

  const Backend lr = Backend::Fit(BackendKind::kLrCosine, data.x, data.labels, 10, opts);
  const LrModel direct = FitLr(data.x, IndicatorMatrix(data.labels, 10), DefaultRidge(data.x));
  EXPECT_LT((lr.Transform(probe) - LrTransform(direct, probe)).cwiseAbs().maxCoeff(), 1e-12);

  const Backend plda = Backend::Fit(BackendKind::kLdaPlda, data.x, data.labels, 10, opts);
  const Vector pa = plda.Transform(probe), pb = plda.Transform(other);
  EXPECT_EQ(pa.size(), 3);
  EXPECT_EQ(plda.Score(pa, pb), PldaScore(*plda.plda(), pa, pb));

  std::vector<Vector> utts = {probe, other};
  const SpeakerModel sm = lr.Enroll(utts);
  EXPECT_EQ(sm.n_utts, 2);
  EXPECT_LT((sm.m - 0.5 * (lr.Transform(probe) + lr.Transform(other))).cwiseAbs().maxCoeff(),
            1e-14);
}

TEST(Backend, SaveLoadPreservesScores) {
  testing::TempDir dir;
  Rng rng(28);
  const Labeled data = RandomLabeled(5, 8, 6, &rng);
  BackendOptions opts;
  opts.lda_dim = 3;
  for (BackendKind k : AllBackendKinds()) {
    const Backend fit = Backend::Fit(k, data.x, data.labels, 8, opts);
    const std::string sub = dir.File(std::string(BackendName(k)));
    fit.Save(sub);
    const Backend back = Backend::Load(k, sub);
    const Vector a = fit.Transform(data.x.col(0)), b = fit.Transform(data.x.col(9));
    EXPECT_EQ(back.Transform(data.x.col(0)), a) << BackendName(k);
    EXPECT_EQ(back.Score(a, b), fit.Score(a, b)) << BackendName(k);
  }
}

}  // namespace
}  // namespace svtk
