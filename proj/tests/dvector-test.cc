// tests/dvector-test.cc

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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oracles.h"
#include "svtk/dvector.h"
#include "test-util.h"

namespace svtk {
namespace {

using testing::RandomMatrix;
using testing::RandomVector;

Mlp RandomMlp(Eigen::Index in, std::vector<int> hidden, Eigen::Index out,
              Rng *rng) {
  Mlp mlp = InitializeMlp(in, hidden, out, 1);
  for (auto &layer : mlp.layers) {
    layer.weight = RandomMatrix(layer.weight.rows(), layer.weight.cols(), rng, 0.7);
    layer.bias = RandomVector(layer.bias.size(), rng, 0.3);
  }
  return mlp;
}

// Two speakers split by the sign of the first feature.
struct Toy {
  std::vector<FrameMatrix> utts;
  std::vector<int> labels;
};

Toy SeparableToy(std::uint64_t seed) {
  Rng rng(seed);
  Toy toy;
  for (int u = 0; u < 6; ++u) {
    const int spk = u % 2;
    FrameMatrix fm{"u" + std::to_string(u), RandomMatrix(40, 3, &rng, 0.3)};
    fm.frames.col(0).array() += spk == 0 ? 1.0 : -1.0;
    toy.utts.push_back(std::move(fm));
    toy.labels.push_back(spk);
  }
  return toy;
}

TEST(Forward, ZeroNetworkGivesUniformPosteriors) {
  Mlp mlp = InitializeMlp(4, std::vector<int>{5, 3}, 6, 1);
  for (auto &layer : mlp.layers) {
    layer.weight.setZero();
    layer.bias.setZero();
  }
  Rng rng(1);
  const ForwardResult r = Forward(mlp, RandomVector(4, &rng));
  EXPECT_LT((r.posteriors.array() - 1.0 / 6.0).abs().maxCoeff(), 1e-15);
  ASSERT_EQ(r.hidden.size(), 2u);
}

TEST(Forward, HandComputedTwoByTwo) {
  Mlp mlp;
  mlp.layers.push_back({Matrix::Identity(2, 2), Vector::Zero(2)});
  mlp.layers.push_back({Matrix::Identity(2, 2), Vector::Zero(2)});
  Vector x(2);
  x << -1.0, 2.0;
  const ForwardResult r = Forward(mlp, x);
  // ReLU zeroes the first unit; softmax of (0, 2).
  EXPECT_EQ(r.hidden[0](0), 0.0);
  EXPECT_EQ(r.hidden[0](1), 2.0);
  const double e2 = std::exp(2.0);
  EXPECT_NEAR(r.posteriors(0), 1.0 / (1.0 + e2), 1e-15);
  EXPECT_NEAR(r.posteriors(1), e2 / (1.0 + e2), 1e-15);
}

TEST(Forward, PosteriorsAreNormalized) {
  Rng rng(2);
  const Mlp mlp = RandomMlp(6, {10, 7}, 5, &rng);
  for (int i = 0; i < 100; ++i) {
    const ForwardResult r = Forward(mlp, RandomVector(6, &rng, 3.0));
    EXPECT_NEAR(r.posteriors.sum(), 1.0, 1e-8);
    EXPECT_GE(r.posteriors.minCoeff(), 0.0);
  }
}

TEST(Forward, BatchAgreesWithSingleFrames) {
  Rng rng(3);
  const Mlp mlp = RandomMlp(4, {6, 5}, 3, &rng);
  const Matrix inputs = RandomMatrix(9, 4, &rng);
  Matrix top, post;
  ForwardBatch(mlp, inputs, &top, &post);
  for (int i = 0; i < 9; ++i) {
    const ForwardResult r = Forward(mlp, inputs.row(i).transpose());
    EXPECT_LT((top.row(i).transpose() - r.hidden.back()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((post.row(i).transpose() - r.posteriors).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Forward, WidthMismatchThrows) {
  Rng rng(4);
  const Mlp mlp = RandomMlp(4, {3}, 2, &rng);
  EXPECT_THROW(Forward(mlp, Vector::Zero(5)), DimensionMismatch);
}

TEST(LossAndGradient, MatchesCentralDifferences) {
  Rng rng(5);
  const Mlp mlp = RandomMlp(4, {6, 5}, 3, &rng);
  const Matrix inputs = RandomMatrix(5, 4, &rng);
  const std::vector<int> labels = {0, 2, 1, 1, 0};
  MlpGradients analytic;
  LossAndGradient(mlp, inputs, labels, &analytic);
  const MlpGradients numeric = testing::NumericalGradient(mlp, inputs, labels, 1e-5);
  EXPECT_LE(testing::MaxRelativeError(analytic, numeric), 1e-5);
}

TEST(LossAndGradient, LossIsMeanCrossEntropy) {
  Rng rng(6);
  const Mlp mlp = RandomMlp(3, {4}, 3, &rng);
  const Matrix inputs = RandomMatrix(4, 3, &rng);
  const std::vector<int> labels = {2, 0, 1, 2};
  double expect = 0.0;
  for (int i = 0; i < 4; ++i)
    expect -= std::log(Forward(mlp, inputs.row(i).transpose()).posteriors(labels[i]));
  EXPECT_NEAR(LossAndGradient(mlp, inputs, labels, nullptr), expect / 4.0, 1e-12);
}

TEST(ExtractDvector, SingleFrameIsTopActivation) {
  Rng rng(7);
  const Mlp mlp = RandomMlp(3, {5, 4}, 2, &rng);
  const FrameMatrix fm{"u", RandomMatrix(1, 3, &rng)};
  const DVector d = ExtractDvector(mlp, fm, 0);
  EXPECT_EQ(d.utterance_id, "u");
  EXPECT_LT((d.x - Forward(mlp, fm.frames.row(0).transpose()).hidden.back())
                .cwiseAbs().maxCoeff(),
            1e-12);
}

TEST(ExtractDvector, IdenticalFramesGiveFrameActivation) {
  Rng rng(8);
  const Mlp mlp = RandomMlp(9, {5}, 2, &rng);
  const Matrix row = RandomMatrix(1, 3, &rng);
  const FrameMatrix fm{"u", row.replicate(6, 1)};
  const Vector single = Forward(mlp, row.replicate(1, 3).transpose()).hidden.back();
  EXPECT_LT((ExtractDvector(mlp, fm, 1).x - single).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ExtractDvector, ThreeFramesAverageOfStackedRows) {
  Rng rng(9);
  const Mlp mlp = RandomMlp(6, {5, 4}, 2, &rng);
  const FrameMatrix fm{"u", RandomMatrix(3, 2, &rng)};
  const FrameMatrix stacked = StackContext(fm, 1);
  Vector expect = Vector::Zero(4);
  for (int l = 0; l < 3; ++l) expect += Forward(mlp, stacked.frames.row(l).transpose()).hidden.back();
  expect /= 3.0;
  EXPECT_LT((ExtractDvector(mlp, fm, 1).x - expect).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ExtractDvector, InvariantToPermutingStackedRows) {
  Rng rng(10);
  const Mlp mlp = RandomMlp(8, {6}, 3, &rng);
  const FrameMatrix fm{"u", RandomMatrix(12, 8, &rng)};
  std::vector<int> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  rng.Shuffle(&perm);
  FrameMatrix shuffled{"u", Matrix(12, 8)};
  for (int l = 0; l < 12; ++l) shuffled.frames.row(l) = fm.frames.row(perm[l]);
  EXPECT_LT((ExtractDvector(mlp, fm, 0).x - ExtractDvector(mlp, shuffled, 0).x)
                .cwiseAbs().maxCoeff(),
            1e-12);
}

TEST(FramePosteriors, RowsSumToOne) {
  Rng rng(11);
  const Mlp mlp = RandomMlp(6, {5}, 4, &rng);
  const PosteriorMatrix p = FramePosteriors(mlp, {"u", RandomMatrix(10, 2, &rng)}, 1);
  ASSERT_EQ(p.gammas.rows(), 10);
  ASSERT_EQ(p.gammas.cols(), 4);
  EXPECT_LT((p.gammas.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
}

MlpHyper ToyHyper() {
  MlpHyper h;
  h.hidden = {8};
  h.batch_size = 32;
  h.epochs = 50;
  h.seed = 3;
  return h;
}

TEST(TrainMlp, ZeroEpochsReturnsInitialization) {
  const Toy toy = SeparableToy(12);
  MlpHyper h = ToyHyper();
  h.epochs = 0;
  const MlpTrainResult r = TrainMlp(toy.utts, toy.labels, 2, 1, h);
  const Mlp init = InitializeMlp(9, h.hidden, 2, h.seed);
  ASSERT_EQ(r.mlp.layers.size(), init.layers.size());
  for (std::size_t k = 0; k < init.layers.size(); ++k) {
    EXPECT_EQ(r.mlp.layers[k].weight, init.layers[k].weight);
    EXPECT_EQ(r.mlp.layers[k].bias, init.layers[k].bias);
  }
  EXPECT_TRUE(r.epoch_losses.empty());
}

TEST(TrainMlp, LearnsSeparableToy) {
  const Toy toy = SeparableToy(13);
  const MlpTrainResult r = TrainMlp(toy.utts, toy.labels, 2, 0, ToyHyper());
  int correct = 0, total = 0;
  for (std::size_t u = 0; u < toy.utts.size(); ++u) {
    const PosteriorMatrix p = FramePosteriors(r.mlp, toy.utts[u], 0);
    for (Eigen::Index l = 0; l < p.gammas.rows(); ++l) {
      Eigen::Index arg;
      p.gammas.row(l).maxCoeff(&arg);
      correct += arg == toy.labels[u];
      ++total;
    }
  }
  EXPECT_GE(static_cast<double>(correct) / total, 0.95);
  EXPECT_LE(r.epoch_losses.back(), r.epoch_losses.front());
}

TEST(TrainMlp, DeterministicForSeed) {
  const Toy toy = SeparableToy(14);
  MlpHyper h = ToyHyper();
  h.epochs = 5;
  const Mlp a = TrainMlp(toy.utts, toy.labels, 2, 1, h).mlp;
  const Mlp b = TrainMlp(toy.utts, toy.labels, 2, 1, h).mlp;
  for (std::size_t k = 0; k < a.layers.size(); ++k) {
    EXPECT_EQ(a.layers[k].weight, b.layers[k].weight);
    EXPECT_EQ(a.layers[k].bias, b.layers[k].bias);
  }
}

TEST(TrainMlp, SyntheticCorpusLossDecreases) {
  SynthSpec spec;
  spec.n_speakers = 6;
  spec.utts_per_speaker = 3;
  spec.frames_per_utt = 60;
  spec.feature_dim = 5;
  const Corpus corpus = SynthesizeCorpus(spec);
  std::vector<int> labels;
  for (const auto &u : corpus.index.utterances())
    labels.push_back(static_cast<int>(corpus.index.SpeakerIndex(u.speaker_id)));
  MlpHyper h;
  h.hidden = {16, 16};
  h.batch_size = 64;
  h.epochs = 15;
  const MlpTrainResult r = TrainMlp(corpus.features, labels, 6, 2, h);
  ASSERT_EQ(r.epoch_losses.size(), 15u);
  EXPECT_LE(r.epoch_losses.back(), r.epoch_losses.front());
}

TEST(TrainMlp, Errors) {
  const Toy toy = SeparableToy(15);
  std::vector<int> one_class(toy.labels.size(), 0);
  EXPECT_THROW(TrainMlp(toy.utts, one_class, 2, 0, ToyHyper()), InsufficientData);
  EXPECT_THROW(TrainMlp(toy.utts, toy.labels, 1, 0, ToyHyper()), InsufficientData);
  std::vector<int> short_labels = {0, 1};
  EXPECT_THROW(TrainMlp(toy.utts, short_labels, 2, 0, ToyHyper()), DimensionMismatch);
  MlpHyper bad = ToyHyper();
  bad.dropout = 1.0;
  EXPECT_THROW(TrainMlp(toy.utts, toy.labels, 2, 0, bad), InvalidArgument);
}

TEST(MlpIo, RoundTrip) {
  testing::TempDir dir;
  Rng rng(16);
  const Mlp mlp = RandomMlp(5, {4, 3}, 2, &rng);
  SaveMlp(dir.File("n.svn"), mlp);
  const Mlp back = LoadMlp(dir.File("n.svn"));
  ASSERT_EQ(back.layers.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(back.layers[k].weight, mlp.layers[k].weight);
    EXPECT_EQ(back.layers[k].bias, mlp.layers[k].bias);
  }
  EXPECT_EQ(testing::ReadBytes(dir.File("n.svn")).substr(0, 4), "SVN1");
}

TEST(Mlp, ValidateRejectsBrokenChains) {
  Rng rng(17);
  Mlp mlp = RandomMlp(5, {4}, 2, &rng);
  mlp.layers[1].weight = Matrix::Zero(2, 3);
  EXPECT_THROW(mlp.Validate(), InvalidArgument);
}

}  // namespace
}  // namespace svtk
