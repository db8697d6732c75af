// svtk/dvector.h

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

#ifndef SVTK_DVECTOR_H_
#define SVTK_DVECTOR_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "svtk/base.h"
#include "svtk/data.h"
#include "svtk/gmm.h"

namespace svtk {

struct MlpLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

// Feed-forward frame classifier: rectified-linear hidden layers followed by a
// softmax output layer (the last entry of `layers`).
struct Mlp {
  std::vector<MlpLayer> layers;

  Eigen::Index InputDim() const { return layers.front().weight.cols(); }
  Eigen::Index OutputDim() const { return layers.back().weight.rows(); }
  std::size_t NumHidden() const { return layers.size() - 1; }
  Eigen::Index TopHiddenDim() const;

  // Throws InvalidArgument unless the layer shapes chain and all parameters
  // are finite. At least one hidden layer is required.
  void Validate() const;
};

// "SVN1": u32 layer count, then (u32 out, u32 in) per layer, then for each
// layer the weights row-major and the biases, all f64.
void SaveMlp(const std::string &path, const Mlp &mlp);
Mlp LoadMlp(const std::string &path);

// He-normal weights and zero biases, drawn from `seed`.
Mlp InitializeMlp(Eigen::Index input_dim, std::span<const int> hidden,
                  Eigen::Index num_classes, std::uint64_t seed);

struct ForwardResult {
  std::vector<Vector> hidden;  // post-ReLU activations, one per hidden layer
  Vector posteriors;           // softmax output
};

// Inference pass for one stacked frame; dropout is never applied.
ForwardResult Forward(const Mlp &mlp, const Vector &input);

// Batched inference over the rows of `inputs`.
// Top hidden activations (N x H) and posteriors (N x S).
void ForwardBatch(const Mlp &mlp, const Matrix &inputs, Matrix *top_hidden,
                  Matrix *posteriors);

struct MlpGradients {
  std::vector<Matrix> weight;
  std::vector<Vector> bias;
};

// Mean cross-entropy of `inputs` (one sample per row) against class labels,
// and its gradient. `dropout_masks`, when given, holds one (width x N) matrix
// per hidden layer whose entries multiply the activations.
double LossAndGradient(const Mlp &mlp, const Matrix &inputs,
                       std::span<const int> labels, MlpGradients *grad,
                       const std::vector<Matrix> *dropout_masks = nullptr);

struct MlpHyper {
  std::vector<int> hidden = {400, 400, 400, 400};
  double learning_rate = 0.008;
  double momentum_initial = 0.5;
  double momentum_final = 0.9;
  int momentum_switch_epoch = 10;  // first epoch using momentum_final
  double dropout = 0.2;
  int batch_size = 512;
  int epochs = 50;
  int frame_stride = 1;  // train on every k-th frame
  std::uint64_t seed = 1;

  void Validate() const;
};

struct MlpTrainResult {
  Mlp mlp;
  // Mean training cross-entropy per epoch, measured with dropout active.
  std::vector<double> epoch_losses;
};

// Minibatch SGD with momentum and inverted dropout on the hidden units.
// Shuffling and dropout draw from separate seeded streams, so the result is
// a pure function of the inputs and hyper.seed. `labels` holds one class per
// utterance in [0, num_classes).
MlpTrainResult TrainMlp(std::span<const FrameMatrix> utterances,
                        std::span<const int> labels, int num_classes,
                        int half_window, const MlpHyper &hyper);

struct DVector {
  std::string utterance_id;
  Vector x;
};

// Mean of the top hidden-layer activations over the context-stacked frames.
DVector ExtractDvector(const Mlp &mlp, const FrameMatrix &features,
                       int half_window);

// Softmax outputs of every context-stacked frame, usable as alignments for
// UbmFromPosteriors.
PosteriorMatrix FramePosteriors(const Mlp &mlp, const FrameMatrix &features,
                                int half_window);

}  // namespace svtk

#endif  // SVTK_DVECTOR_H_
