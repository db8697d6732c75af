// core/src/dvector.cc

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

#include "svtk/dvector.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "svtk/binary-io.h"
#include "svtk/rng.h"

namespace svtk {

namespace {

// Column-wise softmax, stable under large logits.
void SoftmaxColumns(Matrix *logits) {
  for (Eigen::Index j = 0; j < logits->cols(); ++j) {
    auto col = logits->col(j);
    const double peak = col.maxCoeff();
    col = (col.array() - peak).exp();
    col /= col.sum();
  }
}

void CheckInputWidth(const Mlp &mlp, Eigen::Index width) {
  if (width != mlp.InputDim()) {
    std::ostringstream msg;
    msg << "network input width is " << mlp.InputDim() << ", got " << width;
    throw DimensionMismatch(msg.str());
  }
}

// Frames addressed as (utterance, row), stacked with edge replication on
// demand so the full context matrix is never materialized.
class ContextBatcher {
 public:
  ContextBatcher(std::span<const FrameMatrix> utts, int half_window)
      : utts_(utts), half_window_(half_window),
        dim_(utts.front().Dim()) {}

  Eigen::Index Width() const { return (2 * half_window_ + 1) * dim_; }

  // Fills row i of *out with the stacked frame (u, l).
  void Fill(std::size_t u, Eigen::Index l, Eigen::Index i, Matrix *out) const {
    const Matrix &f = utts_[u].frames;
    const Eigen::Index last = f.rows() - 1;
    for (int k = -half_window_; k <= half_window_; ++k) {
      const Eigen::Index src = std::clamp<Eigen::Index>(l + k, 0, last);
      out->block(i, (k + half_window_) * dim_, 1, dim_) = f.row(src);
    }
  }

 private:
  std::span<const FrameMatrix> utts_;
  int half_window_;
  Eigen::Index dim_;
};

}  // namespace

Eigen::Index Mlp::TopHiddenDim() const {
  return layers[layers.size() - 2].weight.rows();
}

void Mlp::Validate() const {
  if (layers.size() < 2)
    throw InvalidArgument("network needs at least one hidden layer");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const MlpLayer &layer = layers[k];
    if (layer.weight.rows() < 1 || layer.weight.cols() < 1 ||
        layer.bias.size() != layer.weight.rows())
      throw InvalidArgument("layer " + std::to_string(k) + " is malformed");
    if (k > 0 && layer.weight.cols() != layers[k - 1].weight.rows())
      throw InvalidArgument("layer " + std::to_string(k) +
                            " input width does not match previous layer");
    if (!layer.weight.allFinite() || !layer.bias.allFinite())
      throw InvalidArgument("layer " + std::to_string(k) +
                            " has non-finite parameters");
  }
}

void SaveMlp(const std::string &path, const Mlp &mlp) {
  mlp.Validate();
  BinaryWriter w(path, "SVN1");
  w.WriteU32(static_cast<std::uint32_t>(mlp.layers.size()));
  for (const auto &layer : mlp.layers) {
    w.WriteU32(static_cast<std::uint32_t>(layer.weight.rows()));
    w.WriteU32(static_cast<std::uint32_t>(layer.weight.cols()));
  }
  for (const auto &layer : mlp.layers) {
    w.WriteMatrixF64(layer.weight);
    w.WriteVectorF64(layer.bias);
  }
  w.Close();
}

Mlp LoadMlp(const std::string &path) {
  BinaryReader r(path, "SVN1");
  const std::uint32_t count = r.ReadU32();
  if (count < 2 || count > 1024)
    throw FormatError(path + ": implausible layer count");
  std::vector<std::pair<Eigen::Index, Eigen::Index>> dims;
  std::uint64_t params = 0;
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto out = static_cast<Eigen::Index>(r.ReadU32());
    const auto in = static_cast<Eigen::Index>(r.ReadU32());
    dims.emplace_back(out, in);
    params += static_cast<std::uint64_t>(out) * (in + 1);
  }
  if (r.Remaining() != params * 8)
    throw FormatError(path + ": payload size mismatch");
  Mlp mlp;
  for (const auto &[out, in] : dims) {
    MlpLayer layer;
    layer.weight = r.ReadMatrixF64(out, in);
    layer.bias = r.ReadVectorF64(out);
    mlp.layers.push_back(std::move(layer));
  }
  try {
    mlp.Validate();
  } catch (const InvalidArgument &e) {
    throw FormatError(path + ": " + e.what());
  }
  return mlp;
}

Mlp InitializeMlp(Eigen::Index input_dim, std::span<const int> hidden,
                  Eigen::Index num_classes, std::uint64_t seed) {
  if (input_dim < 1 || num_classes < 1 || hidden.empty())
    throw InvalidArgument("network needs inputs, outputs and a hidden layer");
  Rng rng(seed);
  Mlp mlp;
  Eigen::Index in = input_dim;
  std::vector<Eigen::Index> widths(hidden.begin(), hidden.end());
  widths.push_back(num_classes);
  for (std::size_t k = 0; k < widths.size(); ++k) {
    const Eigen::Index out = widths[k];
    if (out < 1) throw InvalidArgument("layer widths must be >= 1");
    const bool is_output = k + 1 == widths.size();
    const double stddev =
        std::sqrt((is_output ? 1.0 : 2.0) / static_cast<double>(in));
    MlpLayer layer;
    layer.weight.resize(out, in);
    for (Eigen::Index i = 0; i < out; ++i)
      for (Eigen::Index j = 0; j < in; ++j)
        layer.weight(i, j) = stddev * rng.Normal();
    layer.bias = Vector::Zero(out);
    mlp.layers.push_back(std::move(layer));
    in = out;
  }
  return mlp;
}

ForwardResult Forward(const Mlp &mlp, const Vector &input) {
  CheckInputWidth(mlp, input.size());
  ForwardResult result;
  Vector act = input;
  for (std::size_t k = 0; k + 1 < mlp.layers.size(); ++k) {
    act = (mlp.layers[k].weight * act + mlp.layers[k].bias).cwiseMax(0.0);
    result.hidden.push_back(act);
  }
  Matrix logits = mlp.layers.back().weight * act + mlp.layers.back().bias;
  SoftmaxColumns(&logits);
  result.posteriors = logits.col(0);
  return result;
}

void ForwardBatch(const Mlp &mlp, const Matrix &inputs, Matrix *top_hidden,
                  Matrix *posteriors) {
  CheckInputWidth(mlp, inputs.cols());
  Matrix act = inputs.transpose();
  for (std::size_t k = 0; k + 1 < mlp.layers.size(); ++k) {
    Matrix z = mlp.layers[k].weight * act;
    z.colwise() += mlp.layers[k].bias;
    act = z.cwiseMax(0.0);
  }
  if (top_hidden) *top_hidden = act.transpose();
  if (posteriors) {
    Matrix logits = mlp.layers.back().weight * act;
    logits.colwise() += mlp.layers.back().bias;
    SoftmaxColumns(&logits);
    *posteriors = logits.transpose();
  }
}

double LossAndGradient(const Mlp &mlp, const Matrix &inputs,
                       std::span<const int> labels, MlpGradients *grad,
                       const std::vector<Matrix> *dropout_masks) {
  CheckInputWidth(mlp, inputs.cols());
  const Eigen::Index batch = inputs.rows();
  if (batch < 1 || static_cast<Eigen::Index>(labels.size()) != batch)
    throw DimensionMismatch("one label per input row is required");
  const std::size_t num_layers = mlp.layers.size();
  const std::size_t num_hidden = num_layers - 1;
  if (dropout_masks && dropout_masks->size() != num_hidden)
    throw DimensionMismatch("one dropout mask per hidden layer is required");

  // Forward, keeping pre-activations and layer inputs.
  std::vector<Matrix> layer_in(num_layers);
  std::vector<Matrix> pre(num_hidden);
  layer_in[0] = inputs.transpose();
  for (std::size_t k = 0; k < num_hidden; ++k) {
    pre[k] = mlp.layers[k].weight * layer_in[k];
    pre[k].colwise() += mlp.layers[k].bias;
    Matrix act = pre[k].cwiseMax(0.0);
    if (dropout_masks) act.array() *= (*dropout_masks)[k].array();
    layer_in[k + 1] = std::move(act);
  }
  Matrix probs = mlp.layers.back().weight * layer_in[num_hidden];
  probs.colwise() += mlp.layers.back().bias;
  SoftmaxColumns(&probs);

  const Eigen::Index classes = mlp.OutputDim();
  double loss = 0.0;
  for (Eigen::Index j = 0; j < batch; ++j) {
    const int y = labels[static_cast<std::size_t>(j)];
    if (y < 0 || y >= classes)
      throw InvalidArgument("label out of range: " + std::to_string(y));
    loss -= std::log(std::max(probs(y, j), 1e-300));
  }
  loss /= static_cast<double>(batch);
  if (!grad) return loss;

  grad->weight.resize(num_layers);
  grad->bias.resize(num_layers);
  // d(loss)/d(logits) = (p - y) / B
  Matrix delta = probs;
  for (Eigen::Index j = 0; j < batch; ++j)
    delta(labels[static_cast<std::size_t>(j)], j) -= 1.0;
  delta /= static_cast<double>(batch);
  for (std::size_t k = num_layers; k-- > 0;) {
    grad->weight[k] = delta * layer_in[k].transpose();
    grad->bias[k] = delta.rowwise().sum();
    if (k == 0) break;
    Matrix back = mlp.layers[k].weight.transpose() * delta;
    const std::size_t h = k - 1;
    if (dropout_masks) back.array() *= (*dropout_masks)[h].array();
    back.array() *= (pre[h].array() > 0.0).cast<double>();
    delta = std::move(back);
  }
  return loss;
}

void MlpHyper::Validate() const {
  if (hidden.empty()) throw InvalidArgument("at least one hidden layer");
  for (int h : hidden)
    if (h < 1) throw InvalidArgument("hidden widths must be >= 1");
  if (!(learning_rate > 0)) throw InvalidArgument("learning rate must be > 0");
  if (momentum_initial < 0 || momentum_initial >= 1 || momentum_final < 0 ||
      momentum_final >= 1)
    throw InvalidArgument("momentum must be in [0, 1)");
  if (dropout < 0 || dropout >= 1)
    throw InvalidArgument("dropout rate must be in [0, 1)");
  if (batch_size < 1 || epochs < 0 || frame_stride < 1)
    throw InvalidArgument("batch size, epochs and frame stride out of range");
}

MlpTrainResult TrainMlp(std::span<const FrameMatrix> utterances,
                        std::span<const int> labels, int num_classes,
                        int half_window, const MlpHyper &hyper) {
  hyper.Validate();
  if (utterances.empty() || utterances.size() != labels.size())
    throw DimensionMismatch("one label per utterance is required");
  if (num_classes < 2)
    throw InsufficientData("frame classifier needs at least 2 classes");
  if (half_window < 0) throw InvalidArgument("half_window must be >= 0");
  const Eigen::Index dim = utterances.front().Dim();
  std::vector<std::pair<std::size_t, Eigen::Index>> samples;
  std::vector<bool> seen(static_cast<std::size_t>(num_classes), false);
  for (std::size_t u = 0; u < utterances.size(); ++u) {
    utterances[u].Validate();
    if (utterances[u].Dim() != dim)
      throw DimensionMismatch("utterance '" + utterances[u].utterance_id +
                              "' has a different feature dimension");
    if (labels[u] < 0 || labels[u] >= num_classes)
      throw InvalidArgument("label out of range for utterance '" +
                            utterances[u].utterance_id + "'");
    seen[static_cast<std::size_t>(labels[u])] = true;
    for (Eigen::Index l = 0; l < utterances[u].NumFrames(); l += hyper.frame_stride)
      samples.emplace_back(u, l);
  }
  if (std::count(seen.begin(), seen.end(), true) < 2)
    throw InsufficientData("frame classifier needs frames of >= 2 classes");

  ContextBatcher batcher(utterances, half_window);
  MlpTrainResult result;
  result.mlp = InitializeMlp(batcher.Width(), hyper.hidden, num_classes,
                             hyper.seed);
  Mlp &mlp = result.mlp;
  Rng shuffle_rng(MixSeed(hyper.seed, 1));
  Rng dropout_rng(MixSeed(hyper.seed, 2));
  const double keep = 1.0 - hyper.dropout;

  std::vector<Matrix> vel_w, vel_b;
  for (const auto &layer : mlp.layers) {
    vel_w.push_back(Matrix::Zero(layer.weight.rows(), layer.weight.cols()));
    vel_b.push_back(Vector::Zero(layer.bias.size()));
  }

  const std::size_t total = samples.size();
  std::vector<std::size_t> order(total);
  for (std::size_t i = 0; i < total; ++i) order[i] = i;
  MlpGradients grad;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    const double momentum = epoch < hyper.momentum_switch_epoch
                                ? hyper.momentum_initial
                                : hyper.momentum_final;
    shuffle_rng.Shuffle(&order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < total;
         start += static_cast<std::size_t>(hyper.batch_size)) {
      const std::size_t end =
          std::min(total, start + static_cast<std::size_t>(hyper.batch_size));
      const auto b = static_cast<Eigen::Index>(end - start);
      Matrix inputs(b, batcher.Width());
      std::vector<int> batch_labels(static_cast<std::size_t>(b));
      for (Eigen::Index i = 0; i < b; ++i) {
        const auto &[u, l] = samples[order[start + static_cast<std::size_t>(i)]];
        batcher.Fill(u, l, i, &inputs);
        batch_labels[static_cast<std::size_t>(i)] = labels[u];
      }
      std::vector<Matrix> masks;
      const std::vector<Matrix> *mask_ptr = nullptr;
      if (hyper.dropout > 0.0) {
        for (std::size_t k = 0; k < mlp.NumHidden(); ++k) {
          Matrix m(mlp.layers[k].weight.rows(), b);
          for (Eigen::Index j = 0; j < b; ++j)
            for (Eigen::Index i = 0; i < m.rows(); ++i)
              m(i, j) = dropout_rng.Uniform() < keep ? 1.0 / keep : 0.0;
          masks.push_back(std::move(m));
        }
        mask_ptr = &masks;
      }
      const double loss =
          LossAndGradient(mlp, inputs, batch_labels, &grad, mask_ptr);
      loss_sum += loss * static_cast<double>(b);
      for (std::size_t k = 0; k < mlp.layers.size(); ++k) {
        vel_w[k] = momentum * vel_w[k] - hyper.learning_rate * grad.weight[k];
        vel_b[k] = momentum * vel_b[k] - hyper.learning_rate * grad.bias[k];
        mlp.layers[k].weight += vel_w[k];
        mlp.layers[k].bias += vel_b[k];
      }
    }
    result.epoch_losses.push_back(loss_sum / static_cast<double>(total));
  }
  return result;
}

DVector ExtractDvector(const Mlp &mlp, const FrameMatrix &features,
                       int half_window) {
  FrameMatrix stacked = StackContext(features, half_window);
  Matrix hidden;
  ForwardBatch(mlp, stacked.frames, &hidden, nullptr);
  return {features.utterance_id, hidden.colwise().mean().transpose()};
}

PosteriorMatrix FramePosteriors(const Mlp &mlp, const FrameMatrix &features,
                                int half_window) {
  FrameMatrix stacked = StackContext(features, half_window);
  PosteriorMatrix out;
  ForwardBatch(mlp, stacked.frames, nullptr, &out.gammas);
  return out;
}

}  // namespace svtk
