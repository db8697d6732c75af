// core/src/linear-regression.cc

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

#include <algorithm>
#include <cmath>
#include <sstream>

#include "svtk/backend.h"
#include "svtk/binary-io.h"

namespace svtk {

Matrix IndicatorMatrix(std::span<const int> labels, int num_classes) {
  if (num_classes < 1) throw InvalidArgument("need at least one class");
  Matrix y = Matrix::Zero(num_classes, static_cast<Eigen::Index>(labels.size()));
  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (labels[j] < 0 || labels[j] >= num_classes)
      throw InvalidArgument("label out of range: " + std::to_string(labels[j]));
    y(labels[j], static_cast<Eigen::Index>(j)) = 1.0;
  }
  return y;
}

double DefaultRidge(const Matrix &x) {
  if (x.rows() == 0) return 0.0;
  // trace(X X^T) is the squared Frobenius norm of X.
  return 1e-6 * x.squaredNorm() / static_cast<double>(x.rows());
}

LrModel FitLr(const Matrix &x, const Matrix &y, double ridge, bool center) {
  if (x.cols() < 1) throw InsufficientData("regression needs N >= 1");
  if (y.cols() != x.cols()) {
    std::ostringstream msg;
    msg << "X has " << x.cols() << " columns but Y has " << y.cols();
    throw DimensionMismatch(msg.str());
  }
  if (!(ridge >= 0.0)) throw InvalidArgument("ridge must be >= 0");
  LrModel model;
  model.ridge = ridge;
  Matrix xc;
  const Matrix *design = &x;
  if (center) {
    model.center = x.rowwise().mean();
    xc = x.colwise() - model.center;
    design = &xc;
  }
  const Eigen::Index dim = x.rows();
  Matrix gram = Matrix::Zero(dim, dim);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(*design);
  gram = gram.selfadjointView<Eigen::Lower>();
  gram.diagonal().array() += ridge;
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-13) {
    throw SingularMatrix(
        "X X^T + ridge I is singular or nearly so (fewer utterances than "
        "embedding dimensions?); use a positive ridge");
  }
  model.a = llt.solve(*design * y.transpose());
  return model;
}

Vector LrTransform(const LrModel &model, const Vector &x) {
  if (x.size() != model.InputDim()) {
    std::ostringstream msg;
    msg << "embedding has dimension " << x.size() << ", LR model expects "
        << model.InputDim();
    throw DimensionMismatch(msg.str());
  }
  if (model.center.size() == 0) return model.a.transpose() * x;
  return model.a.transpose() * (x - model.center);
}

void SaveLrModel(const std::string &path, const LrModel &model) {
  BinaryWriter w(path, "SVLR");
  w.WriteU32(static_cast<std::uint32_t>(model.InputDim()));
  w.WriteU32(static_cast<std::uint32_t>(model.OutputDim()));
  w.WriteU32(model.center.size() ? 1u : 0u);
  w.WriteF64(model.ridge);
  w.WriteMatrixF64(model.a);
  w.WriteVectorF64(model.center);
  w.Close();
}

LrModel LoadLrModel(const std::string &path) {
  BinaryReader r(path, "SVLR");
  const auto d = static_cast<Eigen::Index>(r.ReadU32());
  const auto s = static_cast<Eigen::Index>(r.ReadU32());
  const std::uint32_t centered = r.ReadU32();
  if (centered > 1) throw FormatError(path + ": bad centering flag");
  LrModel model;
  model.ridge = r.ReadF64();
  if (r.Remaining() != static_cast<std::uint64_t>(d * s + (centered ? d : 0)) * 8)
    throw FormatError(path + ": payload size mismatch");
  model.a = r.ReadMatrixF64(d, s);
  if (centered) model.center = r.ReadVectorF64(d);
  return model;
}

SpeakerModel MakeSpeakerModel(std::span<const Vector> transformed) {
  if (transformed.empty())
    throw InvalidArgument("speaker model needs at least one utterance");
  SpeakerModel model;
  model.m = Vector::Zero(transformed.front().size());
  for (const auto &v : transformed) {
    if (v.size() != model.m.size())
      throw DimensionMismatch("utterance vectors differ in dimension");
    model.m += v;
  }
  model.n_utts = static_cast<int>(transformed.size());
  model.m /= static_cast<double>(model.n_utts);
  return model;
}

double CosineScore(const Vector &a, const Vector &b) {
  if (a.size() != b.size())
    throw DimensionMismatch("cosine scoring of vectors of different sizes");
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0)
    throw InvalidArgument("cosine score of a zero-norm vector");
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

}  // namespace svtk
