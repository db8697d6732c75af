// core/src/wccn-lda.cc

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
#include <sstream>

#include "svtk/backend.h"
#include "svtk/binary-io.h"

namespace svtk {

namespace {

struct ClassMeans {
  Matrix means;              // D x S
  std::vector<int> counts;   // S
};

ClassMeans ComputeClassMeans(const Matrix &x, std::span<const int> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != x.cols())
    throw DimensionMismatch("one label per embedding column is required");
  if (x.cols() == 0) throw InsufficientData("no embeddings");
  int num_classes = 0;
  for (int l : labels) {
    if (l < 0) throw InvalidArgument("labels must be nonnegative");
    num_classes = std::max(num_classes, l + 1);
  }
  ClassMeans cm;
  cm.means = Matrix::Zero(x.rows(), num_classes);
  cm.counts.assign(static_cast<std::size_t>(num_classes), 0);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const int l = labels[static_cast<std::size_t>(j)];
    cm.means.col(l) += x.col(j);
    ++cm.counts[static_cast<std::size_t>(l)];
  }
  for (int s = 0; s < num_classes; ++s)
    if (cm.counts[static_cast<std::size_t>(s)] > 0)
      cm.means.col(s) /= cm.counts[static_cast<std::size_t>(s)];
  return cm;
}

}  // namespace

Matrix AverageWithinClassCovariance(const Matrix &x,
                                    std::span<const int> labels) {
  ClassMeans cm = ComputeClassMeans(x, labels);
  const Eigen::Index num_classes = cm.means.cols();
  std::vector<Matrix> scatter(static_cast<std::size_t>(num_classes),
                              Matrix::Zero(x.rows(), x.rows()));
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const int l = labels[static_cast<std::size_t>(j)];
    const Vector d = x.col(j) - cm.means.col(l);
    scatter[static_cast<std::size_t>(l)].noalias() += d * d.transpose();
  }
  Matrix avg = Matrix::Zero(x.rows(), x.rows());
  int used = 0;
  for (Eigen::Index s = 0; s < num_classes; ++s) {
    const int n = cm.counts[static_cast<std::size_t>(s)];
    if (n < 2) continue;
    avg += scatter[static_cast<std::size_t>(s)] / static_cast<double>(n);
    ++used;
  }
  if (used == 0)
    throw InsufficientData(
        "within-class covariance needs a class with at least two samples");
  return avg / static_cast<double>(used);
}

WccnModel FitWccn(const Matrix &x, std::span<const int> labels, double ridge) {
  Matrix w = AverageWithinClassCovariance(x, labels);
  w.diagonal().array() += ridge;
  // W = G G^T  =>  W^-1 = G^-T G^-1, so B = G^-T satisfies B B^T = W^-1.
  Eigen::LLT<Matrix> llt(w);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-13)
    throw SingularMatrix(
        "average within-class covariance is singular; use a positive ridge");
  const Matrix g_inv = llt.matrixL().solve(Matrix::Identity(w.rows(), w.cols()));
  return {g_inv.transpose()};
}

Vector ApplyWccn(const WccnModel &model, const Vector &x) {
  if (x.size() != model.b.rows())
    throw DimensionMismatch("embedding dimension does not match WCCN model");
  return model.b.transpose() * x;
}

void SaveWccnModel(const std::string &path, const WccnModel &model) {
  BinaryWriter w(path, "SVWC");
  w.WriteU32(static_cast<std::uint32_t>(model.b.rows()));
  w.WriteMatrixF64(model.b);
  w.Close();
}

WccnModel LoadWccnModel(const std::string &path) {
  BinaryReader r(path, "SVWC");
  const auto d = static_cast<Eigen::Index>(r.ReadU32());
  if (r.Remaining() != static_cast<std::uint64_t>(d * d) * 8)
    throw FormatError(path + ": payload size mismatch");
  return {r.ReadMatrixF64(d, d)};
}

Scatter ComputeScatter(const Matrix &x, std::span<const int> labels) {
  ClassMeans cm = ComputeClassMeans(x, labels);
  const Vector mu = x.rowwise().mean();
  const double n = static_cast<double>(x.cols());
  Scatter sc;
  sc.within = Matrix::Zero(x.rows(), x.rows());
  sc.between = Matrix::Zero(x.rows(), x.rows());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const Vector d = x.col(j) - cm.means.col(labels[static_cast<std::size_t>(j)]);
    sc.within.noalias() += d * d.transpose();
  }
  for (Eigen::Index s = 0; s < cm.means.cols(); ++s) {
    const int count = cm.counts[static_cast<std::size_t>(s)];
    if (count == 0) continue;
    const Vector d = cm.means.col(s) - mu;
    sc.between.noalias() += static_cast<double>(count) * d * d.transpose();
  }
  sc.within /= n;
  sc.between /= n;
  return sc;
}

LdaModel FitLda(const Matrix &x, std::span<const int> labels, int out_dim) {
  if (out_dim < 1) throw InvalidArgument("LDA output dimension must be >= 1");
  Scatter sc = ComputeScatter(x, labels);
  int populated = 0;
  {
    ClassMeans cm = ComputeClassMeans(x, labels);
    for (int c : cm.counts) populated += c > 0;
  }
  if (populated < 2) throw InsufficientData("LDA needs at least 2 classes");

  Eigen::LLT<Matrix> check(sc.within);
  if (check.info() != Eigen::Success || check.rcond() < 1e-13)
    throw SingularMatrix("within-class scatter is singular");
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> solver(
      sc.between, sc.within, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (solver.info() != Eigen::Success)
    throw SingularMatrix("generalized eigenproblem failed");
  // Eigen sorts ascending; take from the end.
  const Vector &ev = solver.eigenvalues();
  const Eigen::Index dim = x.rows();
  const double top = std::max(ev(dim - 1), 0.0);
  int rank = 0;
  for (Eigen::Index i = 0; i < dim; ++i)
    if (ev(i) > 1e-10 * std::max(top, 1.0)) ++rank;
  rank = std::min({rank, static_cast<int>(dim), populated - 1});
  if (rank == 0)
    throw InvalidArgument(
        "between-class scatter is zero (all class means coincide); "
        "achievable LDA rank is 0");
  if (out_dim > rank) {
    std::ostringstream msg;
    msg << "LDA output dimension " << out_dim << " exceeds the achievable rank "
        << rank << " (min of D=" << dim << ", S-1=" << populated - 1
        << " and the between-class scatter rank)";
    throw InvalidArgument(msg.str());
  }
  LdaModel model;
  model.w.resize(dim, out_dim);
  model.eigenvalues.resize(out_dim);
  for (int k = 0; k < out_dim; ++k) {
    model.w.col(k) = solver.eigenvectors().col(dim - 1 - k);
    model.eigenvalues(k) = ev(dim - 1 - k);
  }
  return model;
}

Vector ApplyLda(const LdaModel &model, const Vector &x) {
  if (x.size() != model.w.rows())
    throw DimensionMismatch("embedding dimension does not match LDA model");
  return model.w.transpose() * x;
}

void SaveLdaModel(const std::string &path, const LdaModel &model) {
  BinaryWriter w(path, "SVLD");
  w.WriteU32(static_cast<std::uint32_t>(model.w.rows()));
  w.WriteU32(static_cast<std::uint32_t>(model.w.cols()));
  w.WriteMatrixF64(model.w);
  w.WriteVectorF64(model.eigenvalues);
  w.Close();
}

LdaModel LoadLdaModel(const std::string &path) {
  BinaryReader r(path, "SVLD");
  const auto d = static_cast<Eigen::Index>(r.ReadU32());
  const auto k = static_cast<Eigen::Index>(r.ReadU32());
  if (r.Remaining() != static_cast<std::uint64_t>(d * k + k) * 8)
    throw FormatError(path + ": payload size mismatch");
  LdaModel model;
  model.w = r.ReadMatrixF64(d, k);
  model.eigenvalues = r.ReadVectorF64(k);
  return model;
}

}  // namespace svtk
