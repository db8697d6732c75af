// core/src/plda.cc

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
#include <numbers>
#include <sstream>

#include "svtk/backend.h"
#include "svtk/binary-io.h"

namespace svtk {

namespace {

double LogDet(const Eigen::LLT<Matrix> &llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

// Factors `m`, loading its diagonal until it is positive definite.
// Returns true when loading was needed.
bool FactorWithLoading(Matrix *m, Eigen::LLT<Matrix> *llt) {
  llt->compute(*m);
  if (llt->info() == Eigen::Success && llt->rcond() > 1e-12) return false;
  const double scale = std::max(m->trace() / static_cast<double>(m->rows()), 1e-12);
  double load = 1e-6 * scale;
  for (int attempt = 0; attempt < 20; ++attempt, load *= 10.0) {
    Matrix loaded = *m;
    loaded.diagonal().array() += load;
    llt->compute(loaded);
    if (llt->info() == Eigen::Success && llt->rcond() > 1e-12) {
      *m = loaded;
      return true;
    }
  }
  throw SingularMatrix("PLDA within-class covariance cannot be regularized");
}

}  // namespace

void PreparePldaScoring(PldaModel *model) {
  const Eigen::Index dim = model->Dim();
  const Matrix between = model->BetweenCov();
  const Matrix total = between + model->within_cov;
  // Joint covariance of (a, b) under the same-speaker hypothesis.
  Matrix joint(2 * dim, 2 * dim);
  joint << total, between, between, total;
  Eigen::LLT<Matrix> joint_llt(joint);
  Eigen::LLT<Matrix> total_llt(total);
  if (joint_llt.info() != Eigen::Success || total_llt.info() != Eigen::Success)
    throw SingularMatrix("PLDA covariances are not positive definite");
  const Matrix joint_inv =
      joint_llt.solve(Matrix::Identity(2 * dim, 2 * dim));
  const Matrix total_inv = total_llt.solve(Matrix::Identity(dim, dim));
  const Matrix a1 = joint_inv.topLeftCorner(dim, dim);
  const Matrix a2 = joint_inv.topRightCorner(dim, dim);
  model->score_q = total_inv - a1;
  model->score_q = 0.5 * (model->score_q + model->score_q.transpose()).eval();
  model->score_p = -0.5 * (a2 + a2.transpose());
  model->score_constant = -0.5 * LogDet(joint_llt) + LogDet(total_llt);
}

PldaFitResult FitPlda(const Matrix &x, std::span<const int> labels,
                      const PldaOptions &opts) {
  const Eigen::Index dim = x.rows();
  const int latent = opts.latent_dim == 0 ? static_cast<int>(dim) : opts.latent_dim;
  if (latent < 1 || latent > dim) {
    std::ostringstream msg;
    msg << "PLDA latent dimension must be in [1, " << dim << "], got " << latent;
    throw InvalidArgument(msg.str());
  }
  if (opts.iters < 0) throw InvalidArgument("iteration count must be >= 0");
  if (static_cast<Eigen::Index>(labels.size()) != x.cols())
    throw DimensionMismatch("one label per embedding column is required");

  // Per-class sums of centered embeddings.
  PldaFitResult result;
  PldaModel &model = result.model;
  model.mean = x.rowwise().mean();
  const Matrix centered = x.colwise() - model.mean;
  int num_classes = 0;
  for (int l : labels) {
    if (l < 0) throw InvalidArgument("labels must be nonnegative");
    num_classes = std::max(num_classes, l + 1);
  }
  Matrix sums = Matrix::Zero(dim, num_classes);
  Vector counts = Vector::Zero(num_classes);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    sums.col(labels[static_cast<std::size_t>(j)]) += centered.col(j);
    counts(labels[static_cast<std::size_t>(j)]) += 1.0;
  }
  std::vector<Eigen::Index> classes;
  for (Eigen::Index s = 0; s < num_classes; ++s)
    if (counts(s) > 0) classes.push_back(s);
  if (classes.size() < 2) throw InsufficientData("PLDA needs at least 2 classes");
  if (x.cols() < 2 * static_cast<Eigen::Index>(classes.size()))
    throw InsufficientData("PLDA needs at least two samples per class on average");

  const double n_total = static_cast<double>(x.cols());
  const Matrix total_scatter = centered * centered.transpose();

  // Initialization from the scatter matrices.
  Matrix within = Matrix::Zero(dim, dim);
  Matrix between = Matrix::Zero(dim, dim);
  for (Eigen::Index s : classes) {
    const Vector mean_s = sums.col(s) / counts(s);
    between.noalias() += mean_s * mean_s.transpose();
  }
  between /= static_cast<double>(classes.size());
  within = total_scatter;
  for (Eigen::Index s : classes)
    within.noalias() -= sums.col(s) * sums.col(s).transpose() / counts(s);
  within /= n_total;
  within = 0.5 * (within + within.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(between);
  model.between_basis.resize(dim, latent);
  for (int k = 0; k < latent; ++k) {
    const double lambda = std::max(eig.eigenvalues()(dim - 1 - k), 1e-12);
    model.between_basis.col(k) = eig.eigenvectors().col(dim - 1 - k) * std::sqrt(lambda);
  }
  model.within_cov = within;

  const double log_2pi = std::log(2.0 * std::numbers::pi);
  for (int it = 0; it <= opts.iters; ++it) {
    Eigen::LLT<Matrix> w_llt;
    result.regularized |= FactorWithLoading(&model.within_cov, &w_llt);
    const Matrix w_inv_phi = w_llt.solve(model.between_basis);   // D x q
    const Matrix phi_w_phi = model.between_basis.transpose() * w_inv_phi;
    const double log_det_w = LogDet(w_llt);

    double loglik = -0.5 * n_total * (static_cast<double>(dim) * log_2pi + log_det_w) -
                    0.5 * (w_llt.solve(total_scatter)).trace();
    Matrix cross = Matrix::Zero(dim, latent);
    Matrix moment = Matrix::Zero(latent, latent);
    for (Eigen::Index s : classes) {
      Matrix precision = Matrix::Identity(latent, latent) + counts(s) * phi_w_phi;
      Eigen::LLT<Matrix> p_llt(precision);
      const Vector linear = w_inv_phi.transpose() * sums.col(s);
      const Vector mean_y = p_llt.solve(linear);
      loglik += 0.5 * linear.dot(mean_y) - 0.5 * LogDet(p_llt);
      cross.noalias() += sums.col(s) * mean_y.transpose();
      moment.noalias() += counts(s) * (p_llt.solve(Matrix::Identity(latent, latent)) +
                                       mean_y * mean_y.transpose());
    }
    result.log_likelihoods.push_back(loglik);
    if (it == opts.iters) break;

    // M-step: Phi = cross moment^-1, Sigma_w = (S_t - Phi cross^T) / N.
    Eigen::LLT<Matrix> m_llt(moment);
    model.between_basis = m_llt.solve(cross.transpose()).transpose();
    model.within_cov = (total_scatter - model.between_basis * cross.transpose()) / n_total;
    model.within_cov = 0.5 * (model.within_cov + model.within_cov.transpose()).eval();
  }
  {
    Eigen::LLT<Matrix> w_llt;
    result.regularized |= FactorWithLoading(&model.within_cov, &w_llt);
  }
  PreparePldaScoring(&model);
  return result;
}

double PldaScore(const PldaModel &model, const Vector &a, const Vector &b) {
  if (a.size() != model.Dim() || b.size() != model.Dim())
    throw DimensionMismatch("vector dimension does not match PLDA model");
  if (model.score_q.rows() != model.Dim())
    throw InvalidArgument("PLDA model has not been prepared for scoring");
  const Vector ca = a - model.mean;
  const Vector cb = b - model.mean;
  return 0.5 * ca.dot(model.score_q * ca) + 0.5 * cb.dot(model.score_q * cb) +
         ca.dot(model.score_p * cb) + model.score_constant;
}

void SavePldaModel(const std::string &path, const PldaModel &model) {
  BinaryWriter w(path, "SVPL");
  w.WriteU32(static_cast<std::uint32_t>(model.Dim()));
  w.WriteU32(static_cast<std::uint32_t>(model.between_basis.cols()));
  w.WriteVectorF64(model.mean);
  w.WriteMatrixF64(model.between_basis);
  w.WriteMatrixF64(model.within_cov);
  w.Close();
}

PldaModel LoadPldaModel(const std::string &path) {
  BinaryReader r(path, "SVPL");
  const auto d = static_cast<Eigen::Index>(r.ReadU32());
  const auto q = static_cast<Eigen::Index>(r.ReadU32());
  if (r.Remaining() != static_cast<std::uint64_t>(d + d * q + d * d) * 8)
    throw FormatError(path + ": payload size mismatch");
  PldaModel model;
  model.mean = r.ReadVectorF64(d);
  model.between_basis = r.ReadMatrixF64(d, q);
  model.within_cov = r.ReadMatrixF64(d, d);
  PreparePldaScoring(&model);
  return model;
}

}  // namespace svtk
