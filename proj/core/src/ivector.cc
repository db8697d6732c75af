// core/src/ivector.cc

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

#include "svtk/ivector.h"

#include <cmath>
#include <numbers>
#include <sstream>

#include "svtk/binary-io.h"
#include "svtk/rng.h"

namespace svtk {

void TvModel::Validate() const {
  if (t.rows() < 1 || t.cols() < 1)
    throw InvalidArgument("TV model must have R >= 1 and C*F >= 1");
  if (sigma.size() != t.rows())
    throw InvalidArgument("TV model Sigma length differs from T rows");
  if (!t.allFinite()) throw InvalidArgument("TV matrix must be finite");
  if (!sigma.allFinite() || (sigma.array() <= 0).any())
    throw InvalidArgument("TV residual variances must be positive");
}

void SaveTvModel(const std::string &path, const TvModel &model) {
  model.Validate();
  BinaryWriter w(path, "SVT1");
  w.WriteU32(static_cast<std::uint32_t>(model.SupervectorDim()));
  w.WriteU32(static_cast<std::uint32_t>(model.Rank()));
  w.WriteMatrixF64(model.t);
  w.WriteVectorF64(model.sigma);
  w.Close();
}

TvModel LoadTvModel(const std::string &path) {
  BinaryReader r(path, "SVT1");
  const auto cf = static_cast<Eigen::Index>(r.ReadU32());
  const auto rank = static_cast<Eigen::Index>(r.ReadU32());
  if (r.Remaining() != static_cast<std::uint64_t>(cf * rank + cf) * 8)
    throw FormatError(path + ": payload size mismatch");
  TvModel model;
  model.t = r.ReadMatrixF64(cf, rank);
  model.sigma = r.ReadVectorF64(cf);
  try {
    model.Validate();
  } catch (const InvalidArgument &e) {
    throw FormatError(path + ": " + e.what());
  }
  return model;
}

IvectorExtractor::IvectorExtractor(const TvModel &model,
                                   Eigen::Index num_components)
    : model_(model), num_components_(num_components) {
  model_.Validate();
  if (num_components < 1 || model_.SupervectorDim() % num_components != 0) {
    std::ostringstream msg;
    msg << "supervector dimension " << model_.SupervectorDim()
        << " is not a multiple of " << num_components << " components";
    throw DimensionMismatch(msg.str());
  }
  feature_dim_ = model_.SupervectorDim() / num_components;
  sigma_inv_t_ = model_.sigma.cwiseInverse().asDiagonal() * model_.t;
  component_quad_.reserve(static_cast<std::size_t>(num_components));
  for (Eigen::Index c = 0; c < num_components; ++c) {
    const auto rows = model_.t.middleRows(c * feature_dim_, feature_dim_);
    const auto scaled = sigma_inv_t_.middleRows(c * feature_dim_, feature_dim_);
    component_quad_.push_back(rows.transpose() * scaled);
  }
}

FactorPosterior IvectorExtractor::Posterior(const BwStats &stats) const {
  if (stats.NumComponents() != num_components_ ||
      stats.Dim() != feature_dim_ || stats.n.size() != num_components_) {
    std::ostringstream msg;
    msg << "statistics are " << stats.NumComponents() << "x" << stats.Dim()
        << ", TV model expects " << num_components_ << "x" << feature_dim_;
    throw DimensionMismatch(msg.str());
  }
  if ((stats.n.array() < 0).any())
    throw InvalidArgument("zero-th order statistics must be nonnegative");
  const Eigen::Index rank = model_.Rank();
  FactorPosterior post;
  post.precision = Matrix::Identity(rank, rank);
  for (Eigen::Index c = 0; c < num_components_; ++c)
    if (stats.n(c) != 0.0)
      post.precision += stats.n(c) * component_quad_[static_cast<std::size_t>(c)];
  // Row-major stacking of f (C x F) gives the supervector ordering c*F + d.
  Vector fbar(num_components_ * feature_dim_);
  for (Eigen::Index c = 0; c < num_components_; ++c)
    fbar.segment(c * feature_dim_, feature_dim_) = stats.f.row(c).transpose();
  post.linear = sigma_inv_t_.transpose() * fbar;

  Eigen::LLT<Matrix> llt(post.precision);
  if (llt.info() != Eigen::Success)
    throw SingularMatrix("i-vector precision is not positive definite");
  post.mean = llt.solve(post.linear);
  post.log_det_precision =
      2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return post;
}

Vector IvectorExtractor::Extract(const BwStats &stats) const {
  return Posterior(stats).mean;
}

Vector ExtractIvector(const TvModel &model, const BwStats &stats) {
  return IvectorExtractor(model, stats.NumComponents()).Extract(stats);
}

TvTrainResult TrainTv(std::span<const BwStats> stats, const Ubm &ubm,
                      const TvOptions &opts) {
  const Eigen::Index c_count = ubm.NumComponents();
  const Eigen::Index dim = ubm.Dim();
  const Eigen::Index sv_dim = c_count * dim;
  const Eigen::Index rank = opts.num_factors;
  if (rank < 1 || rank > sv_dim) {
    std::ostringstream msg;
    msg << "number of factors must be in [1, " << sv_dim << "], got " << rank;
    throw InvalidArgument(msg.str());
  }
  if (opts.iters < 0) throw InvalidArgument("iteration count must be >= 0");
  if (static_cast<Eigen::Index>(stats.size()) < rank) {
    std::ostringstream msg;
    msg << "TV training with " << rank << " factors needs at least " << rank
        << " utterances, got " << stats.size();
    throw InsufficientData(msg.str());
  }
  bool any_mass = false;
  for (const auto &s : stats) {
    if (s.NumComponents() != c_count || s.Dim() != dim)
      throw DimensionMismatch("statistics do not match the UBM");
    if (opts.update_sigma && !s.HasSecondOrder())
      throw InvalidArgument(
          "Sigma re-estimation needs second-order statistics");
    any_mass = any_mass || (s.n.array() > 0).any();
  }
  if (!any_mass)
    throw InsufficientData("degenerate statistics: every n_c is zero");

  TvTrainResult result;
  TvModel &model = result.model;
  Rng rng(opts.seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(rank));
  model.t.resize(sv_dim, rank);
  for (Eigen::Index i = 0; i < sv_dim; ++i)
    for (Eigen::Index r = 0; r < rank; ++r) model.t(i, r) = scale * rng.Normal();
  model.sigma.resize(sv_dim);
  for (Eigen::Index c = 0; c < c_count; ++c)
    model.sigma.segment(c * dim, dim) = ubm.variances.row(c).transpose();

  const auto num_utts = static_cast<Eigen::Index>(stats.size());
  // Counts and first-order supervectors, one row per utterance.
  Matrix counts(num_utts, c_count);
  Matrix fbars(num_utts, sv_dim);
  Vector total_counts = Vector::Zero(c_count);
  Matrix total_second;
  if (opts.update_sigma) total_second = Matrix::Zero(c_count, dim);
  for (Eigen::Index u = 0; u < num_utts; ++u) {
    const BwStats &s = stats[static_cast<std::size_t>(u)];
    counts.row(u) = s.n.transpose();
    for (Eigen::Index c = 0; c < c_count; ++c)
      fbars.block(u, c * dim, 1, dim) = s.f.row(c);
    total_counts += s.n;
    if (opts.update_sigma) total_second += s.s;
  }
  const double log_2pi = std::log(2.0 * std::numbers::pi);

  for (int it = 0; it <= opts.iters; ++it) {
    IvectorExtractor extractor(model, c_count);
    // E-step: posterior moments, stacked for the M-step products.
    Matrix means(num_utts, rank);
    Matrix second_moments(num_utts, rank * rank);
    double objective = 0.0;
    for (Eigen::Index u = 0; u < num_utts; ++u) {
      FactorPosterior post = extractor.Posterior(stats[static_cast<std::size_t>(u)]);
      objective += 0.5 * post.linear.dot(post.mean) -
                   0.5 * post.log_det_precision;
      Matrix moment = post.precision.llt().solve(Matrix::Identity(rank, rank));
      moment.noalias() += post.mean * post.mean.transpose();
      means.row(u) = post.mean.transpose();
      second_moments.row(u) =
          Eigen::Map<const Eigen::RowVectorXd>(moment.data(), rank * rank);
    }
    // Gaussian normalizers and, when available, the quadratic residual term.
    for (Eigen::Index c = 0; c < c_count; ++c) {
      const auto sig = model.sigma.segment(c * dim, dim).array();
      objective -= 0.5 * total_counts(c) *
                   (static_cast<double>(dim) * log_2pi + sig.log().sum());
      if (opts.update_sigma)
        objective -= 0.5 * (total_second.row(c).transpose().array() / sig).sum();
    }
    result.objectives.push_back(objective);
    if (it == opts.iters) break;

    // M-step: T_c = (sum_u f_uc E[x_u]^T) (sum_u n_uc E[x_u x_u^T])^-1.
    const Matrix cross = fbars.transpose() * means;          // CF x R
    const Matrix quad = counts.transpose() * second_moments;  // C x R^2
    for (Eigen::Index c = 0; c < c_count; ++c) {
      if (total_counts(c) <= 0.0) continue;  // no data: keep T_c
      // Row c of quad holds a column-major R x R matrix.
      Matrix acc(rank, rank);
      for (Eigen::Index k = 0; k < rank * rank; ++k)
        acc(k % rank, k / rank) = quad(c, k);
      Eigen::LLT<Matrix> llt(acc);
      if (llt.info() != Eigen::Success)
        throw SingularMatrix("TV M-step accumulator is not positive definite");
      model.t.middleRows(c * dim, dim) =
          llt.solve(cross.middleRows(c * dim, dim).transpose()).transpose();
      if (opts.update_sigma) {
        // Sigma_c = diag(S_c - T_c cross_c^T) / n_c
        const Vector explained =
            (model.t.middleRows(c * dim, dim).array() *
             cross.middleRows(c * dim, dim).array())
                .rowwise().sum();
        model.sigma.segment(c * dim, dim) =
            ((total_second.row(c).transpose() - explained) / total_counts(c))
                .cwiseMax(opts.sigma_floor);
      }
    }
  }
  return result;
}

}  // namespace svtk
