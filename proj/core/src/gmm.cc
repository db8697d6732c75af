// core/src/gmm.cc

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

#include "svtk/gmm.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "svtk/binary-io.h"
#include "svtk/rng.h"

namespace svtk {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void CheckDim(const Ubm &ubm, const FrameMatrix &features) {
  if (features.Dim() != ubm.Dim()) {
    std::ostringstream msg;
    msg << "utterance '" << features.utterance_id << "' has dimension "
        << features.Dim() << ", UBM expects " << ubm.Dim();
    throw DimensionMismatch(msg.str());
  }
}

// Log-sum-exp of each row; rows of all -inf give -inf.
Vector RowLogSumExp(const Matrix &m) {
  Vector out(m.rows());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double peak = m.row(r).maxCoeff();
    if (peak == kNegInf) {
      out(r) = kNegInf;
      continue;
    }
    out(r) = peak + std::log((m.row(r).array() - peak).exp().sum());
  }
  return out;
}

struct PooledMoments {
  Vector mean;
  Vector variance;
  Eigen::Index count = 0;
};

PooledMoments ComputePooledMoments(std::span<const FrameMatrix> utterances) {
  PooledMoments pm;
  const Eigen::Index dim = utterances.front().Dim();
  pm.mean = Vector::Zero(dim);
  for (const auto &u : utterances) {
    pm.mean += u.frames.colwise().sum().transpose();
    pm.count += u.NumFrames();
  }
  pm.mean /= static_cast<double>(pm.count);
  pm.variance = Vector::Zero(dim);
  for (const auto &u : utterances)
    pm.variance +=
        (u.frames.rowwise() - pm.mean.transpose()).array().square().matrix()
            .colwise().sum().transpose();
  pm.variance /= static_cast<double>(pm.count);
  return pm;
}

Vector VarianceFloor(const Vector &pooled_variance, double factor) {
  return (pooled_variance.array() * factor).max(kMinVariance).matrix();
}

// Sufficient statistics for one EM pass.
struct EmAccumulator {
  Vector mass;
  Matrix first;   // sum gamma z
  Matrix second;  // sum gamma z^2
  double log_likelihood = 0.0;

  EmAccumulator(Eigen::Index c, Eigen::Index f)
      : mass(Vector::Zero(c)), first(Matrix::Zero(c, f)),
        second(Matrix::Zero(c, f)) {}
};

void Accumulate(const Ubm &ubm, const FrameMatrix &features,
                EmAccumulator *acc) {
  Matrix loglik = ComponentLogLikelihoods(ubm, features.frames);
  Vector norm = RowLogSumExp(loglik);
  acc->log_likelihood += norm.sum();
  Matrix gammas = (loglik.colwise() - norm).array().exp().matrix();
  acc->mass += gammas.colwise().sum().transpose();
  acc->first.noalias() += gammas.transpose() * features.frames;
  acc->second.noalias() +=
      gammas.transpose() * features.frames.array().square().matrix();
}

// k-means++ seeding over the pooled frames; returns flat frame indices.
std::vector<std::size_t> KMeansPlusPlusSeeds(
    std::span<const FrameMatrix> utterances, Eigen::Index total, int k,
    Rng *rng) {
  // Flattened (utterance, row) addressing of the pooled frames.
  std::vector<std::pair<std::size_t, Eigen::Index>> where;
  where.reserve(static_cast<std::size_t>(total));
  for (std::size_t u = 0; u < utterances.size(); ++u)
    for (Eigen::Index l = 0; l < utterances[u].NumFrames(); ++l)
      where.emplace_back(u, l);
  auto frame = [&](std::size_t i) {
    return utterances[where[i].first].frames.row(where[i].second);
  };

  std::vector<std::size_t> seeds;
  seeds.push_back(static_cast<std::size_t>(rng->Index(where.size())));
  std::vector<double> dist(where.size(), std::numeric_limits<double>::max());
  while (static_cast<int>(seeds.size()) < k) {
    const auto last = frame(seeds.back());
    double sum = 0.0;
    for (std::size_t i = 0; i < where.size(); ++i) {
      dist[i] = std::min(dist[i], (frame(i) - last).squaredNorm());
      sum += dist[i];
    }
    std::size_t pick;
    if (sum <= 0.0) {
      pick = static_cast<std::size_t>(rng->Index(where.size()));
    } else {
      const double target = rng->Uniform() * sum;
      double running = 0.0;
      pick = where.size() - 1;
      for (std::size_t i = 0; i < where.size(); ++i) {
        running += dist[i];
        if (running > target && dist[i] > 0.0) {
          pick = i;
          break;
        }
      }
    }
    seeds.push_back(pick);
  }
  return seeds;
}

}  // namespace

void Ubm::Validate() const {
  const Eigen::Index c = NumComponents();
  if (c < 1 || Dim() < 1) throw InvalidArgument("UBM is empty");
  if (weights.size() != c || mass.size() != c || variances.rows() != c ||
      variances.cols() != Dim())
    throw InvalidArgument("UBM parameter shapes disagree");
  if ((weights.array() < 0).any() || !weights.allFinite())
    throw InvalidArgument("UBM weights must be finite and nonnegative");
  if (std::abs(weights.sum() - 1.0) > 1e-10)
    throw InvalidArgument("UBM weights must sum to 1");
  if (!means.allFinite()) throw InvalidArgument("UBM means must be finite");
  if (!variances.allFinite() || (variances.array() <= 0).any())
    throw InvalidArgument("UBM variances must be finite and positive");
}

void SaveUbm(const std::string &path, const Ubm &ubm) {
  ubm.Validate();
  BinaryWriter w(path, "SVU1");
  w.WriteU32(static_cast<std::uint32_t>(ubm.NumComponents()));
  w.WriteU32(static_cast<std::uint32_t>(ubm.Dim()));
  w.WriteVectorF64(ubm.weights);
  w.WriteMatrixF64(ubm.means);
  w.WriteMatrixF64(ubm.variances);
  w.Close();
}

Ubm LoadUbm(const std::string &path) {
  BinaryReader r(path, "SVU1");
  const auto c = static_cast<Eigen::Index>(r.ReadU32());
  const auto f = static_cast<Eigen::Index>(r.ReadU32());
  if (c == 0 || f == 0) throw FormatError(path + ": empty UBM");
  if (r.Remaining() != static_cast<std::uint64_t>(c * (1 + 2 * f)) * 8)
    throw FormatError(path + ": payload size mismatch");
  Ubm ubm;
  ubm.weights = r.ReadVectorF64(c);
  ubm.means = r.ReadMatrixF64(c, f);
  ubm.variances = r.ReadMatrixF64(c, f);
  ubm.mass = ubm.weights;
  try {
    ubm.Validate();
  } catch (const InvalidArgument &e) {
    throw FormatError(path + ": " + e.what());
  }
  return ubm;
}

Matrix ComponentLogLikelihoods(const Ubm &ubm, const Matrix &frames) {
  const Eigen::Index c_count = ubm.NumComponents();
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  Matrix out(frames.rows(), c_count);
  for (Eigen::Index c = 0; c < c_count; ++c) {
    if (ubm.weights(c) <= 0.0) {
      out.col(c).setConstant(kNegInf);
      continue;
    }
    const Eigen::ArrayXd inv_var = ubm.variances.row(c).array().inverse();
    const double gconst =
        std::log(ubm.weights(c)) -
        0.5 * (static_cast<double>(ubm.Dim()) * log_2pi +
               ubm.variances.row(c).array().log().sum());
    out.col(c) =
        (gconst - 0.5 * ((frames.rowwise() - ubm.means.row(c)).array().square()
                             .rowwise() * inv_var.transpose())
                            .rowwise().sum())
            .matrix();
  }
  return out;
}

PosteriorMatrix ComputePosteriors(const Ubm &ubm,
                                  const FrameMatrix &features) {
  CheckDim(ubm, features);
  Matrix loglik = ComponentLogLikelihoods(ubm, features.frames);
  Vector norm = RowLogSumExp(loglik);
  return {(loglik.colwise() - norm).array().exp().matrix()};
}

double TotalLogLikelihood(const Ubm &ubm, const FrameMatrix &features) {
  CheckDim(ubm, features);
  return RowLogSumExp(ComponentLogLikelihoods(ubm, features.frames)).sum();
}

BwStats AccumulateStats(const Matrix &means, const FrameMatrix &features,
                        const PosteriorMatrix &posteriors, bool second_order) {
  const Matrix &g = posteriors.gammas;
  if (g.rows() != features.NumFrames() || g.cols() != means.rows() ||
      means.cols() != features.Dim())
    throw DimensionMismatch("utterance '" + features.utterance_id +
                            "': posterior/feature/mean shapes disagree");
  BwStats stats;
  stats.n = g.colwise().sum().transpose();
  // f_c = sum_l gamma_lc z_l - n_c mu_c
  stats.f = g.transpose() * features.frames;
  stats.f -= stats.n.asDiagonal() * means;
  if (second_order) {
    stats.s.resize(means.rows(), means.cols());
    for (Eigen::Index c = 0; c < means.rows(); ++c) {
      stats.s.row(c) =
          g.col(c).transpose() *
          (features.frames.rowwise() - means.row(c)).array().square().matrix();
    }
  }
  return stats;
}

BwStats ComputeBaumWelchStats(const Ubm &ubm, const FrameMatrix &features,
                              bool second_order) {
  return AccumulateStats(ubm.means, features, ComputePosteriors(ubm, features),
                         second_order);
}

void AddStats(const BwStats &stats, BwStats *total) {
  if (total->n.size() == 0) {
    *total = stats;
    return;
  }
  if (total->n.size() != stats.n.size() || total->f.cols() != stats.f.cols())
    throw DimensionMismatch("cannot add statistics of different shapes");
  total->n += stats.n;
  total->f += stats.f;
  if (total->HasSecondOrder() && stats.HasSecondOrder())
    total->s += stats.s;
  else
    total->s.resize(0, 0);
}

UbmEmResult TrainUbmEm(std::span<const FrameMatrix> utterances,
                       const UbmEmOptions &opts) {
  if (utterances.empty()) throw InsufficientData("no frames to train a UBM");
  if (opts.num_components < 1)
    throw InvalidArgument("number of components must be >= 1");
  if (opts.iters < 0) throw InvalidArgument("iteration count must be >= 0");
  const Eigen::Index dim = utterances.front().Dim();
  for (const auto &u : utterances) {
    u.Validate();
    if (u.Dim() != dim)
      throw DimensionMismatch("utterance '" + u.utterance_id +
                              "' has a different feature dimension");
  }
  PooledMoments pooled = ComputePooledMoments(utterances);
  if (pooled.count < opts.num_components) {
    std::ostringstream msg;
    msg << "UBM with " << opts.num_components << " components needs at least "
        << "as many frames; got " << pooled.count;
    throw InsufficientData(msg.str());
  }
  const Vector floor = VarianceFloor(pooled.variance, opts.var_floor_factor);
  const Eigen::Index c_count = opts.num_components;

  Rng rng(opts.seed);
  std::vector<std::size_t> seeds =
      KMeansPlusPlusSeeds(utterances, pooled.count, opts.num_components, &rng);

  Ubm ubm;
  ubm.means.resize(c_count, dim);
  {
    // Decode flat frame indices.
    std::vector<std::pair<std::size_t, Eigen::Index>> offsets;
    std::size_t base = 0;
    for (std::size_t u = 0; u < utterances.size(); ++u) {
      offsets.emplace_back(base, 0);
      base += static_cast<std::size_t>(utterances[u].NumFrames());
    }
    for (Eigen::Index c = 0; c < c_count; ++c) {
      std::size_t flat = seeds[static_cast<std::size_t>(c)];
      std::size_t u = 0;
      while (u + 1 < offsets.size() && offsets[u + 1].first <= flat) ++u;
      ubm.means.row(c) =
          utterances[u].frames.row(static_cast<Eigen::Index>(flat - offsets[u].first));
    }
  }
  ubm.variances = pooled.variance.cwiseMax(floor).transpose().replicate(c_count, 1);
  ubm.weights = Vector::Constant(c_count, 1.0 / static_cast<double>(c_count));
  ubm.mass = ubm.weights * static_cast<double>(pooled.count);

  UbmEmResult result;
  for (int it = 0; it <= opts.iters; ++it) {
    EmAccumulator acc(c_count, dim);
    for (const auto &u : utterances) Accumulate(ubm, u, &acc);
    result.log_likelihoods.push_back(acc.log_likelihood);
    if (it == opts.iters) break;

    const double total = acc.mass.sum();
    for (Eigen::Index c = 0; c < c_count; ++c) {
      const double m = acc.mass(c);
      if (m < 1e-8 * total) {
        // Lost component: zero weight, parameters frozen.
        ubm.weights(c) = 0.0;
        ubm.mass(c) = 0.0;
        continue;
      }
      Eigen::RowVectorXd mean = acc.first.row(c) / m;
      Eigen::RowVectorXd var =
          acc.second.row(c) / m - mean.array().square().matrix();
      ubm.means.row(c) = mean;
      ubm.variances.row(c) = var.transpose().cwiseMax(floor).transpose();
      ubm.weights(c) = m / total;
      ubm.mass(c) = m;
    }
    ubm.weights /= ubm.weights.sum();
  }

  const int alive = static_cast<int>((ubm.weights.array() > 0).count());
  if (alive < c_count) {
    std::vector<std::size_t> kept = SelectTopComponents(ubm.mass, alive);
    for (Eigen::Index c = 0; c < c_count; ++c)
      if (!std::binary_search(kept.begin(), kept.end(),
                              static_cast<std::size_t>(c)))
        result.dropped_components.push_back(static_cast<std::size_t>(c));
    ubm = TruncateUbm(ubm, ubm.mass, alive);
  }
  result.ubm = std::move(ubm);
  return result;
}

PosteriorUbmResult UbmFromPosteriors(std::span<const FrameMatrix> utterances,
                                     std::span<const PosteriorMatrix> posteriors,
                                     const PosteriorUbmOptions &opts) {
  if (utterances.empty()) throw InsufficientData("no utterances");
  if (utterances.size() != posteriors.size())
    throw DimensionMismatch("utterance and posterior counts differ");
  const Eigen::Index dim = utterances.front().Dim();
  const Eigen::Index c_count = posteriors.front().gammas.cols();
  if (c_count < 1) throw InvalidArgument("posteriors have no components");

  PosteriorUbmResult result;
  Vector mass = Vector::Zero(c_count);
  Matrix first = Matrix::Zero(c_count, dim);
  Matrix second = Matrix::Zero(c_count, dim);
  for (std::size_t u = 0; u < utterances.size(); ++u) {
    const FrameMatrix &fm = utterances[u];
    fm.Validate();
    Matrix g = posteriors[u].gammas;
    if (fm.Dim() != dim)
      throw DimensionMismatch("utterance '" + fm.utterance_id +
                              "' has a different feature dimension");
    if (g.rows() != fm.NumFrames() || g.cols() != c_count) {
      std::ostringstream msg;
      msg << "utterance '" << fm.utterance_id << "': " << fm.NumFrames()
          << " frames but posterior matrix is " << g.rows() << "x" << g.cols();
      throw DimensionMismatch(msg.str());
    }
    if (!g.allFinite() || (g.array() < 0).any())
      throw InvalidArgument("utterance '" + fm.utterance_id +
                            "': posteriors must be finite and nonnegative");
    for (Eigen::Index l = 0; l < g.rows(); ++l) {
      const double sum = g.row(l).sum();
      if (sum <= 0.0)
        throw InvalidArgument("utterance '" + fm.utterance_id +
                              "': posterior row with zero mass");
      if (std::abs(sum - 1.0) > opts.row_sum_tolerance) {
        g.row(l) /= sum;
        ++result.renormalized_rows;
      }
    }
    mass += g.colwise().sum().transpose();
    first.noalias() += g.transpose() * fm.frames;
    second.noalias() += g.transpose() * fm.frames.array().square().matrix();
  }

  PooledMoments pooled = ComputePooledMoments(utterances);
  const Vector floor = VarianceFloor(pooled.variance, opts.var_floor_factor);
  const double total = mass.sum();

  Ubm &ubm = result.ubm;
  ubm.mass = mass;
  ubm.weights = mass / total;
  ubm.means.resize(c_count, dim);
  ubm.variances.resize(c_count, dim);
  for (Eigen::Index c = 0; c < c_count; ++c) {
    if (mass(c) < opts.empty_mass_fraction * total) {
      result.empty_components.push_back(static_cast<std::size_t>(c));
      ubm.weights(c) = 0.0;
      ubm.means.row(c) = pooled.mean.transpose();
      ubm.variances.row(c) = pooled.variance.cwiseMax(floor).transpose();
      continue;
    }
    Eigen::RowVectorXd mean = first.row(c) / mass(c);
    ubm.means.row(c) = mean;
    ubm.variances.row(c) =
        (second.row(c) / mass(c) - mean.array().square().matrix())
            .transpose().cwiseMax(floor).transpose();
  }
  ubm.weights /= ubm.weights.sum();
  return result;
}

std::vector<std::size_t> SelectTopComponents(const Vector &n, int keep) {
  if (keep < 1 || keep > n.size()) {
    std::ostringstream msg;
    msg << "keep must be in [1, " << n.size() << "], got " << keep;
    throw InvalidArgument(msg.str());
  }
  std::vector<std::size_t> order(static_cast<std::size_t>(n.size()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return n(static_cast<Eigen::Index>(a)) > n(static_cast<Eigen::Index>(b));
  });
  order.resize(static_cast<std::size_t>(keep));
  std::sort(order.begin(), order.end());
  return order;
}

Ubm TruncateUbm(const Ubm &ubm, const Vector &pooled_counts, int keep) {
  if (pooled_counts.size() != ubm.NumComponents())
    throw DimensionMismatch("pooled statistics do not match the UBM");
  std::vector<std::size_t> kept = SelectTopComponents(pooled_counts, keep);
  const auto k = static_cast<Eigen::Index>(kept.size());
  Ubm out;
  out.weights.resize(k);
  out.mass.resize(k);
  out.means.resize(k, ubm.Dim());
  out.variances.resize(k, ubm.Dim());
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto c = static_cast<Eigen::Index>(kept[static_cast<std::size_t>(i)]);
    out.weights(i) = ubm.weights(c);
    out.mass(i) = ubm.mass.size() ? ubm.mass(c) : ubm.weights(c);
    out.means.row(i) = ubm.means.row(c);
    out.variances.row(i) = ubm.variances.row(c);
  }
  const double sum = out.weights.sum();
  if (sum <= 0.0)
    throw InvalidArgument("all kept components have zero weight");
  out.weights /= sum;
  return out;
}

Ubm TruncateUbm(const Ubm &ubm, const BwStats &pooled, int keep) {
  return TruncateUbm(ubm, pooled.n, keep);
}

}  // namespace svtk
