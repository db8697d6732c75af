// svtk/gmm.h

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

#ifndef SVTK_GMM_H_
#define SVTK_GMM_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "svtk/base.h"
#include "svtk/data.h"

namespace svtk {

// Smallest variance any component may hold, whatever the data-relative floor.
inline constexpr double kMinVariance = 1e-10;

// Diagonal-covariance Gaussian mixture used as universal background model.
struct Ubm {
  Vector weights;    // C, normalized to sum to 1
  Vector mass;       // C, unnormalized responsibility mass behind the weights
  Matrix means;      // C x F
  Matrix variances;  // C x F

  Eigen::Index NumComponents() const { return means.rows(); }
  Eigen::Index Dim() const { return means.cols(); }

  // Shapes agree, weights are nonnegative and sum to 1 within 1e-10,
  // variances are finite and positive.
  void Validate() const;
};

// "SVU1": u32 C, u32 F, then weights, means, variances as f64 (row-major).
// The unnormalized mass is not stored; a loaded model has mass = weights.
void SaveUbm(const std::string &path, const Ubm &ubm);
Ubm LoadUbm(const std::string &path);

// L x C frame-component alignments; each row sums to 1.
struct PosteriorMatrix {
  Matrix gammas;
};

// Zero-th order counts n_c and centralized first-order sums
// f_c = sum_l gamma_lc (z_l - mu_c). The optional second-order block holds
// the centralized diagonal sums sum_l gamma_lc (z_l - mu_c)^2 and is empty
// unless requested.
struct BwStats {
  Vector n;  // C
  Matrix f;  // C x F
  Matrix s;  // C x F or 0 x 0

  Eigen::Index NumComponents() const { return f.rows(); }
  Eigen::Index Dim() const { return f.cols(); }
  bool HasSecondOrder() const { return s.size() > 0; }
};

// log(pi_c N(z_l; mu_c, Sigma_c)) for every frame and component. Components
// with zero weight give -inf.
Matrix ComponentLogLikelihoods(const Ubm &ubm, const Matrix &frames);

// Frame posteriors P(c | z_l), evaluated in the log domain.
PosteriorMatrix ComputePosteriors(const Ubm &ubm, const FrameMatrix &features);

// sum_l log p(z_l | ubm).
double TotalLogLikelihood(const Ubm &ubm, const FrameMatrix &features);

BwStats ComputeBaumWelchStats(const Ubm &ubm, const FrameMatrix &features,
                              bool second_order = false);

// Statistics from externally supplied alignments, centralized on `means`.
BwStats AccumulateStats(const Matrix &means, const FrameMatrix &features,
                        const PosteriorMatrix &posteriors,
                        bool second_order = false);

// total += stats. An empty total takes the shape of stats.
void AddStats(const BwStats &stats, BwStats *total);

struct UbmEmOptions {
  int num_components = 16;
  int iters = 10;
  std::uint64_t seed = 1;
  // Variance floor, relative to the pooled per-dimension variance.
  double var_floor_factor = 1e-4;
};

struct UbmEmResult {
  Ubm ubm;
  // Total log-likelihood of the pooled frames before each iteration and after
  // the last one (iters + 1 values).
  std::vector<double> log_likelihoods;
  // Indices (into the seeded model) of components that lost all mass and were
  // truncated away.
  std::vector<std::size_t> dropped_components;
};

// Maximum-likelihood EM from k-means++ seeding. Deterministic given the seed.
// Throws InsufficientData when there are fewer frames than components.
UbmEmResult TrainUbmEm(std::span<const FrameMatrix> utterances,
                       const UbmEmOptions &opts);

struct PosteriorUbmOptions {
  double var_floor_factor = 1e-4;
  // Components whose mass is below this fraction of the total are flagged.
  double empty_mass_fraction = 1e-8;
  // Rows whose sum differs from 1 by more than this are renormalized.
  double row_sum_tolerance = 1e-6;
};

struct PosteriorUbmResult {
  Ubm ubm;
  // Flagged components carry zero weight and the pooled mean and variance;
  // pass them through TruncateUbm.
  std::vector<std::size_t> empty_components;
  std::size_t renormalized_rows = 0;
};

// UBM parameters from alignments produced by an external model:
//   mass_c = sum_u sum_l gamma, mu_c = weighted mean,
//   Sigma_c = weighted second moment - mu_c mu_c^T (diagonal kept),
// with weights = mass / sum(mass) and variances floored.
PosteriorUbmResult UbmFromPosteriors(std::span<const FrameMatrix> utterances,
                                     std::span<const PosteriorMatrix> posteriors,
                                     const PosteriorUbmOptions &opts = {});

// Indices of the `keep` largest entries of n (ties go to the lower index),
// returned in ascending index order.
std::vector<std::size_t> SelectTopComponents(const Vector &n, int keep);

// Keeps the `keep` components with the largest pooled zero-th order counts,
// preserving their relative order, and renormalizes the weights.
Ubm TruncateUbm(const Ubm &ubm, const BwStats &pooled, int keep);
Ubm TruncateUbm(const Ubm &ubm, const Vector &pooled_counts, int keep);

}  // namespace svtk

#endif  // SVTK_GMM_H_
