// svtk/ivector.h

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

#ifndef SVTK_IVECTOR_H_
#define SVTK_IVECTOR_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "svtk/base.h"
#include "svtk/gmm.h"

namespace svtk {

// Total-variability model: supervector offsets f_bar ~ N T x + noise with
// x ~ N(0, I) and diagonal residual covariance Sigma. Supervector index
// c * F + d addresses dimension d of component c.
struct TvModel {
  Matrix t;      // (C F) x R
  Vector sigma;  // C F, positive

  Eigen::Index Rank() const { return t.cols(); }
  Eigen::Index SupervectorDim() const { return t.rows(); }
  void Validate() const;
};

// "SVT1": u32 C*F, u32 R, T row-major f64, then Sigma f64.
void SaveTvModel(const std::string &path, const TvModel &model);
TvModel LoadTvModel(const std::string &path);

struct IVector {
  std::string utterance_id;
  Vector x;
};

// Posterior of the latent factor given one utterance's statistics.
struct FactorPosterior {
  Vector mean;       // the i-vector
  Matrix precision;  // I + T^T Sigma^-1 N T
  double log_det_precision = 0.0;
  Vector linear;     // T^T Sigma^-1 f_bar
};

// Caches T_c^T Sigma_c^-1 T_c per component so repeated extraction costs
// O(C R^2 + C F R) per utterance. N is never formed as a CF x CF matrix.
class IvectorExtractor {
 public:
  IvectorExtractor(const TvModel &model, Eigen::Index num_components);

  // x = (I + T^T Sigma^-1 N T)^-1 T^T Sigma^-1 f_bar by Cholesky solve.
  // Throws DimensionMismatch for foreign statistics and SingularMatrix if
  // the precision is not positive definite.
  Vector Extract(const BwStats &stats) const;
  FactorPosterior Posterior(const BwStats &stats) const;

  Eigen::Index NumComponents() const { return num_components_; }
  Eigen::Index FeatureDim() const { return feature_dim_; }

 private:
  TvModel model_;
  Eigen::Index num_components_;
  Eigen::Index feature_dim_;
  Matrix sigma_inv_t_;                 // Sigma^-1 T
  std::vector<Matrix> component_quad_;  // T_c^T Sigma_c^-1 T_c
};

// One-off extraction; builds the extractor internally.
Vector ExtractIvector(const TvModel &model, const BwStats &stats);

struct TvOptions {
  int num_factors = 400;
  int iters = 10;
  std::uint64_t seed = 1;
  // Re-estimate Sigma after each T update. Needs second-order statistics.
  bool update_sigma = false;
  double sigma_floor = kMinVariance;
};

struct TvTrainResult {
  TvModel model;
  // Log-likelihood of the statistics (up to a constant) at the start of every
  // iteration and after the last one: iters + 1 values.
  std::vector<double> objectives;
};

// EM for T (and optionally Sigma). T is seeded with N(0, 1/R) entries and
// Sigma with the UBM's stacked variances.
TvTrainResult TrainTv(std::span<const BwStats> stats, const Ubm &ubm,
                      const TvOptions &opts);

}  // namespace svtk

#endif  // SVTK_IVECTOR_H_
