// svtk/backend.h

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

#ifndef SVTK_BACKEND_H_
#define SVTK_BACKEND_H_

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "svtk/base.h"

namespace svtk {

// Throughout this header embeddings are the columns of a D x N matrix and
// `labels` gives each column's class in [0, S).

// ---------------------------------------------------------------------------
// Linear-regression speaker space.

// Regression from embeddings onto one-hot speaker indicators: y ~ A^T x.
struct LrModel {
  Matrix a;       // D x S
  double ridge = 0.0;
  Vector center;  // empty unless embeddings were mean-centered at fit time

  Eigen::Index InputDim() const { return a.rows(); }
  Eigen::Index OutputDim() const { return a.cols(); }
};

// S x N matrix whose column j is the indicator of labels[j].
Matrix IndicatorMatrix(std::span<const int> labels, int num_classes);

// 1e-6 * trace(X X^T) / D, the default ridge.
double DefaultRidge(const Matrix &x);

// A = (X X^T + ridge I)^-1 X Y^T, by Cholesky solve. With ridge = 0 this is
// the plain normal-equations solution and a singular X X^T raises
// SingularMatrix. `center` subtracts the column mean of X first.
LrModel FitLr(const Matrix &x, const Matrix &y, double ridge,
              bool center = false);

// A^T (x - center).
Vector LrTransform(const LrModel &model, const Vector &x);

// "SVLR": u32 D, u32 S, u32 centered, f64 ridge, A row-major, center.
void SaveLrModel(const std::string &path, const LrModel &model);
LrModel LoadLrModel(const std::string &path);

// ---------------------------------------------------------------------------
// Speaker models and cosine scoring.

struct SpeakerModel {
  Vector m;
  int n_utts = 0;
};

// Arithmetic mean of the (already transformed) utterance vectors.
SpeakerModel MakeSpeakerModel(std::span<const Vector> transformed);

// <a, b> / (|a| |b|). Throws InvalidArgument on a zero vector.
double CosineScore(const Vector &a, const Vector &b);

// Accept iff score > theta.
inline bool Decide(double score, double theta) { return score > theta; }

// ---------------------------------------------------------------------------
// Within-class covariance normalization.

// B with B B^T = W^-1, W the average of the per-class covariances.
struct WccnModel {
  Matrix b;  // D x D
};

// (1/S') sum_s cov_s over the S' classes with at least two samples.
Matrix AverageWithinClassCovariance(const Matrix &x,
                                    std::span<const int> labels);

// Adds ridge * I to W before factoring. Throws SingularMatrix when W is not
// positive definite.
WccnModel FitWccn(const Matrix &x, std::span<const int> labels,
                  double ridge = 0.0);
Vector ApplyWccn(const WccnModel &model, const Vector &x);  // B^T x

// "SVWC": u32 D, B row-major.
void SaveWccnModel(const std::string &path, const WccnModel &model);
WccnModel LoadWccnModel(const std::string &path);

// ---------------------------------------------------------------------------
// Linear discriminant analysis.

struct Scatter {
  Matrix within;   // (1/N) sum_i (x_i - mu_s)(x_i - mu_s)^T
  Matrix between;  // (1/N) sum_s n_s (mu_s - mu)(mu_s - mu)^T
};
Scatter ComputeScatter(const Matrix &x, std::span<const int> labels);

struct LdaModel {
  Matrix w;            // D x d, columns satisfy W^T S_w W = I
  Vector eigenvalues;  // d, descending
};

// Leading solutions of S_b w = lambda S_w w. Throws InvalidArgument naming
// the achievable rank when out_dim exceeds it, and when S_b vanishes.
LdaModel FitLda(const Matrix &x, std::span<const int> labels, int out_dim);
Vector ApplyLda(const LdaModel &model, const Vector &x);  // W^T x

// "SVLD": u32 D, u32 d, W row-major, eigenvalues.
void SaveLdaModel(const std::string &path, const LdaModel &model);
LdaModel LoadLdaModel(const std::string &path);

// ---------------------------------------------------------------------------
// Probabilistic LDA (two-covariance form with a low-rank speaker subspace):
//   x = mu + Phi y + e,  y ~ N(0, I_q),  e ~ N(0, Sigma_w).

struct PldaModel {
  Vector mean;
  Matrix between_basis;  // D x q (Phi)
  Matrix within_cov;     // D x D (Sigma_w)

  // Scoring terms, filled by PreparePldaScoring():
  //   llr(a, b) = a'Q a / 2 + b'Q b / 2 + a'P b + constant  (centered a, b)
  Matrix score_q;
  Matrix score_p;
  double score_constant = 0.0;

  Eigen::Index Dim() const { return mean.size(); }
  Matrix BetweenCov() const { return between_basis * between_basis.transpose(); }
};

void PreparePldaScoring(PldaModel *model);

struct PldaOptions {
  int latent_dim = 0;  // 0 means D
  int iters = 10;
};

struct PldaFitResult {
  PldaModel model;
  // Marginal log-likelihood before each iteration and after the last one.
  std::vector<double> log_likelihoods;
  // True when Sigma_w had to be diagonally loaded to stay positive definite.
  bool regularized = false;
};

PldaFitResult FitPlda(const Matrix &x, std::span<const int> labels,
                      const PldaOptions &opts);

// log p(a, b | same speaker) - log p(a, b | different speakers).
double PldaScore(const PldaModel &model, const Vector &a, const Vector &b);

// "SVPL": u32 D, u32 q, mean, Phi row-major, Sigma_w row-major.
void SavePldaModel(const std::string &path, const PldaModel &model);
PldaModel LoadPldaModel(const std::string &path);

// ---------------------------------------------------------------------------
// Back-end pipelines.

enum class BackendKind { kCosine, kWccnCosine, kLdaCosine, kLdaPlda, kLrCosine };

std::string_view BackendName(BackendKind kind);
std::optional<BackendKind> ParseBackendKind(std::string_view name);
// All kinds in a fixed order.
std::span<const BackendKind> AllBackendKinds();

struct BackendOptions {
  int lda_dim = 200;
  int plda_latent_dim = 0;  // 0: full LDA dimension
  int plda_iters = 10;
  std::optional<double> lr_ridge;  // unset: DefaultRidge
  bool lr_center = false;
  double wccn_ridge = 0.0;
};

// A fitted back-end: a linear map into the model space, averaging into
// speaker models, and a classifier comparing two models.
class Backend {
 public:
  static Backend Fit(BackendKind kind, const Matrix &x,
                     std::span<const int> labels, int num_classes,
                     const BackendOptions &opts);

  BackendKind kind() const { return kind_; }

  // Maps one utterance-level embedding into the model space.
  Vector Transform(const Vector &x) const;
  SpeakerModel Enroll(std::span<const Vector> embeddings) const;
  // Cosine similarity, or the PLDA log-likelihood ratio for kLdaPlda.
  double Score(const Vector &enroll_model, const Vector &test_model) const;

  // One model file per stage, named after the stage, below `dir`.
  void Save(const std::string &dir) const;
  static Backend Load(BackendKind kind, const std::string &dir);

  const std::optional<LrModel> &lr() const { return lr_; }
  const std::optional<WccnModel> &wccn() const { return wccn_; }
  const std::optional<LdaModel> &lda() const { return lda_; }
  const std::optional<PldaModel> &plda() const { return plda_; }

 private:
  explicit Backend(BackendKind kind) : kind_(kind) {}

  BackendKind kind_;
  std::optional<LrModel> lr_;
  std::optional<WccnModel> wccn_;
  std::optional<LdaModel> lda_;
  std::optional<PldaModel> plda_;
};

}  // namespace svtk

#endif  // SVTK_BACKEND_H_
