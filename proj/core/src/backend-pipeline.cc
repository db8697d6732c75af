// core/src/backend-pipeline.cc

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

#include <array>
#include <filesystem>

#include "svtk/backend.h"

namespace svtk {

namespace {

constexpr std::array<BackendKind, 5> kAllKinds = {
    BackendKind::kCosine, BackendKind::kWccnCosine, BackendKind::kLdaCosine,
    BackendKind::kLdaPlda, BackendKind::kLrCosine};

std::string StagePath(const std::string &dir, const char *name) {
  return (std::filesystem::path(dir) / name).string();
}

}  // namespace

std::string_view BackendName(BackendKind kind) {
  switch (kind) {
    case BackendKind::kCosine: return "cosine";
    case BackendKind::kWccnCosine: return "wccn_cosine";
    case BackendKind::kLdaCosine: return "lda_cosine";
    case BackendKind::kLdaPlda: return "lda_plda";
    case BackendKind::kLrCosine: return "lr_cosine";
  }
  return "unknown";
}

std::optional<BackendKind> ParseBackendKind(std::string_view name) {
  for (BackendKind k : kAllKinds)
    if (BackendName(k) == name) return k;
  return std::nullopt;
}

std::span<const BackendKind> AllBackendKinds() { return kAllKinds; }

Backend Backend::Fit(BackendKind kind, const Matrix &x,
                     std::span<const int> labels, int num_classes,
                     const BackendOptions &opts) {
  Backend be(kind);
  switch (kind) {
    case BackendKind::kCosine:
      break;
    case BackendKind::kWccnCosine:
      be.wccn_ = FitWccn(x, labels, opts.wccn_ridge);
      break;
    case BackendKind::kLdaCosine:
      be.lda_ = FitLda(x, labels, opts.lda_dim);
      break;
    case BackendKind::kLdaPlda: {
      be.lda_ = FitLda(x, labels, opts.lda_dim);
      const Matrix projected = be.lda_->w.transpose() * x;
      PldaOptions po;
      po.latent_dim = opts.plda_latent_dim;
      po.iters = opts.plda_iters;
      be.plda_ = FitPlda(projected, labels, po).model;
      break;
    }
    case BackendKind::kLrCosine: {
      const Matrix y = IndicatorMatrix(labels, num_classes);
      const double ridge = opts.lr_ridge ? *opts.lr_ridge : DefaultRidge(x);
      be.lr_ = FitLr(x, y, ridge, opts.lr_center);
      break;
    }
  }
  return be;
}

Vector Backend::Transform(const Vector &x) const {
  switch (kind_) {
    case BackendKind::kCosine: return x;
    case BackendKind::kWccnCosine: return ApplyWccn(*wccn_, x);
    case BackendKind::kLdaCosine:
    case BackendKind::kLdaPlda: return ApplyLda(*lda_, x);
    case BackendKind::kLrCosine: return LrTransform(*lr_, x);
  }
  return x;
}

SpeakerModel Backend::Enroll(std::span<const Vector> embeddings) const {
  std::vector<Vector> transformed;
  transformed.reserve(embeddings.size());
  for (const Vector &e : embeddings) transformed.push_back(Transform(e));
  return MakeSpeakerModel(transformed);
}

double Backend::Score(const Vector &enroll_model, const Vector &test_model) const {
  if (kind_ == BackendKind::kLdaPlda)
    return PldaScore(*plda_, enroll_model, test_model);
  return CosineScore(enroll_model, test_model);
}

void Backend::Save(const std::string &dir) const {
  std::filesystem::create_directories(dir);
  if (lr_) SaveLrModel(StagePath(dir, "lr.svlr"), *lr_);
  if (wccn_) SaveWccnModel(StagePath(dir, "wccn.svwc"), *wccn_);
  if (lda_) SaveLdaModel(StagePath(dir, "lda.svld"), *lda_);
  if (plda_) SavePldaModel(StagePath(dir, "plda.svpl"), *plda_);
}

Backend Backend::Load(BackendKind kind, const std::string &dir) {
  Backend be(kind);
  switch (kind) {
    case BackendKind::kCosine:
      break;
    case BackendKind::kWccnCosine:
      be.wccn_ = LoadWccnModel(StagePath(dir, "wccn.svwc"));
      break;
    case BackendKind::kLdaCosine:
      be.lda_ = LoadLdaModel(StagePath(dir, "lda.svld"));
      break;
    case BackendKind::kLdaPlda:
      be.lda_ = LoadLdaModel(StagePath(dir, "lda.svld"));
      be.plda_ = LoadPldaModel(StagePath(dir, "plda.svpl"));
      if (be.plda_->Dim() != be.lda_->w.cols())
        throw FormatError(dir + ": PLDA and LDA dimensions disagree");
      break;
    case BackendKind::kLrCosine:
      be.lr_ = LoadLrModel(StagePath(dir, "lr.svlr"));
      break;
  }
  return be;
}

}  // namespace svtk
