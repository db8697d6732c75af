// svtk/experiment.h

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

#ifndef SVTK_EXPERIMENT_H_
#define SVTK_EXPERIMENT_H_

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "svtk/backend.h"
#include "svtk/data.h"
#include "svtk/dvector.h"
#include "svtk/eval.h"
#include "svtk/gmm.h"
#include "svtk/ivector.h"

namespace svtk {

enum class FrontEndKind { kGmmIvector, kPosteriorIvector, kDvector };

std::string_view FrontEndName(FrontEndKind kind);
std::optional<FrontEndKind> ParseFrontEndKind(std::string_view name);

// A corpus on disk (index file) or generated from a SynthSpec.
struct CorpusSource {
  std::string index_path;
  std::optional<SynthSpec> synth;
};

struct UbmConfig {
  int num_components = 2048;
  int iters = 10;
  double var_floor_factor = 1e-4;
};

struct TvConfig {
  int num_factors = 400;
  int iters = 10;
  bool update_sigma = false;
};

struct PosteriorConfig {
  std::string source = "net";  // "net" or "files"
  // "files": <files_dir>/<utterance_id>.svf holds an L x C posterior matrix
  // for every development utterance.
  std::string files_dir;
  int keep_components = 3096;  // clamped to the number of populated components
  int half_window = 3;
  MlpHyper net;

  PosteriorConfig();
};

struct DvectorConfig {
  int half_window = 20;
  MlpHyper net;
};

// Everything an experiment needs. Defaults follow the full-scale setup; the
// synthetic configs in examples/ and tests/ scale them down.
struct ExperimentConfig {
  CorpusSource dev;
  CorpusSource eval;
  int segment_frames = 1500;
  std::vector<FrontEndKind> front_ends = {FrontEndKind::kGmmIvector};
  std::vector<BackendKind> back_ends = {BackendKind::kLrCosine};
  std::vector<TestCondition> conditions;
  int n_runs = 100;
  std::uint64_t seed = 1;
  UbmConfig ubm;
  TvConfig tv;
  PosteriorConfig posterior;
  DvectorConfig dvector;
  BackendOptions backend;
  DcfParams dcf08 = DcfParams::Sre08();
  DcfParams dcf10 = DcfParams::Sre10();
  std::string out_dir = "svtk-out";
  bool reuse_models = false;
  bool write_scores = false;
  bool write_det = true;

  ExperimentConfig();
};

// Parses JSON text. Unknown keys and invalid values raise ConfigError naming
// the offending field path (e.g. "back_ends[1]"). Relative corpus and
// posterior paths are resolved against base_dir.
ExperimentConfig ParseExperimentConfig(const std::string &json_text,
                                       const std::string &base_dir = ".");
ExperimentConfig LoadExperimentConfig(const std::string &path);
// Canonical JSON rendering (every field, fixed key order).
std::string ExperimentConfigToJson(const ExperimentConfig &config);
// Cross-field checks; also run by ParseExperimentConfig.
void ValidateExperimentConfig(const ExperimentConfig &config);

// ---------------------------------------------------------------------------
// Results.

struct MetricValues {
  double eer = 0.0;
  double dcf08 = 0.0;      // reported scale
  double dcf08_raw = 0.0;
  double dcf10 = 0.0;      // reported scale
  double dcf10_raw = 0.0;
};

MetricValues ComputeMetrics(const ScoredTrials &scored, const DcfParams &dcf08,
                            const DcfParams &dcf10);

struct RunResult {
  int run = 0;
  std::uint64_t seed = 0;
  MetricValues metrics;
};

struct ConditionResult {
  TestCondition condition;
  std::size_t num_target = 0;
  std::size_t num_nontarget = 0;
  std::vector<RunResult> runs;
  MetricValues mean;
};

struct SystemResult {
  std::string front_end;
  std::string back_end;
  std::vector<ConditionResult> conditions;
};

struct ComparisonResult {
  std::string front_end;
  std::vector<SystemResult> systems;  // one per back-end, config order
  // Per condition: lr_cosine against the non-LR back-end with the lowest
  // mean EER. Unset when either side is missing or the baseline EER is 0.
  std::vector<std::optional<double>> relative_improvement;
  std::vector<std::string> best_baseline;
};

struct FusionResult {
  std::string back_end;
  std::vector<SystemResult> systems;  // one per front-end, config order
  SystemResult fused;
};

std::string ReportToJson(const ExperimentConfig &config, const SystemResult &r);
std::string ReportToJson(const ExperimentConfig &config, const ComparisonResult &r);
std::string ReportToJson(const ExperimentConfig &config, const FusionResult &r);

// Fixed-width text tables of the mean metrics (EER in percent).
std::string FormatTable(const SystemResult &r);
std::string FormatTable(const ComparisonResult &r);
std::string FormatTable(const FusionResult &r);

// ---------------------------------------------------------------------------
// Orchestration.

// Utterance-level embeddings as columns, with ids and (for development data)
// speaker labels.
struct EmbeddingSet {
  std::vector<std::string> ids;
  std::vector<int> labels;
  Matrix x;  // D x N

  std::unordered_map<std::string, Vector> ById() const;
};

// "<id> <label> v_1 ... v_D" per line, values printed with %.17g.
void WriteEmbeddings(const std::string &path, const EmbeddingSet &set);
EmbeddingSet ReadEmbeddings(const std::string &path);

struct FrontEndModels {
  std::optional<Ubm> ubm;
  std::optional<TvModel> tv;
  std::optional<Mlp> net;
};

// Lazily trains and caches every stage. Models land under
// <out_dir>/models/<front_end>[/<back_end>]; with reuse_models they are
// loaded from there instead of retrained when present.
class Experiment {
 public:
  explicit Experiment(ExperimentConfig config);
  ~Experiment();

  const ExperimentConfig &config() const { return config_; }

  const Corpus &DevCorpus();
  const Corpus &EvalCorpus();
  const SegmentInventory &EvalInventory();

  const FrontEndModels &FrontEnd(FrontEndKind kind);
  const EmbeddingSet &DevEmbeddings(FrontEndKind kind);
  const EmbeddingSet &EvalEmbeddings(FrontEndKind kind);
  const Backend &GetBackend(FrontEndKind fe, BackendKind be);

  // Seed of one (condition, run) pair; independent of n_runs.
  std::uint64_t RunSeed(std::size_t condition, int run) const;
  TrialList Trials(std::size_t condition, int run);
  ScoredTrials Score(FrontEndKind fe, BackendKind be, const TrialList &trials);

  SystemResult Evaluate(FrontEndKind fe, BackendKind be);
  ComparisonResult Compare(FrontEndKind fe, std::span<const BackendKind> bes);
  FusionResult Fuse(std::span<const FrontEndKind> fes, BackendKind be);

  // Stage writers used by the command-line tool.
  void WriteSynthCorpora();
  void SaveFrontEnd(FrontEndKind kind);
  void SaveBackend(FrontEndKind fe, BackendKind be);
  void WriteTrialFiles();
  void WriteScoreFiles(FrontEndKind fe, BackendKind be);

  std::string OutPath(const std::string &relative) const;

 private:
  struct State;

  std::vector<SystemResult> RunSystems(
      std::span<const std::pair<FrontEndKind, BackendKind>> systems,
      SystemResult *fused);

  ExperimentConfig config_;
  std::unique_ptr<State> state_;
};

}  // namespace svtk

#endif  // SVTK_EXPERIMENT_H_
