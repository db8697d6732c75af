// core/src/experiment.cc

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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "svtk/experiment.h"
#include "svtk/rng.h"

namespace svtk {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kUbmStream = 1;
constexpr std::uint64_t kTvStream = 2;
constexpr std::uint64_t kPosteriorNetStream = 3;
constexpr std::uint64_t kDvectorNetStream = 4;
constexpr std::uint64_t kConditionStreamBase = 100;

// Rethrows any toolkit error with the failing stage prefixed.
template <typename Fn>
auto InStage(const std::string &stage, Fn &&fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError &) {
    throw;
  } catch (const Error &e) {
    throw Error(stage + ": " + e.what());
  }
}

Corpus LoadSource(const CorpusSource &src) {
  if (src.synth) return SynthesizeCorpus(*src.synth);
  return LoadCorpus(src.index_path);
}

std::vector<int> SpeakerLabels(const CorpusIndex &index) {
  std::vector<int> labels;
  labels.reserve(index.NumUtterances());
  for (const auto &u : index.utterances())
    labels.push_back(static_cast<int>(index.SpeakerIndex(u.speaker_id)));
  return labels;
}

MetricValues MeanOf(const std::vector<RunResult> &runs) {
  MetricValues m;
  for (const RunResult &r : runs) {
    m.eer += r.metrics.eer;
    m.dcf08 += r.metrics.dcf08;
    m.dcf08_raw += r.metrics.dcf08_raw;
    m.dcf10 += r.metrics.dcf10;
    m.dcf10_raw += r.metrics.dcf10_raw;
  }
  const double n = static_cast<double>(runs.size());
  m.eer /= n;
  m.dcf08 /= n;
  m.dcf08_raw /= n;
  m.dcf10 /= n;
  m.dcf10_raw /= n;
  return m;
}

Json MetricsToJson(const MetricValues &m) {
  return Json{{"eer", m.eer},
              {"dcf08", m.dcf08},
              {"dcf08_raw", m.dcf08_raw},
              {"dcf10", m.dcf10},
              {"dcf10_raw", m.dcf10_raw}};
}

Json SystemToJson(const SystemResult &s) {
  Json conditions = Json::array();
  for (const ConditionResult &c : s.conditions) {
    Json runs = Json::array();
    for (const RunResult &r : c.runs) {
      Json jr{{"run", r.run}, {"seed", r.seed}};
      jr.update(MetricsToJson(r.metrics));
      runs.push_back(jr);
    }
    conditions.push_back({{"name", c.condition.name},
                          {"enroll_segments", c.condition.enroll_segments},
                          {"tests_per_speaker", c.condition.tests_per_speaker},
                          {"target_trials", c.num_target},
                          {"nontarget_trials", c.num_nontarget},
                          {"mean", MetricsToJson(c.mean)},
                          {"runs", runs}});
  }
  return Json{{"front_end", s.front_end},
              {"back_end", s.back_end},
              {"conditions", conditions}};
}

Json ConfigJson(const ExperimentConfig &config) {
  return Json::parse(ExperimentConfigToJson(config));
}

std::string Row(const std::string &a, const std::string &b, const MetricValues &m) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-12s %-20s %8.3f %8.4f %8.4f\n", a.c_str(),
                b.c_str(), 100.0 * m.eer, m.dcf08, m.dcf10);
  return buf;
}

std::string Header(const char *a, const char *b) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-12s %-20s %8s %8s %8s\n", a, b, "EER(%)",
                "DCF08", "DCF10");
  return buf;
}

}  // namespace

MetricValues ComputeMetrics(const ScoredTrials &scored, const DcfParams &dcf08,
                            const DcfParams &dcf10) {
  MetricValues m;
  m.eer = Eer(scored);
  m.dcf08_raw = MinDcfRaw(scored, dcf08);
  m.dcf08 = MinDcf(scored, dcf08);
  m.dcf10_raw = MinDcfRaw(scored, dcf10);
  m.dcf10 = MinDcf(scored, dcf10);
  return m;
}

std::string ReportToJson(const ExperimentConfig &config, const SystemResult &r) {
  Json j{{"report", "experiment"}, {"config", ConfigJson(config)}};
  j.update(SystemToJson(r));
  return j.dump(2) + "\n";
}

std::string ReportToJson(const ExperimentConfig &config, const ComparisonResult &r) {
  Json systems = Json::array();
  for (const SystemResult &s : r.systems) systems.push_back(SystemToJson(s));
  Json table = Json::array();
  Json summary = Json::array();
  for (std::size_t c = 0; c < r.relative_improvement.size(); ++c) {
    for (const SystemResult &s : r.systems) {
      Json row{{"condition", s.conditions[c].condition.name},
               {"back_end", s.back_end}};
      row.update(MetricsToJson(s.conditions[c].mean));
      table.push_back(row);
    }
    Json item{{"condition", r.systems.front().conditions[c].condition.name},
              {"best_baseline", r.best_baseline[c]},
              {"relative_improvement", nullptr}};
    if (r.relative_improvement[c]) item["relative_improvement"] = *r.relative_improvement[c];
    summary.push_back(item);
  }
  Json j{{"report", "comparison"},
         {"config", ConfigJson(config)},
         {"front_end", r.front_end},
         {"table", table},
         {"relative_improvement", summary},
         {"systems", systems}};
  return j.dump(2) + "\n";
}

std::string ReportToJson(const ExperimentConfig &config, const FusionResult &r) {
  Json systems = Json::array();
  for (const SystemResult &s : r.systems) systems.push_back(SystemToJson(s));
  Json j{{"report", "fusion"},
         {"config", ConfigJson(config)},
         {"back_end", r.back_end},
         {"systems", systems},
         {"fused", SystemToJson(r.fused)}};
  return j.dump(2) + "\n";
}

std::string FormatTable(const SystemResult &r) {
  std::string out = "front end: " + r.front_end + ", back end: " + r.back_end + "\n";
  out += Header("condition", "system");
  for (const ConditionResult &c : r.conditions)
    out += Row(c.condition.name, r.back_end, c.mean);
  return out;
}

std::string FormatTable(const ComparisonResult &r) {
  std::string out = "front end: " + r.front_end + "\n";
  out += Header("condition", "back end");
  for (std::size_t c = 0; c < r.relative_improvement.size(); ++c) {
    for (const SystemResult &s : r.systems)
      out += Row(s.conditions[c].condition.name, s.back_end, s.conditions[c].mean);
    if (r.relative_improvement[c]) {
      char buf[160];
      std::snprintf(buf, sizeof(buf),
                    "%-12s lr_cosine vs %s: relative EER change %+.4f\n",
                    r.systems.front().conditions[c].condition.name.c_str(),
                    r.best_baseline[c].c_str(), *r.relative_improvement[c]);
      out += buf;
    }
  }
  return out;
}

std::string FormatTable(const FusionResult &r) {
  std::string out = "back end: " + r.back_end + "\n";
  out += Header("condition", "front end");
  for (std::size_t c = 0; c < r.fused.conditions.size(); ++c) {
    for (const SystemResult &s : r.systems)
      out += Row(s.conditions[c].condition.name, s.front_end, s.conditions[c].mean);
    out += Row(r.fused.conditions[c].condition.name, "fused",
               r.fused.conditions[c].mean);
  }
  return out;
}

std::unordered_map<std::string, Vector> EmbeddingSet::ById() const {
  std::unordered_map<std::string, Vector> map;
  for (std::size_t i = 0; i < ids.size(); ++i)
    map.emplace(ids[i], x.col(static_cast<Eigen::Index>(i)));
  return map;
}

void WriteEmbeddings(const std::string &path, const EmbeddingSet &set) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  char buf[40];
  for (std::size_t i = 0; i < set.ids.size(); ++i) {
    out << set.ids[i] << ' ' << (set.labels.empty() ? -1 : set.labels[i]);
    for (Eigen::Index d = 0; d < set.x.rows(); ++d) {
      std::snprintf(buf, sizeof(buf), " %.17g", set.x(d, static_cast<Eigen::Index>(i)));
      out << buf;
    }
    out << '\n';
  }
  out.close();
  if (!out) throw IoError("write failed: " + path);
}

EmbeddingSet ReadEmbeddings(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  EmbeddingSet set;
  std::vector<std::vector<double>> cols;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(line);
    std::string id;
    int label;
    if (!(fields >> id)) continue;
    if (!(fields >> label))
      throw FormatError(path + ":" + std::to_string(lineno) + ": missing label");
    std::vector<double> values;
    double v;
    while (fields >> v) values.push_back(v);
    if (values.empty() || (!cols.empty() && values.size() != cols.front().size()))
      throw FormatError(path + ":" + std::to_string(lineno) + ": bad vector length");
    set.ids.push_back(id);
    set.labels.push_back(label);
    cols.push_back(std::move(values));
  }
  if (cols.empty()) throw FormatError(path + ": no embeddings");
  set.x.resize(static_cast<Eigen::Index>(cols.front().size()),
               static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (std::size_t d = 0; d < cols[j].size(); ++d)
      set.x(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(j)) = cols[j][d];
  return set;
}

// ---------------------------------------------------------------------------

struct Experiment::State {
  std::optional<Corpus> dev;
  std::optional<Corpus> eval;
  std::optional<SegmentInventory> inventory;
  std::map<FrontEndKind, FrontEndModels> front_ends;
  std::map<FrontEndKind, EmbeddingSet> dev_embeddings;
  std::map<FrontEndKind, EmbeddingSet> eval_embeddings;
  std::map<std::pair<FrontEndKind, BackendKind>, Backend> backends;
};

Experiment::Experiment(ExperimentConfig config)
    : config_(std::move(config)), state_(std::make_unique<State>()) {
  ValidateExperimentConfig(config_);
  if (config_.dev.synth && config_.eval.synth &&
      config_.dev.synth->seed == config_.eval.synth->seed)
    throw ConfigError("eval.synth.seed", "must differ from dev.synth.seed");
}

Experiment::~Experiment() = default;

std::string Experiment::OutPath(const std::string &relative) const {
  return (fs::path(config_.out_dir) / relative).string();
}

const Corpus &Experiment::DevCorpus() {
  if (!state_->dev)
    state_->dev = InStage("loading dev corpus", [&] { return LoadSource(config_.dev); });
  return *state_->dev;
}

const Corpus &Experiment::EvalCorpus() {
  if (!state_->eval)
    state_->eval =
        InStage("loading eval corpus", [&] { return LoadSource(config_.eval); });
  return *state_->eval;
}

const SegmentInventory &Experiment::EvalInventory() {
  if (!state_->inventory) {
    const Corpus &corpus = EvalCorpus();
    std::vector<int> counts;
    for (const FrameMatrix &fm : corpus.features)
      counts.push_back(static_cast<int>(fm.NumFrames() / config_.segment_frames));
    state_->inventory = MakeSegmentInventory(corpus.index, counts);
  }
  return *state_->inventory;
}

const FrontEndModels &Experiment::FrontEnd(FrontEndKind kind) {
  auto found = state_->front_ends.find(kind);
  if (found != state_->front_ends.end()) return found->second;

  const std::string name(FrontEndName(kind));
  const fs::path dir = fs::path(config_.out_dir) / "models" / name;
  const std::string ubm_path = (dir / "ubm.svu").string();
  const std::string tv_path = (dir / "tv.svt").string();
  const std::string net_path = (dir / "net.svn").string();
  const bool needs_ubm = kind != FrontEndKind::kDvector;
  const bool needs_net = kind != FrontEndKind::kGmmIvector &&
                         !(kind == FrontEndKind::kPosteriorIvector &&
                           config_.posterior.source == "files");

  FrontEndModels models;
  if (config_.reuse_models && (!needs_ubm || (fs::exists(ubm_path) && fs::exists(tv_path))) &&
      (!needs_net || fs::exists(net_path))) {
    InStage("loading " + name + " models", [&] {
      if (needs_ubm) {
        models.ubm = LoadUbm(ubm_path);
        models.tv = LoadTvModel(tv_path);
      }
      if (needs_net) models.net = LoadMlp(net_path);
      return 0;
    });
    return state_->front_ends.emplace(kind, std::move(models)).first->second;
  }

  const Corpus &dev = DevCorpus();
  const std::vector<int> utt_labels = SpeakerLabels(dev.index);
  const int num_speakers = static_cast<int>(dev.index.NumSpeakers());

  if (kind == FrontEndKind::kGmmIvector) {
    UbmEmOptions opts;
    opts.num_components = config_.ubm.num_components;
    opts.iters = config_.ubm.iters;
    opts.var_floor_factor = config_.ubm.var_floor_factor;
    opts.seed = MixSeed(config_.seed, kUbmStream);
    models.ubm = InStage("training UBM", [&] { return TrainUbmEm(dev.features, opts).ubm; });
  } else if (kind == FrontEndKind::kPosteriorIvector) {
    std::vector<PosteriorMatrix> posteriors;
    if (config_.posterior.source == "net") {
      MlpHyper hyper = config_.posterior.net;
      hyper.seed = MixSeed(config_.seed, kPosteriorNetStream);
      models.net = InStage("training posterior net", [&] {
        return TrainMlp(dev.features, utt_labels, num_speakers,
                        config_.posterior.half_window, hyper)
            .mlp;
      });
      for (const FrameMatrix &fm : dev.features)
        posteriors.push_back(FramePosteriors(*models.net, fm, config_.posterior.half_window));
    } else {
      InStage("loading posterior files", [&] {
        for (const auto &u : dev.index.utterances()) {
          FrameMatrix p = LoadFeatures(
              (fs::path(config_.posterior.files_dir) / (u.utterance_id + ".svf")).string(),
              u.utterance_id);
          posteriors.push_back({std::move(p.frames)});
        }
        return 0;
      });
    }
    models.ubm = InStage("estimating UBM from posteriors", [&] {
      PosteriorUbmResult est = UbmFromPosteriors(dev.features, posteriors);
      Vector counts = Vector::Zero(est.ubm.NumComponents());
      for (const PosteriorMatrix &p : posteriors)
        counts += p.gammas.colwise().sum().transpose();
      const int populated =
          static_cast<int>(est.ubm.NumComponents()) - static_cast<int>(est.empty_components.size());
      const int keep = std::min(config_.posterior.keep_components, populated);
      return TruncateUbm(est.ubm, counts, keep);
    });
  } else {
    MlpHyper hyper = config_.dvector.net;
    hyper.seed = MixSeed(config_.seed, kDvectorNetStream);
    models.net = InStage("training d-vector net", [&] {
      return TrainMlp(dev.features, utt_labels, num_speakers,
                      config_.dvector.half_window, hyper)
          .mlp;
    });
  }

  if (models.ubm) {
    std::vector<BwStats> stats;
    for (const FrameMatrix &fm : dev.features)
      for (const FrameMatrix &seg : SplitSegments(fm, config_.segment_frames))
        stats.push_back(ComputeBaumWelchStats(*models.ubm, seg, config_.tv.update_sigma));
    TvOptions opts;
    opts.num_factors = config_.tv.num_factors;
    opts.iters = config_.tv.iters;
    opts.update_sigma = config_.tv.update_sigma;
    opts.seed = MixSeed(config_.seed, kTvStream);
    models.tv = InStage("training total variability model",
                        [&] { return TrainTv(stats, *models.ubm, opts).model; });
  }

  fs::create_directories(dir);
  if (models.ubm) SaveUbm(ubm_path, *models.ubm);
  if (models.tv) SaveTvModel(tv_path, *models.tv);
  if (models.net) SaveMlp(net_path, *models.net);
  return state_->front_ends.emplace(kind, std::move(models)).first->second;
}

namespace {

EmbeddingSet ExtractAll(FrontEndKind kind, const FrontEndModels &models,
                        const ExperimentConfig &config, const Corpus &corpus,
                        bool with_labels) {
  EmbeddingSet set;
  std::vector<Vector> cols;
  std::optional<IvectorExtractor> extractor;
  if (models.tv) extractor.emplace(*models.tv, models.ubm->NumComponents());
  for (std::size_t u = 0; u < corpus.features.size(); ++u) {
    const auto &entry = corpus.index.utterances()[u];
    const int label = static_cast<int>(corpus.index.SpeakerIndex(entry.speaker_id));
    for (const FrameMatrix &seg : SplitSegments(corpus.features[u], config.segment_frames)) {
      if (kind == FrontEndKind::kDvector)
        cols.push_back(ExtractDvector(*models.net, seg, config.dvector.half_window).x);
      else
        cols.push_back(extractor->Extract(ComputeBaumWelchStats(*models.ubm, seg)));
      set.ids.push_back(seg.utterance_id);
      set.labels.push_back(with_labels ? label : -1);
    }
  }
  if (cols.empty())
    throw InsufficientData("no segment of " + std::to_string(config.segment_frames) +
                           " frames in the corpus");
  set.x.resize(cols.front().size(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j)
    set.x.col(static_cast<Eigen::Index>(j)) = cols[j];
  return set;
}

}  // namespace

const EmbeddingSet &Experiment::DevEmbeddings(FrontEndKind kind) {
  auto it = state_->dev_embeddings.find(kind);
  if (it != state_->dev_embeddings.end()) return it->second;
  const FrontEndModels &models = FrontEnd(kind);
  EmbeddingSet set = InStage("extracting dev embeddings", [&] {
    return ExtractAll(kind, models, config_, DevCorpus(), true);
  });
  return state_->dev_embeddings.emplace(kind, std::move(set)).first->second;
}

const EmbeddingSet &Experiment::EvalEmbeddings(FrontEndKind kind) {
  auto it = state_->eval_embeddings.find(kind);
  if (it != state_->eval_embeddings.end()) return it->second;
  const FrontEndModels &models = FrontEnd(kind);
  EmbeddingSet set = InStage("extracting eval embeddings", [&] {
    return ExtractAll(kind, models, config_, EvalCorpus(), false);
  });
  return state_->eval_embeddings.emplace(kind, std::move(set)).first->second;
}

const Backend &Experiment::GetBackend(FrontEndKind fe, BackendKind be) {
  const auto key = std::make_pair(fe, be);
  auto it = state_->backends.find(key);
  if (it != state_->backends.end()) return it->second;
  const fs::path dir = fs::path(config_.out_dir) / "models" /
                       std::string(FrontEndName(fe)) / std::string(BackendName(be));
  const std::string stage = "fitting " + std::string(BackendName(be)) + " on " +
                            std::string(FrontEndName(fe));
  if (config_.reuse_models && fs::exists(dir)) {
    try {
      return state_->backends.emplace(key, Backend::Load(be, dir.string())).first->second;
    } catch (const Error &) {
      // Incomplete cache; fit below.
    }
  }
  const EmbeddingSet &dev = DevEmbeddings(fe);
  Backend fitted = InStage(stage, [&] {
    return Backend::Fit(be, dev.x, dev.labels,
                        static_cast<int>(DevCorpus().index.NumSpeakers()), config_.backend);
  });
  fitted.Save(dir.string());
  return state_->backends.emplace(key, std::move(fitted)).first->second;
}

std::uint64_t Experiment::RunSeed(std::size_t condition, int run) const {
  return MixSeed(MixSeed(config_.seed, kConditionStreamBase + condition),
                 static_cast<std::uint64_t>(run));
}

TrialList Experiment::Trials(std::size_t condition, int run) {
  if (condition >= config_.conditions.size())
    throw InvalidArgument("condition index out of range");
  return InStage("building trials for " + config_.conditions[condition].name, [&] {
    return BuildTrials(EvalInventory(), config_.conditions[condition],
                       RunSeed(condition, run));
  });
}

ScoredTrials Experiment::Score(FrontEndKind fe, BackendKind be,
                               const TrialList &trials) {
  const Backend &backend = GetBackend(fe, be);
  const auto embeddings = EvalEmbeddings(fe).ById();
  return InStage("scoring", [&] {
    std::unordered_map<std::string, SpeakerModel> models;
    for (const Enrollment &e : trials.enrollments) {
      std::vector<Vector> vs;
      for (const std::string &seg : e.segments) {
        auto it = embeddings.find(seg);
        if (it == embeddings.end())
          throw InvalidArgument("no embedding for enrollment segment '" + seg + "'");
        vs.push_back(it->second);
      }
      models.emplace(e.speaker_id, backend.Enroll(vs));
    }
    return ScoreTrials(backend, models, embeddings, trials.trials);
  });
}

std::vector<SystemResult> Experiment::RunSystems(
    std::span<const std::pair<FrontEndKind, BackendKind>> systems,
    SystemResult *fused) {
  std::vector<SystemResult> results(systems.size());
  for (std::size_t s = 0; s < systems.size(); ++s) {
    results[s].front_end = FrontEndName(systems[s].first);
    results[s].back_end = BackendName(systems[s].second);
    GetBackend(systems[s].first, systems[s].second);
  }
  if (fused) {
    fused->front_end = "fused";
    fused->back_end = results.front().back_end;
  }
  auto system_dir = [&](const SystemResult &r) {
    return fs::path(config_.out_dir) / (r.front_end + "_" + r.back_end);
  };

  for (std::size_t c = 0; c < config_.conditions.size(); ++c) {
    const TestCondition &cond = config_.conditions[c];
    std::vector<ConditionResult> per_system(systems.size());
    ConditionResult fused_cond;
    for (int run = 0; run < config_.n_runs; ++run) {
      const TrialList trials = Trials(c, run);
      std::vector<ScoredTrials> scored;
      for (std::size_t s = 0; s < systems.size(); ++s)
        scored.push_back(Score(systems[s].first, systems[s].second, trials));
      if (fused) scored.push_back(FuseScores(scored));

      for (std::size_t s = 0; s < scored.size(); ++s) {
        const bool is_fused = s == systems.size();
        const SystemResult &owner = is_fused ? *fused : results[s];
        ConditionResult &cr = is_fused ? fused_cond : per_system[s];
        cr.condition = cond;
        cr.num_target = trials.trials.NumTargets();
        cr.num_nontarget = trials.trials.NumNontargets();
        cr.runs.push_back({run, RunSeed(c, run),
                           ComputeMetrics(scored[s], config_.dcf08, config_.dcf10)});
        const fs::path dir = system_dir(owner);
        if (config_.write_det && run == 0) {
          fs::create_directories(dir / "det");
          const auto det = DetCurve(scored[s]);
          WriteDetCsv((dir / "det" / (cond.name + ".csv")).string(), det);
        }
        if (config_.write_scores) {
          fs::create_directories(dir / "scores" / cond.name);
          WriteScores((dir / "scores" / cond.name / ("run" + std::to_string(run) + ".scores"))
                          .string(),
                      scored[s]);
        }
      }
    }
    for (std::size_t s = 0; s < systems.size(); ++s) {
      per_system[s].mean = MeanOf(per_system[s].runs);
      results[s].conditions.push_back(std::move(per_system[s]));
    }
    if (fused) {
      fused_cond.mean = MeanOf(fused_cond.runs);
      fused->conditions.push_back(std::move(fused_cond));
    }
  }
  return results;
}

SystemResult Experiment::Evaluate(FrontEndKind fe, BackendKind be) {
  const std::pair<FrontEndKind, BackendKind> one[] = {{fe, be}};
  return RunSystems(one, nullptr).front();
}

ComparisonResult Experiment::Compare(FrontEndKind fe, std::span<const BackendKind> bes) {
  if (bes.size() < 2) throw ConfigError("back_ends", "comparison needs at least 2 back ends");
  std::vector<std::pair<FrontEndKind, BackendKind>> systems;
  for (BackendKind be : bes) systems.emplace_back(fe, be);
  ComparisonResult out;
  out.front_end = FrontEndName(fe);
  out.systems = RunSystems(systems, nullptr);
  const std::size_t num_conditions = config_.conditions.size();
  out.relative_improvement.assign(num_conditions, std::nullopt);
  out.best_baseline.assign(num_conditions, "");
  for (std::size_t c = 0; c < num_conditions; ++c) {
    const SystemResult *lr = nullptr;
    const SystemResult *best = nullptr;
    for (const SystemResult &s : out.systems) {
      if (s.back_end == BackendName(BackendKind::kLrCosine)) {
        lr = &s;
      } else if (!best || s.conditions[c].mean.eer < best->conditions[c].mean.eer) {
        best = &s;
      }
    }
    if (best) out.best_baseline[c] = best->back_end;
    if (lr && best && best->conditions[c].mean.eer > 0.0)
      out.relative_improvement[c] = RelativeImprovement(
          lr->conditions[c].mean.eer, best->conditions[c].mean.eer);
  }
  return out;
}

FusionResult Experiment::Fuse(std::span<const FrontEndKind> fes, BackendKind be) {
  if (fes.size() < 2) throw ConfigError("front_ends", "fusion needs at least 2 front ends");
  std::vector<std::pair<FrontEndKind, BackendKind>> systems;
  for (FrontEndKind fe : fes) systems.emplace_back(fe, be);
  FusionResult out;
  out.back_end = BackendName(be);
  out.systems = RunSystems(systems, &out.fused);
  return out;
}

void Experiment::WriteSynthCorpora() {
  bool any = false;
  for (auto [src, name] : {std::pair{&config_.dev, "dev"}, std::pair{&config_.eval, "eval"}}) {
    if (!src->synth) continue;
    any = true;
    InStage(std::string("writing ") + name + " corpus", [&] {
      WriteSynthCorpus(*src->synth, OutPath(std::string("corpus/") + name));
      return 0;
    });
  }
  if (!any) throw ConfigError("dev.synth", "no synthetic corpus configured");
}

void Experiment::SaveFrontEnd(FrontEndKind kind) {
  FrontEnd(kind);  // trains and serializes the models
  const fs::path dir = fs::path(config_.out_dir) / "embeddings" / std::string(FrontEndName(kind));
  fs::create_directories(dir);
  WriteEmbeddings((dir / "dev.txt").string(), DevEmbeddings(kind));
  WriteEmbeddings((dir / "eval.txt").string(), EvalEmbeddings(kind));
}

void Experiment::SaveBackend(FrontEndKind fe, BackendKind be) { GetBackend(fe, be); }

void Experiment::WriteTrialFiles() {
  for (std::size_t c = 0; c < config_.conditions.size(); ++c) {
    const fs::path dir = fs::path(config_.out_dir) / "trials" / config_.conditions[c].name;
    fs::create_directories(dir);
    for (int run = 0; run < config_.n_runs; ++run) {
      const TrialList tl = Trials(c, run);
      const std::string stem = "run" + std::to_string(run);
      WriteTrials((dir / (stem + ".trials")).string(), tl.trials);
      WriteEnrollments((dir / (stem + ".enroll")).string(), tl.enrollments);
    }
  }
}

void Experiment::WriteScoreFiles(FrontEndKind fe, BackendKind be) {
  const fs::path base = fs::path(config_.out_dir) /
                        (std::string(FrontEndName(fe)) + "_" + std::string(BackendName(be))) /
                        "scores";
  for (std::size_t c = 0; c < config_.conditions.size(); ++c) {
    const fs::path dir = base / config_.conditions[c].name;
    fs::create_directories(dir);
    for (int run = 0; run < config_.n_runs; ++run) {
      const TrialList tl = Trials(c, run);
      WriteScores((dir / ("run" + std::to_string(run) + ".scores")).string(),
                  Score(fe, be, tl));
    }
  }
}

}  // namespace svtk
