// tools/svtk-main.cc

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

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "svtk/experiment.h"

namespace {

using namespace svtk;
namespace fs = std::filesystem;

// Flags shared by every subcommand.
struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<int> n_runs;
  std::vector<std::string> front_ends;
  std::vector<std::string> back_ends;
  std::string report;
};

void AddConfig(CLI::App *cmd, Common *c) {
  cmd->add_option("--config", c->config_path, "Experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
}

void AddSelection(CLI::App *cmd, Common *c, bool front, bool back) {
  if (front)
    cmd->add_option("--front-end", c->front_ends,
                    "Front end(s): gmm_ivector, posterior_ivector, dvector");
  if (back)
    cmd->add_option("--back-end", c->back_ends,
                    "Back end(s): cosine, wccn_cosine, lda_cosine, lda_plda, lr_cosine");
}

ExperimentConfig LoadWithOverrides(const Common &c) {
  ExperimentConfig cfg = LoadExperimentConfig(c.config_path);
  if (c.seed) cfg.seed = *c.seed;
  if (!c.out_dir.empty()) cfg.out_dir = c.out_dir;
  if (c.n_runs) cfg.n_runs = *c.n_runs;
  if (!c.front_ends.empty()) {
    cfg.front_ends.clear();
    for (std::size_t i = 0; i < c.front_ends.size(); ++i) {
      auto k = ParseFrontEndKind(c.front_ends[i]);
      if (!k) throw ConfigError("--front-end", "unknown front end '" + c.front_ends[i] + "'");
      cfg.front_ends.push_back(*k);
    }
  }
  if (!c.back_ends.empty()) {
    cfg.back_ends.clear();
    for (std::size_t i = 0; i < c.back_ends.size(); ++i) {
      auto k = ParseBackendKind(c.back_ends[i]);
      if (!k) throw ConfigError("--back-end", "unknown back end '" + c.back_ends[i] + "'");
      cfg.back_ends.push_back(*k);
    }
  }
  ValidateExperimentConfig(cfg);
  return cfg;
}

void WriteReport(const std::string &path, const std::string &json) {
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  out << json;
  out.close();
  if (!out) throw IoError("cannot write report " + path);
  std::cout << "report: " << path << "\n";
}

std::string ReportPath(const Common &c, const Experiment &exp, const char *name) {
  return c.report.empty() ? exp.OutPath(name) : c.report;
}

int EvaluateFiles(const Common &c, const std::string &trials_path,
                  const std::string &scores_path, const std::string &det_path) {
  ExperimentConfig cfg = LoadWithOverrides(c);
  const TrialSet trials = ReadTrials(trials_path);
  const ScoredTrials scored = ReadScores(scores_path, trials);
  const MetricValues m = ComputeMetrics(scored, cfg.dcf08, cfg.dcf10);
  std::printf("trials %zu (target %zu, nontarget %zu)\n", trials.size(),
              trials.NumTargets(), trials.NumNontargets());
  std::printf("EER %.4f%%  DCF08 %.4f (raw %.6f)  DCF10 %.4f (raw %.6f)\n",
              100.0 * m.eer, m.dcf08, m.dcf08_raw, m.dcf10, m.dcf10_raw);
  if (!det_path.empty()) {
    const auto det = DetCurve(scored);
    WriteDetCsv(det_path, det);
  }
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"svtk: speaker verification toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Common c;
  app.add_option("--seed", c.seed, "Master seed override")->expected(1);
  app.add_option("--out-dir", c.out_dir, "Output directory override");

  auto *synth = app.add_subcommand("synth", "Write the synthetic dev/eval corpora");
  AddConfig(synth, &c);

  auto *train_fe = app.add_subcommand("train-frontend",
                                      "Train front ends and write embeddings");
  AddConfig(train_fe, &c);
  AddSelection(train_fe, &c, true, false);

  auto *train_be = app.add_subcommand("train-backend", "Fit back ends on dev embeddings");
  AddConfig(train_be, &c);
  AddSelection(train_be, &c, true, true);

  auto *trials = app.add_subcommand("trials", "Write trial and enrollment lists");
  AddConfig(trials, &c);
  trials->add_option("--n-runs", c.n_runs, "Runs per condition")->check(CLI::PositiveNumber);

  auto *score = app.add_subcommand("score", "Write score files for every run");
  AddConfig(score, &c);
  AddSelection(score, &c, true, true);
  score->add_option("--n-runs", c.n_runs, "Runs per condition")->check(CLI::PositiveNumber);

  std::string trials_file, scores_file, det_file;
  auto *evaluate = app.add_subcommand(
      "evaluate", "Run the experiment, or score given trial/score files");
  AddConfig(evaluate, &c);
  AddSelection(evaluate, &c, true, true);
  evaluate->add_option("--n-runs", c.n_runs, "Runs per condition")->check(CLI::PositiveNumber);
  evaluate->add_option("--report", c.report, "Report path (default <out-dir>/report.json)");
  auto *t_opt = evaluate->add_option("--trials", trials_file, "Trial list to evaluate")
                    ->check(CLI::ExistingFile);
  auto *s_opt = evaluate->add_option("--scores", scores_file, "Score file to evaluate")
                    ->check(CLI::ExistingFile);
  t_opt->needs(s_opt);
  s_opt->needs(t_opt);
  evaluate->add_option("--det", det_file, "DET CSV output for --scores");

  auto *compare = app.add_subcommand("compare", "Compare back ends on one front end");
  AddConfig(compare, &c);
  AddSelection(compare, &c, true, true);
  compare->add_option("--n-runs", c.n_runs, "Runs per condition")->check(CLI::PositiveNumber);
  compare->add_option("--report", c.report, "Report path (default <out-dir>/compare.json)");

  auto *fuse = app.add_subcommand("fuse", "Fuse front ends sharing one back end");
  AddConfig(fuse, &c);
  AddSelection(fuse, &c, true, true);
  fuse->add_option("--n-runs", c.n_runs, "Runs per condition")->check(CLI::PositiveNumber);
  fuse->add_option("--report", c.report, "Report path (default <out-dir>/fuse.json)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*evaluate && !trials_file.empty())
      return EvaluateFiles(c, trials_file, scores_file, det_file);

    Experiment exp(LoadWithOverrides(c));
    const ExperimentConfig &cfg = exp.config();
    if (*synth) {
      exp.WriteSynthCorpora();
      std::cout << "corpora written below " << exp.OutPath("corpus") << "\n";
    } else if (*train_fe) {
      for (FrontEndKind fe : cfg.front_ends) {
        exp.SaveFrontEnd(fe);
        std::cout << "trained " << FrontEndName(fe) << "\n";
      }
    } else if (*train_be) {
      for (FrontEndKind fe : cfg.front_ends)
        for (BackendKind be : cfg.back_ends) {
          exp.SaveBackend(fe, be);
          std::cout << "fitted " << BackendName(be) << " on " << FrontEndName(fe) << "\n";
        }
    } else if (*trials) {
      exp.WriteTrialFiles();
      std::cout << "trial lists written below " << exp.OutPath("trials") << "\n";
    } else if (*score) {
      for (FrontEndKind fe : cfg.front_ends)
        for (BackendKind be : cfg.back_ends) exp.WriteScoreFiles(fe, be);
      std::cout << "score files written below " << exp.OutPath("") << "\n";
    } else if (*evaluate) {
      const SystemResult r = exp.Evaluate(cfg.front_ends.front(), cfg.back_ends.front());
      std::cout << FormatTable(r);
      WriteReport(ReportPath(c, exp, "report.json"), ReportToJson(cfg, r));
    } else if (*compare) {
      const ComparisonResult r = exp.Compare(cfg.front_ends.front(), cfg.back_ends);
      std::cout << FormatTable(r);
      WriteReport(ReportPath(c, exp, "compare.json"), ReportToJson(cfg, r));
    } else if (*fuse) {
      const FusionResult r = exp.Fuse(cfg.front_ends, cfg.back_ends.front());
      std::cout << FormatTable(r);
      WriteReport(ReportPath(c, exp, "fuse.json"), ReportToJson(cfg, r));
    }
  } catch (const ConfigError &e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
