// core/src/experiment-config.cc

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
#include <set>
#include <sstream>

#include "json.hpp"
#include "svtk/experiment.h"

namespace svtk {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

std::string Join(const std::string &parent, const std::string &key) {
  return parent.empty() ? key : parent + "." + key;
}

std::string Index(const std::string &parent, std::size_t i) {
  return parent + "[" + std::to_string(i) + "]";
}

// Walks one JSON object, remembering which keys were consumed so leftovers
// can be reported.
class ObjectReader {
 public:
  ObjectReader(const Json &j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(Where(), "expected an object");
  }

  ~ObjectReader() = default;

  bool Has(const std::string &key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const Json &At(const std::string &key) { return j_.at(key); }
  std::string Field(const std::string &key) const { return Join(path_, key); }

  void Int(const std::string &key, int *out, int min_value) {
    if (!Has(key)) return;
    const Json &v = At(key);
    if (!v.is_number_integer())
      throw ConfigError(Field(key), "expected an integer");
    const auto value = v.get<long long>();
    if (value < min_value || value > INT32_MAX)
      throw ConfigError(Field(key), "must be >= " + std::to_string(min_value));
    *out = static_cast<int>(value);
  }

  void U64(const std::string &key, std::uint64_t *out) {
    if (!Has(key)) return;
    const Json &v = At(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      throw ConfigError(Field(key), "expected a nonnegative integer");
    *out = v.get<std::uint64_t>();
  }

  void Real(const std::string &key, double *out) {
    if (!Has(key)) return;
    const Json &v = At(key);
    if (!v.is_number()) throw ConfigError(Field(key), "expected a number");
    *out = v.get<double>();
  }

  void Bool(const std::string &key, bool *out) {
    if (!Has(key)) return;
    const Json &v = At(key);
    if (!v.is_boolean()) throw ConfigError(Field(key), "expected true or false");
    *out = v.get<bool>();
  }

  void String(const std::string &key, std::string *out) {
    if (!Has(key)) return;
    const Json &v = At(key);
    if (!v.is_string()) throw ConfigError(Field(key), "expected a string");
    *out = v.get<std::string>();
  }

  // Throws on keys that no accessor asked about.
  void Finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key()))
        throw ConfigError(Field(it.key()), "unknown key");
  }

 private:
  std::string Where() const { return path_.empty() ? "<root>" : path_; }

  const Json &j_;
  std::string path_;
  std::set<std::string> seen_;
};

void Require(bool ok, const std::string &field, const std::string &what) {
  if (!ok) throw ConfigError(field, what);
}

SynthSpec ParseSynth(const Json &j, const std::string &path) {
  SynthSpec s;
  ObjectReader r(j, path);
  r.Int("n_speakers", &s.n_speakers, 1);
  r.Int("utts_per_speaker", &s.utts_per_speaker, 1);
  r.Int("frames_per_utt", &s.frames_per_utt, 1);
  r.Int("feature_dim", &s.feature_dim, 1);
  r.Real("speaker_spread", &s.speaker_spread);
  r.Real("channel_spread", &s.channel_spread);
  r.Real("frame_noise", &s.frame_noise);
  r.U64("seed", &s.seed);
  r.Finish();
  Require(s.speaker_spread >= 0, r.Field("speaker_spread"), "must be >= 0");
  Require(s.channel_spread >= 0, r.Field("channel_spread"), "must be >= 0");
  Require(s.frame_noise >= 0, r.Field("frame_noise"), "must be >= 0");
  return s;
}

CorpusSource ParseCorpus(const Json &j, const std::string &path,
                         const std::string &base_dir) {
  CorpusSource c;
  ObjectReader r(j, path);
  if (r.Has("index")) {
    r.String("index", &c.index_path);
    Require(!c.index_path.empty(), r.Field("index"), "must not be empty");
    fs::path p(c.index_path);
    if (p.is_relative()) c.index_path = (fs::path(base_dir) / p).lexically_normal().string();
  }
  if (r.Has("synth")) c.synth = ParseSynth(r.At("synth"), r.Field("synth"));
  r.Finish();
  Require(c.index_path.empty() != !c.synth.has_value(), path,
          "exactly one of 'index' and 'synth' is required");
  return c;
}

void ParseMlp(const Json &j, const std::string &path, MlpHyper *h) {
  ObjectReader r(j, path);
  if (r.Has("hidden")) {
    const Json &v = r.At("hidden");
    Require(v.is_array() && !v.empty(), r.Field("hidden"),
            "expected a nonempty array of layer widths");
    h->hidden.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      Require(v[i].is_number_integer() && v[i].get<long long>() >= 1,
              Index(r.Field("hidden"), i), "layer width must be an integer >= 1");
      h->hidden.push_back(v[i].get<int>());
    }
  }
  r.Real("learning_rate", &h->learning_rate);
  r.Real("momentum_initial", &h->momentum_initial);
  r.Real("momentum_final", &h->momentum_final);
  r.Int("momentum_switch_epoch", &h->momentum_switch_epoch, 0);
  r.Real("dropout", &h->dropout);
  r.Int("batch_size", &h->batch_size, 1);
  r.Int("epochs", &h->epochs, 0);
  r.Int("frame_stride", &h->frame_stride, 1);
  r.Finish();
  Require(h->learning_rate > 0, r.Field("learning_rate"), "must be > 0");
  Require(h->momentum_initial >= 0 && h->momentum_initial < 1,
          r.Field("momentum_initial"), "must lie in [0, 1)");
  Require(h->momentum_final >= 0 && h->momentum_final < 1,
          r.Field("momentum_final"), "must lie in [0, 1)");
  Require(h->dropout >= 0 && h->dropout < 1, r.Field("dropout"),
          "must lie in [0, 1)");
}

DcfParams ParseDcf(const Json &j, const std::string &path, DcfParams d) {
  ObjectReader r(j, path);
  r.Real("c_miss", &d.c_miss);
  r.Real("c_fa", &d.c_fa);
  r.Real("p_target", &d.p_target);
  r.Bool("normalize", &d.normalize);
  r.Real("report_scale", &d.report_scale);
  r.Finish();
  Require(d.c_miss > 0, r.Field("c_miss"), "must be > 0");
  Require(d.c_fa > 0, r.Field("c_fa"), "must be > 0");
  Require(d.p_target > 0 && d.p_target < 1, r.Field("p_target"),
          "must lie in (0, 1)");
  Require(d.report_scale > 0, r.Field("report_scale"), "must be > 0");
  return d;
}

template <typename Kind, typename ParseFn>
std::vector<Kind> ParseKindList(const Json &j, const std::string &field,
                                ParseFn parse, const char *what) {
  std::vector<Kind> kinds;
  auto one = [&](const Json &v, const std::string &f) {
    Require(v.is_string(), f, "expected a string");
    auto k = parse(v.template get<std::string>());
    if (!k)
      throw ConfigError(f, std::string("unknown ") + what + " '" +
                               v.template get<std::string>() + "'");
    kinds.push_back(*k);
  };
  if (j.is_array()) {
    Require(!j.empty(), field, "must not be empty");
    for (std::size_t i = 0; i < j.size(); ++i) one(j[i], Index(field, i));
  } else {
    one(j, field);
  }
  return kinds;
}

Json SynthToJson(const SynthSpec &s) {
  return Json{{"n_speakers", s.n_speakers},
              {"utts_per_speaker", s.utts_per_speaker},
              {"frames_per_utt", s.frames_per_utt},
              {"feature_dim", s.feature_dim},
              {"speaker_spread", s.speaker_spread},
              {"channel_spread", s.channel_spread},
              {"frame_noise", s.frame_noise},
              {"seed", s.seed}};
}

Json CorpusToJson(const CorpusSource &c) {
  if (c.synth) return Json{{"synth", SynthToJson(*c.synth)}};
  return Json{{"index", c.index_path}};
}

Json MlpToJson(const MlpHyper &h) {
  return Json{{"hidden", h.hidden},
              {"learning_rate", h.learning_rate},
              {"momentum_initial", h.momentum_initial},
              {"momentum_final", h.momentum_final},
              {"momentum_switch_epoch", h.momentum_switch_epoch},
              {"dropout", h.dropout},
              {"batch_size", h.batch_size},
              {"epochs", h.epochs},
              {"frame_stride", h.frame_stride}};
}

Json DcfToJson(const DcfParams &d) {
  return Json{{"c_miss", d.c_miss},
              {"c_fa", d.c_fa},
              {"p_target", d.p_target},
              {"normalize", d.normalize},
              {"report_scale", d.report_scale}};
}

}  // namespace

std::string_view FrontEndName(FrontEndKind kind) {
  switch (kind) {
    case FrontEndKind::kGmmIvector: return "gmm_ivector";
    case FrontEndKind::kPosteriorIvector: return "posterior_ivector";
    case FrontEndKind::kDvector: return "dvector";
  }
  return "unknown";
}

std::optional<FrontEndKind> ParseFrontEndKind(std::string_view name) {
  for (FrontEndKind k : {FrontEndKind::kGmmIvector,
                         FrontEndKind::kPosteriorIvector, FrontEndKind::kDvector})
    if (FrontEndName(k) == name) return k;
  return std::nullopt;
}

PosteriorConfig::PosteriorConfig() {
  net.hidden.assign(7, 2048);
  net.learning_rate = 0.1;
}

ExperimentConfig::ExperimentConfig() {
  // Enrollment lengths of 1, 2, 3, 5, 10 and 15 segments against one-segment
  // tests.
  for (int x : {1, 2, 3, 5, 10, 15})
    conditions.push_back({std::to_string(15 * x) + "-15", x, 2});
}

void ValidateExperimentConfig(const ExperimentConfig &c) {
  Require(c.dev.synth.has_value() != !c.dev.index_path.empty(), "dev",
          "exactly one of 'index' and 'synth' is required");
  Require(c.eval.synth.has_value() != !c.eval.index_path.empty(), "eval",
          "exactly one of 'index' and 'synth' is required");
  Require(c.segment_frames >= 1, "segment_frames", "must be >= 1");
  Require(!c.front_ends.empty(), "front_ends", "must not be empty");
  Require(!c.back_ends.empty(), "back_ends", "must not be empty");
  Require(!c.conditions.empty(), "conditions", "must not be empty");
  std::set<std::string> names;
  for (std::size_t i = 0; i < c.conditions.size(); ++i) {
    const TestCondition &tc = c.conditions[i];
    const std::string f = Index("conditions", i);
    Require(!tc.name.empty(), f + ".name", "must not be empty");
    Require(tc.name.find_first_of("/\\ ") == std::string::npos, f + ".name",
            "must not contain spaces or path separators");
    Require(names.insert(tc.name).second, f + ".name", "duplicate condition name");
    Require(tc.enroll_segments >= 1, f + ".enroll_segments", "must be >= 1");
    Require(tc.tests_per_speaker >= 1, f + ".tests_per_speaker", "must be >= 1");
  }
  Require(c.n_runs >= 1, "n_runs", "must be >= 1");
  Require(c.ubm.num_components >= 1, "ubm.num_components", "must be >= 1");
  Require(c.ubm.var_floor_factor >= 0, "ubm.var_floor_factor", "must be >= 0");
  Require(c.tv.num_factors >= 1, "tv.num_factors", "must be >= 1");
  Require(c.posterior.source == "net" || c.posterior.source == "files",
          "posterior.source", "must be 'net' or 'files'");
  Require(c.posterior.source != "files" || !c.posterior.files_dir.empty(),
          "posterior.files_dir", "required when posterior.source is 'files'");
  Require(c.backend.lda_dim >= 1, "backend.lda_dim", "must be >= 1");
  Require(!c.backend.lr_ridge || *c.backend.lr_ridge >= 0, "backend.lr_ridge",
          "must be >= 0");
  Require(c.backend.wccn_ridge >= 0, "backend.wccn_ridge", "must be >= 0");
  Require(!c.out_dir.empty(), "out_dir", "must not be empty");
}

ExperimentConfig ParseExperimentConfig(const std::string &json_text,
                                       const std::string &base_dir) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const Json::parse_error &e) {
    throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
  }
  ExperimentConfig c;
  ObjectReader r(j, "");
  if (r.Has("dev")) c.dev = ParseCorpus(r.At("dev"), "dev", base_dir);
  if (r.Has("eval")) c.eval = ParseCorpus(r.At("eval"), "eval", base_dir);
  r.Int("segment_frames", &c.segment_frames, 1);

  Require(!(r.Has("front_end") && r.Has("front_ends")), "front_end",
          "give either 'front_end' or 'front_ends'");
  for (const char *key : {"front_end", "front_ends"})
    if (r.Has(key))
      c.front_ends = ParseKindList<FrontEndKind>(r.At(key), key,
                                                 ParseFrontEndKind, "front end");
  Require(!(r.Has("back_end") && r.Has("back_ends")), "back_end",
          "give either 'back_end' or 'back_ends'");
  for (const char *key : {"back_end", "back_ends"})
    if (r.Has(key))
      c.back_ends = ParseKindList<BackendKind>(r.At(key), key, ParseBackendKind,
                                               "back end");

  if (r.Has("conditions")) {
    const Json &v = r.At("conditions");
    Require(v.is_array(), "conditions", "expected an array");
    c.conditions.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      TestCondition tc;
      ObjectReader cr(v[i], Index("conditions", i));
      cr.String("name", &tc.name);
      cr.Int("enroll_segments", &tc.enroll_segments, 1);
      cr.Int("tests_per_speaker", &tc.tests_per_speaker, 1);
      cr.Finish();
      if (tc.name.empty()) tc.name = "x" + std::to_string(tc.enroll_segments);
      c.conditions.push_back(tc);
    }
  }
  r.Int("n_runs", &c.n_runs, 1);
  r.U64("seed", &c.seed);

  if (r.Has("ubm")) {
    ObjectReader u(r.At("ubm"), "ubm");
    u.Int("num_components", &c.ubm.num_components, 1);
    u.Int("iters", &c.ubm.iters, 0);
    u.Real("var_floor_factor", &c.ubm.var_floor_factor);
    u.Finish();
  }
  if (r.Has("tv")) {
    ObjectReader t(r.At("tv"), "tv");
    t.Int("num_factors", &c.tv.num_factors, 1);
    t.Int("iters", &c.tv.iters, 0);
    t.Bool("update_sigma", &c.tv.update_sigma);
    t.Finish();
  }
  if (r.Has("posterior")) {
    ObjectReader p(r.At("posterior"), "posterior");
    p.String("source", &c.posterior.source);
    p.String("files_dir", &c.posterior.files_dir);
    if (!c.posterior.files_dir.empty() && fs::path(c.posterior.files_dir).is_relative())
      c.posterior.files_dir =
          (fs::path(base_dir) / c.posterior.files_dir).lexically_normal().string();
    p.Int("keep_components", &c.posterior.keep_components, 1);
    p.Int("half_window", &c.posterior.half_window, 0);
    if (p.Has("net")) ParseMlp(p.At("net"), "posterior.net", &c.posterior.net);
    p.Finish();
  }
  if (r.Has("dvector")) {
    ObjectReader d(r.At("dvector"), "dvector");
    d.Int("half_window", &c.dvector.half_window, 0);
    if (d.Has("net")) ParseMlp(d.At("net"), "dvector.net", &c.dvector.net);
    d.Finish();
  }
  if (r.Has("backend")) {
    ObjectReader b(r.At("backend"), "backend");
    b.Int("lda_dim", &c.backend.lda_dim, 1);
    b.Int("plda_latent_dim", &c.backend.plda_latent_dim, 0);
    b.Int("plda_iters", &c.backend.plda_iters, 0);
    if (b.Has("lr_ridge")) {
      double ridge = 0.0;
      b.Real("lr_ridge", &ridge);
      c.backend.lr_ridge = ridge;
    }
    b.Bool("lr_center", &c.backend.lr_center);
    b.Real("wccn_ridge", &c.backend.wccn_ridge);
    b.Finish();
  }
  if (r.Has("dcf08")) c.dcf08 = ParseDcf(r.At("dcf08"), "dcf08", c.dcf08);
  if (r.Has("dcf10")) c.dcf10 = ParseDcf(r.At("dcf10"), "dcf10", c.dcf10);
  r.String("out_dir", &c.out_dir);
  r.Bool("reuse_models", &c.reuse_models);
  r.Bool("write_scores", &c.write_scores);
  r.Bool("write_det", &c.write_det);
  r.Finish();
  ValidateExperimentConfig(c);
  return c;
}

ExperimentConfig LoadExperimentConfig(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path);
  std::stringstream text;
  text << in.rdbuf();
  return ParseExperimentConfig(text.str(), fs::path(path).parent_path().string().empty()
                                               ? "."
                                               : fs::path(path).parent_path().string());
}

std::string ExperimentConfigToJson(const ExperimentConfig &c) {
  Json conditions = Json::array();
  for (const TestCondition &tc : c.conditions)
    conditions.push_back({{"name", tc.name},
                          {"enroll_segments", tc.enroll_segments},
                          {"tests_per_speaker", tc.tests_per_speaker}});
  Json front_ends = Json::array();
  for (FrontEndKind k : c.front_ends) front_ends.push_back(FrontEndName(k));
  Json back_ends = Json::array();
  for (BackendKind k : c.back_ends) back_ends.push_back(BackendName(k));
  Json backend{{"lda_dim", c.backend.lda_dim},
               {"plda_latent_dim", c.backend.plda_latent_dim},
               {"plda_iters", c.backend.plda_iters},
               {"lr_ridge", nullptr},
               {"lr_center", c.backend.lr_center},
               {"wccn_ridge", c.backend.wccn_ridge}};
  if (c.backend.lr_ridge) backend["lr_ridge"] = *c.backend.lr_ridge;
  Json j{{"dev", CorpusToJson(c.dev)},
         {"eval", CorpusToJson(c.eval)},
         {"segment_frames", c.segment_frames},
         {"front_ends", front_ends},
         {"back_ends", back_ends},
         {"conditions", conditions},
         {"n_runs", c.n_runs},
         {"seed", c.seed},
         {"ubm", {{"num_components", c.ubm.num_components},
                  {"iters", c.ubm.iters},
                  {"var_floor_factor", c.ubm.var_floor_factor}}},
         {"tv", {{"num_factors", c.tv.num_factors},
                 {"iters", c.tv.iters},
                 {"update_sigma", c.tv.update_sigma}}},
         {"posterior", {{"source", c.posterior.source},
                        {"files_dir", c.posterior.files_dir},
                        {"keep_components", c.posterior.keep_components},
                        {"half_window", c.posterior.half_window},
                        {"net", MlpToJson(c.posterior.net)}}},
         {"dvector", {{"half_window", c.dvector.half_window},
                      {"net", MlpToJson(c.dvector.net)}}},
         {"backend", backend},
         {"dcf08", DcfToJson(c.dcf08)},
         {"dcf10", DcfToJson(c.dcf10)},
         {"out_dir", c.out_dir},
         {"reuse_models", c.reuse_models},
         {"write_scores", c.write_scores},
         {"write_det", c.write_det}};
  return j.dump(2);
}

}  // namespace svtk
