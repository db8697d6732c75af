// core/src/trials.cc

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

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "svtk/eval.h"
#include "svtk/rng.h"

namespace svtk {

namespace {

std::ofstream OpenForWrite(const std::string &path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

std::ifstream OpenForRead(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  return in;
}

void CloseChecked(std::ofstream &out, const std::string &path) {
  out.close();
  if (!out) throw IoError("write failed: " + path);
}

std::string LineError(const std::string &path, int line, const std::string &what) {
  return path + ":" + std::to_string(line) + ": " + what;
}

}  // namespace

std::string SegmentName(const std::string &utterance_id, int k) {
  return utterance_id + "-s" + std::to_string(k);
}

SegmentInventory MakeSegmentInventory(const CorpusIndex &index,
                                      std::span<const int> segment_counts) {
  if (segment_counts.size() != index.NumUtterances())
    throw DimensionMismatch("one segment count per utterance is required");
  SegmentInventory inv(index.NumSpeakers());
  for (std::size_t s = 0; s < index.NumSpeakers(); ++s)
    inv[s].speaker_id = index.speakers()[s];
  for (std::size_t u = 0; u < index.NumUtterances(); ++u) {
    const UtteranceEntry &e = index.utterances()[u];
    ConversationSegments conv;
    conv.utterance_id = e.utterance_id;
    for (int k = 0; k < segment_counts[u]; ++k)
      conv.segments.push_back(SegmentName(e.utterance_id, k));
    inv[index.SpeakerIndex(e.speaker_id)].conversations.push_back(std::move(conv));
  }
  return inv;
}

TrialList BuildTrials(const SegmentInventory &inventory,
                      const TestCondition &condition, std::uint64_t seed) {
  if (condition.enroll_segments < 1)
    throw InvalidArgument("enroll_segments must be >= 1");
  if (condition.tests_per_speaker < 1)
    throw InvalidArgument("tests_per_speaker must be >= 1");
  if (inventory.size() < 2)
    throw InsufficientData("trials need at least 2 speakers");
  const auto need_tests = static_cast<std::size_t>(condition.tests_per_speaker);
  const auto need_enroll = static_cast<std::size_t>(condition.enroll_segments);

  Rng rng(seed);
  TrialList out;
  std::vector<std::vector<std::string>> tests(inventory.size());
  for (std::size_t s = 0; s < inventory.size(); ++s) {
    const SpeakerSegments &spk = inventory[s];
    std::size_t total = 0;
    for (const auto &c : spk.conversations) total += c.segments.size();
    std::vector<std::size_t> eligible;
    for (std::size_t c = 0; c < spk.conversations.size(); ++c) {
      const std::size_t n = spk.conversations[c].segments.size();
      if (n >= need_tests && total - n >= need_enroll) eligible.push_back(c);
    }
    if (eligible.empty()) {
      std::ostringstream msg;
      msg << "speaker " << spk.speaker_id << " has no conversation with "
          << need_tests << " test segments leaving " << need_enroll
          << " enrollment segments in the others";
      throw InsufficientData(msg.str());
    }
    const std::size_t test_conv = eligible[rng.Index(eligible.size())];

    std::vector<std::string> picks = spk.conversations[test_conv].segments;
    rng.Shuffle(&picks);
    picks.resize(need_tests);
    tests[s] = std::move(picks);

    std::vector<std::string> pool;
    for (std::size_t c = 0; c < spk.conversations.size(); ++c)
      if (c != test_conv)
        pool.insert(pool.end(), spk.conversations[c].segments.begin(),
                    spk.conversations[c].segments.end());
    rng.Shuffle(&pool);
    pool.resize(need_enroll);
    out.enrollments.push_back({spk.speaker_id, std::move(pool)});
  }

  out.trials.trials.reserve(inventory.size() * inventory.size() * need_tests);
  for (std::size_t e = 0; e < inventory.size(); ++e)
    for (std::size_t t = 0; t < inventory.size(); ++t)
      for (const std::string &seg : tests[t])
        out.trials.trials.push_back({inventory[e].speaker_id, seg, e == t});
  return out;
}

ScoredTrials ScoreTrials(
    const Backend &backend,
    const std::unordered_map<std::string, SpeakerModel> &enroll_models,
    const std::unordered_map<std::string, Vector> &test_embeddings,
    const TrialSet &trials) {
  ScoredTrials out;
  out.trials = trials;
  out.scores.reserve(trials.size());
  std::unordered_map<std::string, Vector> transformed;
  for (const Trial &t : trials.trials) {
    auto em = enroll_models.find(t.enroll_speaker);
    if (em == enroll_models.end())
      throw InvalidArgument("no enrollment model for speaker '" +
                            t.enroll_speaker + "'");
    auto tm = transformed.find(t.test_utt);
    if (tm == transformed.end()) {
      auto raw = test_embeddings.find(t.test_utt);
      if (raw == test_embeddings.end())
        throw InvalidArgument("no embedding for test utterance '" + t.test_utt + "'");
      tm = transformed.emplace(t.test_utt, backend.Transform(raw->second)).first;
    }
    out.scores.push_back(backend.Score(em->second.m, tm->second));
  }
  return out;
}

void WriteTrials(const std::string &path, const TrialSet &trials) {
  std::ofstream out = OpenForWrite(path);
  for (const Trial &t : trials.trials)
    out << t.enroll_speaker << ' ' << t.test_utt << ' '
        << (t.target ? "target" : "nontarget") << '\n';
  CloseChecked(out, path);
}

TrialSet ReadTrials(const std::string &path) {
  std::ifstream in = OpenForRead(path);
  TrialSet set;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(line);
    Trial t;
    std::string label, extra;
    if (!(fields >> t.enroll_speaker)) continue;  // blank line
    if (!(fields >> t.test_utt >> label) || (fields >> extra))
      throw FormatError(LineError(path, lineno, "expected 3 fields"));
    if (label == "target") {
      t.target = true;
    } else if (label != "nontarget") {
      throw FormatError(LineError(path, lineno, "bad label '" + label + "'"));
    }
    set.trials.push_back(std::move(t));
  }
  return set;
}

void WriteEnrollments(const std::string &path,
                      std::span<const Enrollment> enrollments) {
  std::ofstream out = OpenForWrite(path);
  for (const Enrollment &e : enrollments) {
    out << e.speaker_id;
    for (const std::string &s : e.segments) out << ' ' << s;
    out << '\n';
  }
  CloseChecked(out, path);
}

std::vector<Enrollment> ReadEnrollments(const std::string &path) {
  std::ifstream in = OpenForRead(path);
  std::vector<Enrollment> result;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(line);
    Enrollment e;
    if (!(fields >> e.speaker_id)) continue;
    std::string seg;
    while (fields >> seg) e.segments.push_back(seg);
    if (e.segments.empty())
      throw FormatError(LineError(path, lineno, "speaker without segments"));
    result.push_back(std::move(e));
  }
  return result;
}

void WriteScores(const std::string &path, const ScoredTrials &scored) {
  scored.Validate();
  std::ofstream out = OpenForWrite(path);
  char buf[64];
  for (std::size_t i = 0; i < scored.scores.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.6f", scored.scores[i]);
    out << scored.trials.trials[i].enroll_speaker << ' '
        << scored.trials.trials[i].test_utt << ' ' << buf << '\n';
  }
  CloseChecked(out, path);
}

ScoredTrials ReadScores(const std::string &path, const TrialSet &trials) {
  std::ifstream in = OpenForRead(path);
  std::map<std::pair<std::string, std::string>, double> table;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(line);
    std::string enroll, test, extra;
    double score;
    if (!(fields >> enroll)) continue;
    if (!(fields >> test >> score) || (fields >> extra))
      throw FormatError(LineError(path, lineno, "expected <enroll> <test> <score>"));
    if (!table.emplace(std::make_pair(enroll, test), score).second)
      throw FormatError(LineError(path, lineno, "duplicate trial"));
  }
  ScoredTrials out;
  out.trials = trials;
  for (const Trial &t : trials.trials) {
    auto it = table.find({t.enroll_speaker, t.test_utt});
    if (it == table.end())
      throw InvalidArgument(path + ": no score for trial " + t.enroll_speaker +
                            " " + t.test_utt);
    out.scores.push_back(it->second);
  }
  return out;
}

void WriteDetCsv(const std::string &path, std::span<const DetPoint> points) {
  std::ofstream out = OpenForWrite(path);
  out << "p_fa,p_miss\n";
  char buf[96];
  for (const DetPoint &p : points) {
    std::snprintf(buf, sizeof(buf), "%.10g,%.10g\n", p.p_fa, p.p_miss);
    out << buf;
  }
  CloseChecked(out, path);
}

}  // namespace svtk
