// svtk/eval.h

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

#ifndef SVTK_EVAL_H_
#define SVTK_EVAL_H_

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "svtk/backend.h"
#include "svtk/data.h"

namespace svtk {

struct Trial {
  std::string enroll_speaker;
  std::string test_utt;
  bool target = false;

  bool operator==(const Trial &) const = default;
};

struct TrialSet {
  std::vector<Trial> trials;

  std::size_t size() const { return trials.size(); }
  std::size_t NumTargets() const;
  std::size_t NumNontargets() const { return size() - NumTargets(); }
};

// Scores parallel to trials.trials.
struct ScoredTrials {
  TrialSet trials;
  std::vector<double> scores;

  // Throws InvalidArgument when the lengths differ or a score is not finite.
  void Validate() const;
};

// Detection-cost parameters. The reported value is the minimum cost,
// divided by min(c_miss p_target, c_fa (1 - p_target)) when `normalize`,
// then multiplied by report_scale.
struct DcfParams {
  double c_miss = 1.0;
  double c_fa = 1.0;
  double p_target = 0.01;
  bool normalize = false;
  double report_scale = 1.0;

  void Validate() const;
  static DcfParams Sre08() { return {10.0, 1.0, 0.01, false, 100.0}; }
  static DcfParams Sre10() { return {1.0, 1.0, 0.001, true, 1.0}; }
};

// A trial is accepted at threshold t iff its score is > t (see Decide()).
struct OperatingPoint {
  double threshold = 0.0;
  double p_miss = 0.0;
  double p_fa = 0.0;
};

// One point at t = -inf followed by one per distinct score in ascending
// order, so P_miss is non-decreasing and P_fa non-increasing along the list.
// Throws InvalidArgument unless both classes are present.
std::vector<OperatingPoint> OperatingPoints(const ScoredTrials &scored);

// The first operating point with P_miss >= P_fa, linearly interpolated with
// its predecessor when the two rates differ there.
double Eer(const ScoredTrials &scored);

// Minimum detection cost before normalization and scaling.
double MinDcfRaw(const ScoredTrials &scored, const DcfParams &params);
// Normalized and scaled per `params`.
double MinDcf(const ScoredTrials &scored, const DcfParams &params);

struct DetPoint {
  double p_fa = 0.0;
  double p_miss = 0.0;
};
std::vector<DetPoint> DetCurve(const ScoredTrials &scored);

// Per-trial mean over systems scored on the same trial list. Throws
// InvalidArgument on an empty input or when the trial lists differ.
ScoredTrials FuseScores(std::span<const ScoredTrials> systems);

// (eer_lr - eer_best) / eer_best. Throws InvalidArgument when eer_best is
// not positive.
double RelativeImprovement(double eer_lr, double eer_best);

// s -> (s - mean_nontarget) / (mean_target - mean_nontarget). Throws
// InvalidArgument when the class means coincide.
ScoredTrials NormalizeForHistogram(const ScoredTrials &scored);

// ---------------------------------------------------------------------------
// Trial construction.

struct ConversationSegments {
  std::string utterance_id;
  std::vector<std::string> segments;
};

struct SpeakerSegments {
  std::string speaker_id;
  std::vector<ConversationSegments> conversations;
};

using SegmentInventory = std::vector<SpeakerSegments>;

// Name of segment k of an utterance, as produced by SplitSegments().
std::string SegmentName(const std::string &utterance_id, int k);

// Groups the segments of every utterance under its speaker. segment_counts
// is parallel to index.utterances().
SegmentInventory MakeSegmentInventory(const CorpusIndex &index,
                                      std::span<const int> segment_counts);

struct TestCondition {
  std::string name;
  int enroll_segments = 1;
  int tests_per_speaker = 2;
};

struct Enrollment {
  std::string speaker_id;
  std::vector<std::string> segments;
};

struct TrialList {
  std::vector<Enrollment> enrollments;  // one per speaker, inventory order
  TrialSet trials;
};

// For every speaker: draws one conversation holding at least
// tests_per_speaker segments, takes that many of its segments as tests, and
// draws enroll_segments segments from the speaker's other conversations.
// Every enrolled speaker is then tried against every test segment.
// Deterministic in `seed`. Throws InsufficientData when a speaker cannot
// satisfy the condition.
TrialList BuildTrials(const SegmentInventory &inventory,
                      const TestCondition &condition, std::uint64_t seed);

// Scores every trial against the enrolled model of its speaker. Test
// embeddings are raw front-end outputs and pass through backend.Transform().
// Throws InvalidArgument on an id missing from either table.
ScoredTrials ScoreTrials(
    const Backend &backend,
    const std::unordered_map<std::string, SpeakerModel> &enroll_models,
    const std::unordered_map<std::string, Vector> &test_embeddings,
    const TrialSet &trials);

// ---------------------------------------------------------------------------
// Text files.

// "<enroll_speaker> <test_utt> target|nontarget" per line.
void WriteTrials(const std::string &path, const TrialSet &trials);
TrialSet ReadTrials(const std::string &path);

// "<speaker> <segment> <segment> ..." per line.
void WriteEnrollments(const std::string &path,
                      std::span<const Enrollment> enrollments);
std::vector<Enrollment> ReadEnrollments(const std::string &path);

// "<enroll_speaker> <test_utt> <score>" with six decimals.
void WriteScores(const std::string &path, const ScoredTrials &scored);
// Aligns a score file with `trials`; every trial needs exactly one line.
ScoredTrials ReadScores(const std::string &path, const TrialSet &trials);

// "p_fa,p_miss" header followed by one line per point.
void WriteDetCsv(const std::string &path, std::span<const DetPoint> points);

}  // namespace svtk

#endif  // SVTK_EVAL_H_
