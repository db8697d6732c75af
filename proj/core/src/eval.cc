// core/src/eval.cc

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
#include <cmath>
#include <limits>

#include "svtk/eval.h"

namespace svtk {

std::size_t TrialSet::NumTargets() const {
  return static_cast<std::size_t>(
      std::count_if(trials.begin(), trials.end(),
                    [](const Trial &t) { return t.target; }));
}

void ScoredTrials::Validate() const {
  if (scores.size() != trials.size())
    throw InvalidArgument("score count " + std::to_string(scores.size()) +
                          " does not match trial count " +
                          std::to_string(trials.size()));
  for (double s : scores)
    if (!std::isfinite(s)) throw InvalidArgument("non-finite score");
}

void DcfParams::Validate() const {
  if (!(c_miss > 0.0) || !(c_fa > 0.0))
    throw InvalidArgument("DCF costs must be positive");
  if (!(p_target > 0.0 && p_target < 1.0))
    throw InvalidArgument("DCF target prior must lie in (0, 1)");
  if (!(report_scale > 0.0))
    throw InvalidArgument("DCF report scale must be positive");
}

std::vector<OperatingPoint> OperatingPoints(const ScoredTrials &scored) {
  scored.Validate();
  std::vector<double> tar, non;
  for (std::size_t i = 0; i < scored.scores.size(); ++i)
    (scored.trials.trials[i].target ? tar : non).push_back(scored.scores[i]);
  if (tar.empty() || non.empty())
    throw InvalidArgument("metrics need both target and nontarget trials");
  std::sort(tar.begin(), tar.end());
  std::sort(non.begin(), non.end());
  std::vector<double> thresholds(scored.scores);
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());

  const double n_tar = static_cast<double>(tar.size());
  const double n_non = static_cast<double>(non.size());
  std::vector<OperatingPoint> points;
  points.reserve(thresholds.size() + 1);
  points.push_back({-std::numeric_limits<double>::infinity(), 0.0, 1.0});
  std::size_t ti = 0, ni = 0;  // scores <= threshold seen so far
  for (double t : thresholds) {
    while (ti < tar.size() && tar[ti] <= t) ++ti;
    while (ni < non.size() && non[ni] <= t) ++ni;
    points.push_back({t, static_cast<double>(ti) / n_tar,
                      static_cast<double>(non.size() - ni) / n_non});
  }
  return points;
}

double Eer(const ScoredTrials &scored) {
  const auto points = OperatingPoints(scored);
  for (std::size_t k = 1; k < points.size(); ++k) {
    const OperatingPoint &cur = points[k];
    if (cur.p_miss < cur.p_fa) continue;
    if (cur.p_miss == cur.p_fa) return cur.p_miss;
    const OperatingPoint &prev = points[k - 1];
    const double alpha = (prev.p_fa - prev.p_miss) /
                         ((cur.p_miss - prev.p_miss) - (cur.p_fa - prev.p_fa));
    return prev.p_miss + alpha * (cur.p_miss - prev.p_miss);
  }
  return points.back().p_miss;  // unreachable: the last point has P_fa = 0
}

double MinDcfRaw(const ScoredTrials &scored, const DcfParams &params) {
  params.Validate();
  double best = std::numeric_limits<double>::infinity();
  for (const OperatingPoint &p : OperatingPoints(scored)) {
    const double cost = params.c_miss * params.p_target * p.p_miss +
                        params.c_fa * (1.0 - params.p_target) * p.p_fa;
    best = std::min(best, cost);
  }
  return best;
}

double MinDcf(const ScoredTrials &scored, const DcfParams &params) {
  double value = MinDcfRaw(scored, params);
  if (params.normalize)
    value /= std::min(params.c_miss * params.p_target,
                      params.c_fa * (1.0 - params.p_target));
  return value * params.report_scale;
}

std::vector<DetPoint> DetCurve(const ScoredTrials &scored) {
  std::vector<DetPoint> det;
  for (const OperatingPoint &p : OperatingPoints(scored))
    det.push_back({p.p_fa, p.p_miss});
  return det;
}

ScoredTrials FuseScores(std::span<const ScoredTrials> systems) {
  if (systems.empty()) throw InvalidArgument("fusion needs at least one system");
  ScoredTrials fused;
  fused.trials = systems.front().trials;
  fused.scores.assign(fused.trials.size(), 0.0);
  for (std::size_t k = 0; k < systems.size(); ++k) {
    systems[k].Validate();
    if (systems[k].trials.trials != fused.trials.trials)
      throw InvalidArgument("system " + std::to_string(k) +
                            " was scored on a different trial list");
    for (std::size_t i = 0; i < fused.scores.size(); ++i)
      fused.scores[i] += systems[k].scores[i];
  }
  for (double &s : fused.scores) s /= static_cast<double>(systems.size());
  return fused;
}

double RelativeImprovement(double eer_lr, double eer_best) {
  if (!(eer_best > 0.0))
    throw InvalidArgument("relative improvement needs a positive baseline EER");
  return (eer_lr - eer_best) / eer_best;
}

ScoredTrials NormalizeForHistogram(const ScoredTrials &scored) {
  scored.Validate();
  double sum_tar = 0.0, sum_non = 0.0;
  std::size_t n_tar = 0, n_non = 0;
  for (std::size_t i = 0; i < scored.scores.size(); ++i) {
    if (scored.trials.trials[i].target) {
      sum_tar += scored.scores[i];
      ++n_tar;
    } else {
      sum_non += scored.scores[i];
      ++n_non;
    }
  }
  if (n_tar == 0 || n_non == 0)
    throw InvalidArgument("normalization needs both target and nontarget trials");
  const double mean_tar = sum_tar / static_cast<double>(n_tar);
  const double mean_non = sum_non / static_cast<double>(n_non);
  if (mean_tar == mean_non)
    throw InvalidArgument("target and nontarget score means coincide");
  ScoredTrials out = scored;
  for (double &s : out.scores) s = (s - mean_non) / (mean_tar - mean_non);
  return out;
}

}  // namespace svtk
