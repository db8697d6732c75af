// benchmarks/svtk-bench.cc

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

#include <benchmark/benchmark.h>

#include "svtk/backend.h"
#include "svtk/eval.h"
#include "svtk/gmm.h"
#include "svtk/ivector.h"
#include "svtk/rng.h"

namespace {

using namespace svtk;

Matrix RandomMatrix(Eigen::Index rows, Eigen::Index cols, Rng *rng) {
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng->Normal();
  return m;
}

Ubm RandomUbm(int c, int f, Rng *rng) {
  Ubm ubm;
  ubm.weights = Vector::Constant(c, 1.0 / c);
  ubm.mass = ubm.weights;
  ubm.means = RandomMatrix(c, f, rng);
  ubm.variances = Matrix::Constant(c, f, 1.0);
  return ubm;
}

void BM_Posteriors(benchmark::State &state) {
  const int c = static_cast<int>(state.range(0));
  Rng rng(1);
  const Ubm ubm = RandomUbm(c, 20, &rng);
  FrameMatrix fm{"u", RandomMatrix(300, 20, &rng)};
  for (auto _ : state) benchmark::DoNotOptimize(ComputePosteriors(ubm, fm));
  state.SetItemsProcessed(state.iterations() * fm.NumFrames());
}
BENCHMARK(BM_Posteriors)->Arg(16)->Arg(64)->Arg(256);

void BM_IvectorExtract(benchmark::State &state) {
  const int c = 64, f = 20;
  const int r = static_cast<int>(state.range(0));
  Rng rng(2);
  const Ubm ubm = RandomUbm(c, f, &rng);
  TvModel tv{0.1 * RandomMatrix(c * f, r, &rng), Vector::Ones(c * f)};
  IvectorExtractor extractor(tv, c);
  FrameMatrix fm{"u", RandomMatrix(300, f, &rng)};
  const BwStats stats = ComputeBaumWelchStats(ubm, fm);
  for (auto _ : state) benchmark::DoNotOptimize(extractor.Extract(stats));
}
BENCHMARK(BM_IvectorExtract)->Arg(8)->Arg(50)->Arg(200);

void BM_FitLr(benchmark::State &state) {
  const int d = static_cast<int>(state.range(0));
  const int s = 100, n = 8 * s;
  Rng rng(3);
  const Matrix x = RandomMatrix(d, n, &rng);
  std::vector<int> labels(n);
  for (int j = 0; j < n; ++j) labels[j] = j % s;
  const Matrix y = IndicatorMatrix(labels, s);
  for (auto _ : state) benchmark::DoNotOptimize(FitLr(x, y, DefaultRidge(x)));
}
BENCHMARK(BM_FitLr)->Arg(50)->Arg(200)->Arg(400);

void BM_Eer(benchmark::State &state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(4);
  ScoredTrials st;
  for (std::size_t i = 0; i < n; ++i) {
    const bool target = i % 100 == 0;
    st.trials.trials.push_back({"e", "t", target});
    st.scores.push_back(rng.Normal() + (target ? 2.0 : 0.0));
  }
  for (auto _ : state) benchmark::DoNotOptimize(Eer(st));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}
BENCHMARK(BM_Eer)->Arg(10000)->Arg(312050);

}  // namespace

BENCHMARK_MAIN();
