// Copyright 2026 The Periocular Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <benchmark/benchmark.h>

#include <random>

#include "periocular/descriptors.hpp"
#include "periocular/eval.hpp"
#include "periocular/imageproc.hpp"
#include "periocular/model_builder.hpp"
#include "periocular/neural.hpp"
#include "periocular/sift.hpp"

namespace {

using namespace periocular;

// Smooth random texture at roughly the size of a normalised ROI.
GrayImage texture(int side, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GrayImage coarse(side / 8, side / 8);
  for (double& v : coarse.pixels()) v = u(rng);
  return resize_bicubic(coarse, side, side);
}

void BM_Lbp(benchmark::State& state) {
  const GrayImage img = texture(static_cast<int>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(lbp_descriptor(img));
}
BENCHMARK(BM_Lbp)->Arg(160)->Arg(198);

void BM_Hog(benchmark::State& state) {
  const GrayImage img = texture(static_cast<int>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(hog_descriptor(img));
}
BENCHMARK(BM_Hog)->Arg(160)->Arg(198);

void BM_Clahe(benchmark::State& state) {
  const GrayImage img = texture(static_cast<int>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(clahe(img));
}
BENCHMARK(BM_Clahe)->Arg(198);

void BM_SiftDetect(benchmark::State& state) {
  const GrayImage img = texture(static_cast<int>(state.range(0)), 4);
  for (auto _ : state) benchmark::DoNotOptimize(detect_keypoints(img));
}
BENCHMARK(BM_SiftDetect)->Arg(160)->Arg(198)->Unit(benchmark::kMillisecond);

void BM_SiftMatch(benchmark::State& state) {
  const auto a = detect_keypoints(texture(198, 5));
  const auto b = detect_keypoints(texture(198, 6));
  for (auto _ : state) benchmark::DoNotOptimize(match_constrained(a, b));
  state.counters["keypoints"] = static_cast<double>(a.size());
}
BENCHMARK(BM_SiftMatch);

void BM_ComputeDet(benchmark::State& state) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> gen(static_cast<std::size_t>(state.range(0))), imp(gen.size() * 10);
  for (double& v : gen) v = n(rng) + 1.5;
  for (double& v : imp) v = n(rng);
  for (auto _ : state) benchmark::DoNotOptimize(compute_det(gen, imp));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(gen.size() + imp.size()));
}
BENCHMARK(BM_ComputeDet)->Arg(1000)->Arg(30000);

void BM_ConvForward(benchmark::State& state) {
  const NetworkHandle net = load_network_bytes(toy_model_bytes(), "toy");
  const GrayImage img = texture(32, 8);
  for (auto _ : state) benchmark::DoNotOptimize(extract_activation(net, img, "gap"));
}
BENCHMARK(BM_ConvForward);

}  // namespace

BENCHMARK_MAIN();
