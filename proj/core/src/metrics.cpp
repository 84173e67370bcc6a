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

#include "periocular/metrics.hpp"

#include <cmath>

#include "periocular/error.hpp"

namespace periocular {

namespace {

constexpr double kChi2Guard = 1e-12;
constexpr double kNormGuard = 1e-12;

void require_equal_length(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size())
    throw InvalidInput("feature length mismatch: " + std::to_string(a.size()) + " vs " +
                       std::to_string(b.size()));
}

}  // namespace

std::string to_string(Metric m) {
  switch (m) {
    case Metric::euclidean: return "euclidean";
    case Metric::chi2: return "chi2";
    case Metric::cosine: return "cosine";
  }
  return "?";
}

Metric parse_metric(const std::string& id) {
  if (id == "euclidean") return Metric::euclidean;
  if (id == "chi2") return Metric::chi2;
  if (id == "cosine") return Metric::cosine;
  throw InvalidInput("unknown metric id: " + id);
}

double euclidean_similarity(std::span<const float> a, std::span<const float> b) {
  require_equal_length(a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    acc += d * d;
  }
  return -std::sqrt(acc);
}

double chi2_similarity(std::span<const float> a, std::span<const float> b) {
  require_equal_length(a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i], y = b[i];
    if (x < 0.0 || y < 0.0) throw InvalidInput("chi2 needs non-negative entries");
    const double s = x + y;
    if (s < kChi2Guard) continue;
    const double d = x - y;
    acc += d * d / s;
  }
  return -acc;
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  require_equal_length(a, b);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i], y = b[i];
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  na = std::sqrt(na);
  nb = std::sqrt(nb);
  if (na < kNormGuard || nb < kNormGuard) return 0.0;
  return dot / (na * nb);
}

double similarity(Metric m, std::span<const float> a, std::span<const float> b) {
  switch (m) {
    case Metric::euclidean: return euclidean_similarity(a, b);
    case Metric::chi2: return chi2_similarity(a, b);
    case Metric::cosine: return cosine_similarity(a, b);
  }
  throw InvalidInput("unknown metric");
}

Score euclidean(const FeatureVector& a, const FeatureVector& b) {
  return {euclidean_similarity(a.view(), b.view()), "euclidean"};
}

Score chi2(const FeatureVector& a, const FeatureVector& b) {
  return {chi2_similarity(a.view(), b.view()), "chi2"};
}

Score cosine(const FeatureVector& a, const FeatureVector& b) {
  return {cosine_similarity(a.view(), b.view()), "cosine"};
}

}  // namespace periocular
