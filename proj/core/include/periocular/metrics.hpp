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

#pragma once

#include <span>
#include <string>

#include "periocular/feature.hpp"

namespace periocular {

enum class Metric { euclidean, chi2, cosine };

/// CLI/config ids: "euclidean", "chi2", "cosine".
std::string to_string(Metric m);
Metric parse_metric(const std::string& id);

/// Comparison score. Always a similarity: distances are negated so that a
/// higher value means "more likely genuine" for every comparator.
struct Score {
  double value = 0.0;
  std::string comparator_id;
};

// Raw similarities over float spans. All accumulate in double.

/// -sqrt(sum (a_i - b_i)^2)
double euclidean_similarity(std::span<const float> a, std::span<const float> b);
/// -sum (a_i - b_i)^2 / (a_i + b_i); terms with a_i + b_i < 1e-12 are skipped.
/// Negative entries are rejected.
double chi2_similarity(std::span<const float> a, std::span<const float> b);
/// a.b / (|a||b|), or 0 when either norm is below 1e-12.
double cosine_similarity(std::span<const float> a, std::span<const float> b);

double similarity(Metric m, std::span<const float> a, std::span<const float> b);

Score euclidean(const FeatureVector& a, const FeatureVector& b);
Score chi2(const FeatureVector& a, const FeatureVector& b);
Score cosine(const FeatureVector& a, const FeatureVector& b);

}  // namespace periocular
