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

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "periocular/eval.hpp"
#include "periocular/metrics.hpp"

namespace periocular {

/// Training-fold z-normalization statistics of one comparator.
struct ComparatorStats {
  double mean = 0.0;
  double stddev = 1.0;
  /// Constant on the training fold; weight pinned to zero.
  bool dropped = false;
};

/// f = bias + sum_i weights[i] * (s_i - mean_i) / stddev_i
struct FusionModel {
  std::vector<std::string> comparator_ids;
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<ComparatorStats> stats;

  // Training metadata.
  int fold = 0;
  int iterations = 0;
  double log_likelihood = 0.0;

  std::string fused_id() const;
};

struct FusionOptions {
  /// L2 penalty on the weights, never on the bias.
  double ridge = 1e-6;
  /// Stop once the penalized log-likelihood improves by less than this.
  double tolerance = 1e-9;
  int max_iterations = 1000;
};

/// Logistic regression on raw score columns (one column per comparator,
/// `genuine[j]` true for genuine trials). Columns are z-normalized first.
FusionModel train_logistic(const std::vector<std::vector<double>>& columns,
                           const std::vector<bool>& genuine,
                           const FusionOptions& options = {});

/// Trains on score sets that must cover the same trials in the same order.
FusionModel train_fusion(const std::vector<ScoreSet>& scores, const FusionOptions& options = {});

Score apply_fusion(const FusionModel& model, std::span<const double> scores);

/// Binomial log-likelihood of `model` on the given trials.
double fusion_log_likelihood(const FusionModel& model,
                             const std::vector<std::vector<double>>& columns,
                             const std::vector<bool>& genuine);

/// fold = 1 when the enrol image's user index is even, 2 otherwise.
std::vector<int> folds_by_user_parity(const ScoreSet& trials,
                                      const std::map<std::string, std::size_t>& image_user);

struct TwoFoldResult {
  ScoreSet fused;
  /// models[0] trained on fold 1 (applied to fold 2), models[1] the reverse.
  FusionModel models[2];
};

TwoFoldResult two_fold_fusion(const std::vector<ScoreSet>& scores, const std::vector<int>& folds,
                              const FusionOptions& options = {});

/// Untrained reference: mean of per-comparator z-scores over the whole set.
ScoreSet mean_rule_fusion(const std::vector<ScoreSet>& scores);

void save_fusion_model(const FusionModel& model, const std::filesystem::path& path);
FusionModel load_fusion_model(const std::filesystem::path& path);
std::string fusion_model_to_json(const FusionModel& model);
FusionModel fusion_model_from_json(const std::string& text);

}  // namespace periocular
