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

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "periocular/imageproc.hpp"

namespace periocular {

enum class Label { genuine, impostor };

std::string to_string(Label label);
Label parse_label(const std::string& text);

/// An image entering the verification protocol.
struct ProtocolImage {
  std::string image_id;
  EyeAnnotation annotation;
  /// Overrides the default (session, distance, image id) ordering.
  std::optional<long> order;
};

/// Each (subject, eye) pair is a distinct user.
std::string user_key(const EyeAnnotation& ann);

struct Trial {
  std::string enrol_id;
  std::string probe_id;
};

struct TrialList {
  std::vector<Trial> genuine;
  std::vector<Trial> impostor;
  /// Users with fewer than two images; excluded from both trial sets.
  std::vector<std::string> skipped_users;
  /// Retained users in protocol order (sorted by user key).
  std::vector<std::string> users;
  /// image id -> index into `users`.
  std::map<std::string, std::size_t> image_user;
};

/// Genuine: every unordered pair within a user (earlier image enrols).
/// Impostor: the first image of each user against the second image of every
/// other user, U * (U - 1) trials. Images are ordered by (order override,
/// session, distance, image id).
TrialList build_trials(const std::vector<ProtocolImage>& images);

struct ScoreEntry {
  std::string enrol_id;
  std::string probe_id;
  Label label = Label::genuine;
  double score = 0.0;

  bool operator==(const ScoreEntry&) const = default;
};

struct ScoreSet {
  std::string comparator_id;
  std::vector<ScoreEntry> entries;

  std::vector<double> scores_for(Label label) const;
  bool operator==(const ScoreSet&) const = default;
};

struct DetPoint {
  double threshold = 0.0;
  double far = 0.0;
  double frr = 0.0;
};

struct DetCurve {
  /// Ascending thresholds, -inf and +inf sentinels included.
  std::vector<DetPoint> points;
  double eer = 0.0;
  /// FAR target -> minimal FRR among points with FAR <= target.
  std::map<double, double> frr_at_far;
  std::size_t genuine_count = 0;
  std::size_t impostor_count = 0;

  double frr_at(double far_target) const;
};

inline constexpr double kDefaultFarTarget = 0.01;

/// FAR(t) = share of impostor scores >= t, FRR(t) = share of genuine scores
/// < t. EER is interpolated linearly between the two adjacent operating
/// points where FAR - FRR changes sign.
DetCurve compute_det(std::span<const double> genuine, std::span<const double> impostor,
                     std::span<const double> far_targets = std::span<const double>(&kDefaultFarTarget, 1));
DetCurve compute_det(const ScoreSet& scores,
                     std::span<const double> far_targets = std::span<const double>(&kDefaultFarTarget, 1));

/// Scores an (enrol image id, probe image id) pair.
using PairScorer = std::function<double(const std::string& enrol_id, const std::string& probe_id)>;

/// Scores every trial, genuine first, each list in its protocol order. Trials
/// are spread over `workers` threads; results are gathered by trial index so
/// the set does not depend on the worker count.
ScoreSet score_trials(const TrialList& trials, const PairScorer& scorer, const std::string& comparator_id,
                      int workers = 1);

/// CSV `enrol_id,probe_id,label,score,comparator`. Scores are printed in
/// shortest round-trip form so a re-read set is bit-identical.
void write_scores(const ScoreSet& scores, const std::filesystem::path& path);
ScoreSet read_scores(const std::filesystem::path& path);

/// CSV `threshold,far,frr`.
void write_det_csv(const DetCurve& det, const std::filesystem::path& path);
/// {"eer":..,"frr_at_far_1pct":..,"genuine":..,"impostor":..}
void write_det_summary(const DetCurve& det, const std::filesystem::path& path);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace periocular
