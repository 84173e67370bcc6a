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
#include <map>
#include <string>
#include <vector>

#include "periocular/eval.hpp"
#include "periocular/fusion.hpp"
#include "periocular/imageproc.hpp"
#include "periocular/manifest.hpp"
#include "periocular/neural.hpp"
#include "periocular/sift.hpp"

namespace periocular {

struct SweepConfig {
  bool enabled = false;
  std::vector<std::string> metrics{"euclidean", "chi2", "cosine"};
  /// Empty: every layer of the model.
  std::vector<std::string> layers;

  bool operator==(const SweepConfig&) const = default;
};

/// Everything a run needs besides the manifest. Stored as JSON; the grammar
/// is documented in the README. to_json/from_json round-trip exactly.
struct ExperimentConfig {
  /// lbp, hog, sift or neural:<layer>.
  std::vector<std::string> extractors{"lbp", "hog"};
  /// Applied to every extractor except sift, which scores by match count.
  std::vector<std::string> metrics{"chi2"};
  /// distance_m -> target sclera radius (px). Distance groups that are not
  /// listed use the mean annotated sclera radius of the group.
  std::map<double, double> target_radius;
  ClaheParams clahe;
  bool mask_iris = true;
  /// ONNX model for neural extractors and the layer sweep.
  std::string model;
  SweepConfig sweep;
  /// Each group lists system ids to fuse with two-fold logistic regression.
  std::vector<std::vector<std::string>> fusion;
  /// Only "user_parity" is defined.
  std::string fold_rule = "user_parity";
  std::string output_dir;
  /// Defaults to <output_dir>/cache. "none" disables caching.
  std::string cache_dir;

  bool operator==(const ExperimentConfig&) const;
};

std::string config_to_json(const ExperimentConfig& config);
/// Throws InvalidInput on unknown keys, bad ids or dangling fusion ids.
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const ExperimentConfig& config, const std::filesystem::path& path);
void validate_config(const ExperimentConfig& config);

/// One (extractor, metric) pairing. The id is the extractor when a single
/// metric is configured (or for sift), otherwise "<extractor>/<metric>".
struct SystemSpec {
  std::string id;
  std::string extractor;
  std::string metric;
};

std::vector<SystemSpec> systems_of(const ExperimentConfig& config);

/// File-name-safe form of an id: characters outside [A-Za-z0-9._-] become '_'.
std::string file_stem(const std::string& id);

struct RunOptions {
  int workers = 1;
  /// Cache root; empty disables caching.
  std::filesystem::path cache_dir;
};

struct ImageFailure {
  std::string image_id;
  std::string reason;
};

struct PreparedImage {
  ProtocolImage protocol;
  RoiImage roi;
  /// Content hash of the source image and every preprocessing parameter.
  std::string roi_key;
};

struct PreparedSet {
  std::vector<PreparedImage> images;
  std::vector<ImageFailure> failures;
  std::size_t attempted = 0;
  /// distance_m -> target radius actually used.
  std::map<double, double> target_radius;

  std::vector<ProtocolImage> protocol_images() const;
};

/// Load -> sclera normalisation and crop -> CLAHE -> iris mask, for every
/// manifest record. Unreadable images are collected; more than 5% failures
/// raise DataError.
PreparedSet preprocess(const Manifest& manifest, const ExperimentConfig& config, const RunOptions& options);

/// Per-image features of one extractor, in PreparedSet order.
struct FeatureTable {
  std::string extractor;
  std::vector<FeatureVector> vectors;            // lbp, hog, neural
  std::vector<std::vector<Keypoint>> keypoints;  // sift
  std::map<std::string, std::size_t> index;      // image id -> row
};

/// `model` is required for neural:<layer> extractors and ignored otherwise.
FeatureTable extract_features(const PreparedSet& prepared, const std::string& extractor,
                              const NetworkHandle* model, const RunOptions& options);

ScoreSet score_features(const FeatureTable& features, const TrialList& trials, const std::string& metric,
                        const std::string& comparator_id, const RunOptions& options);

struct ExperimentResult {
  ScoreSet scores;
  DetCurve det;
  PreparedSet prepared;
  TrialList trials;
};

/// Full pipeline for one extractor and metric (the metric is ignored for sift).
ExperimentResult run_experiment(const Manifest& manifest, const ExperimentConfig& config,
                                const std::string& extractor, const std::string& metric,
                                const RunOptions& options);

/// One line of the per-system summary table.
struct SummaryRow {
  std::string system;
  double eer_percent = 0.0;
  double frr_at_far_1pct_percent = 0.0;
};

SummaryRow summarize(const ScoreSet& scores);
/// CSV `system,eer_percent,frr_at_far_1pct_percent`.
void write_summary_csv(const std::vector<SummaryRow>& rows, const std::filesystem::path& path);
std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& path);
/// Fixed-width text table with two decimals, for terminals.
std::string format_summary_table(const std::vector<SummaryRow>& rows);

/// Writes scores/<stem>.csv, det/<stem>.csv and det/<stem>.json under `out_dir`.
void write_system_outputs(const ScoreSet& scores, const DetCurve& det, const std::filesystem::path& out_dir);

struct RunResult {
  std::vector<SummaryRow> summary;
  std::vector<SweepRow> sweep;
};

/// Preprocesses once, runs every configured system, the optional layer
/// sweep and the fusion groups, and writes all artifacts plus summary.csv and
/// run_report.txt to `out_dir`. Output bytes depend only on the manifest,
/// the config and the image files. Stage failures are rethrown with the
/// stage name prefixed to the message.
RunResult run(const Manifest& manifest, const ExperimentConfig& config, const std::filesystem::path& out_dir,
              const RunOptions& options);

}  // namespace periocular
