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

#include <array>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "periocular/image.hpp"

namespace periocular {

inline constexpr int kSiftDescriptorLength = 4 * 4 * 8;

/// Position and scale are in input-image pixels; orientation is
/// atan2(dy, dx) in image coordinates (y down), wrapped to [0, 2pi).
struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double scale = 0.0;
  double orientation = 0.0;
  std::array<float, kSiftDescriptorLength> descriptor{};

  bool operator==(const Keypoint&) const = default;
};

struct SiftParams {
  int octaves = 4;
  int scales_per_octave = 3;
  double sigma = 1.6;
  /// Blur already present in the input image.
  double assumed_blur = 0.5;
  double contrast_threshold = 0.03;
  double edge_ratio = 10.0;
  int max_refine_steps = 5;
  int orientation_bins = 36;
  /// Secondary orientation peaks at or above this fraction of the maximum
  /// spawn extra keypoints.
  double peak_ratio = 0.8;
  double descriptor_clip = 0.2;
};

/// Difference-of-Gaussians detection with quadratic refinement, dominant
/// orientation assignment and 4x4x8 descriptors. Input must be >= 32x32.
std::vector<Keypoint> detect_keypoints(const GrayImage& img, const SiftParams& params = {});

struct MatchParams {
  double ratio = 0.8;
  int angle_bins = 36;
  double angle_tolerance_deg = 20.0;
  /// Allowed deviation from the median displacement, as a fraction of the
  /// image diagonal.
  double distance_fraction = 0.15;
  /// 0 means: derive from the extent of both keypoint sets.
  double image_diagonal = 0.0;
};

struct MatchPair {
  std::size_t enrol = 0;
  std::size_t probe = 0;
  double distance = 0.0;

  bool operator==(const MatchPair&) const = default;
};

struct MatchSet {
  std::vector<MatchPair> pairs;
  /// Candidate pairs after the ratio test and one-to-one assignment.
  std::size_t candidates = 0;
  std::size_t score = 0;
};

/// Ratio-test nearest neighbours, greedy one-to-one assignment, then the
/// orientation-difference and displacement consistency filters. The score is
/// the number of surviving pairs.
MatchSet match_constrained(const std::vector<Keypoint>& enrol, const std::vector<Keypoint>& probe,
                           const MatchParams& params = {});

/// JSON lines: {"x":..,"y":..,"scale":..,"orientation":..,"descriptor":[128]}.
void write_keypoints(std::ostream& os, const std::vector<Keypoint>& kps);
std::vector<Keypoint> read_keypoints(std::istream& is);
void save_keypoints(const std::vector<Keypoint>& kps, const std::filesystem::path& path);
std::vector<Keypoint> load_keypoints(const std::filesystem::path& path);

}  // namespace periocular
