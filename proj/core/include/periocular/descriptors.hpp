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
#include <cstdint>

#include "periocular/feature.hpp"
#include "periocular/image.hpp"

namespace periocular {

inline constexpr int kGridSize = 8;
inline constexpr int kBinsPerBlock = 8;
inline constexpr int kDescriptorLength = kGridSize * kGridSize * kBinsPerBlock;

/// 8x8 non-overlapping partition. Block (r, c) spans
/// [x_edges[c], x_edges[c+1]) x [y_edges[r], y_edges[r+1]).
struct BlockGrid {
  std::array<int, kGridSize + 1> x_edges{};
  std::array<int, kGridSize + 1> y_edges{};

  int block_width(int c) const { return x_edges[c + 1] - x_edges[c]; }
  int block_height(int r) const { return y_edges[r + 1] - y_edges[r]; }
};

/// First seven rows/columns get floor(extent / 8) pixels, the last one takes
/// the remainder.
BlockGrid block_partition(int width, int height);

/// 8-bit LBP code of the interior pixel (x, y): neighbours visited clockwise
/// from top-left, first neighbour is the most significant bit, and a
/// neighbour >= centre sets its bit.
std::uint8_t lbp_code(const GrayImage& img, int x, int y);

/// Block LBP: codes quantized into 8 equal ranges of 32, per-block L1
/// normalized histograms, 512 values.
FeatureVector lbp_descriptor(const GrayImage& img);

/// Block HOG: central-difference gradients, unsigned orientation soft-binned
/// into 8 bins of 22.5 deg (centres at 11.25 + 22.5k), per-block L1
/// normalization with a 1e-10 stabilizer, 512 values.
FeatureVector hog_descriptor(const GrayImage& img);

}  // namespace periocular
