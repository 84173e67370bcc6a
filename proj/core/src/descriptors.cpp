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

#include "periocular/descriptors.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "periocular/error.hpp"

namespace periocular {

namespace {

constexpr int kMinDescriptorSide = 10;
constexpr double kHogEpsilon = 1e-10;
constexpr double kHogBinWidthDeg = 180.0 / kBinsPerBlock;

void require_descriptor_size(const GrayImage& img) {
  if (img.width() < kMinDescriptorSide || img.height() < kMinDescriptorSide)
    throw InvalidInput("descriptor input must be at least 10x10");
}

// Block index of every column and row.
struct BlockLookup {
  std::vector<int> col;
  std::vector<int> row;
};

BlockLookup block_lookup(const BlockGrid& grid, int width, int height) {
  BlockLookup lk{std::vector<int>(width), std::vector<int>(height)};
  for (int c = 0; c < kGridSize; ++c)
    for (int x = grid.x_edges[c]; x < grid.x_edges[c + 1]; ++x) lk.col[x] = c;
  for (int r = 0; r < kGridSize; ++r)
    for (int y = grid.y_edges[r]; y < grid.y_edges[r + 1]; ++y) lk.row[y] = r;
  return lk;
}

std::vector<float> normalize_blocks(const std::vector<double>& hist, double eps) {
  std::vector<float> out(hist.size(), 0.0f);
  for (std::size_t b = 0; b < hist.size(); b += kBinsPerBlock) {
    double sum = 0.0;
    for (int k = 0; k < kBinsPerBlock; ++k) sum += hist[b + k];
    if (sum <= 0.0) continue;  // degenerate block stays all-zero
    for (int k = 0; k < kBinsPerBlock; ++k)
      out[b + k] = static_cast<float>(hist[b + k] / (sum + eps));
  }
  return out;
}

}  // namespace

BlockGrid block_partition(int width, int height) {
  if (width < kGridSize || height < kGridSize)
    throw InvalidInput("block partition needs at least 8x8 pixels");
  BlockGrid g;
  const int bw = width / kGridSize, bh = height / kGridSize;
  for (int k = 0; k < kGridSize; ++k) {
    g.x_edges[k] = k * bw;
    g.y_edges[k] = k * bh;
  }
  g.x_edges[kGridSize] = width;
  g.y_edges[kGridSize] = height;
  return g;
}

std::uint8_t lbp_code(const GrayImage& img, int x, int y) {
  static constexpr int dx[8] = {-1, 0, 1, 1, 1, 0, -1, -1};
  static constexpr int dy[8] = {-1, -1, -1, 0, 1, 1, 1, 0};
  const double c = img.at(x, y);
  unsigned code = 0;
  for (int k = 0; k < 8; ++k) {
    code <<= 1;
    if (img.at(x + dx[k], y + dy[k]) >= c) code |= 1u;
  }
  return static_cast<std::uint8_t>(code);
}

FeatureVector lbp_descriptor(const GrayImage& img) {
  require_descriptor_size(img);
  const BlockGrid grid = block_partition(img.width(), img.height());
  const BlockLookup lk = block_lookup(grid, img.width(), img.height());

  std::vector<double> hist(kDescriptorLength, 0.0);
  for (int y = 1; y < img.height() - 1; ++y) {
    for (int x = 1; x < img.width() - 1; ++x) {
      const int block = lk.row[y] * kGridSize + lk.col[x];
      hist[block * kBinsPerBlock + (lbp_code(img, x, y) >> 5)] += 1.0;
    }
  }
  FeatureVector fv;
  fv.extractor = ExtractorKind::lbp;
  fv.values = normalize_blocks(hist, 0.0);
  return fv;
}

FeatureVector hog_descriptor(const GrayImage& img) {
  require_descriptor_size(img);
  const BlockGrid grid = block_partition(img.width(), img.height());
  const BlockLookup lk = block_lookup(grid, img.width(), img.height());

  std::vector<double> hist(kDescriptorLength, 0.0);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const double gx = img.clamped(x + 1, y) - img.clamped(x - 1, y);
      const double gy = img.clamped(x, y + 1) - img.clamped(x, y - 1);
      const double mag = std::hypot(gx, gy);
      if (mag == 0.0) continue;

      double theta = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
      if (theta < 0.0) theta += 180.0;
      if (theta >= 180.0) theta -= 180.0;

      const double pos = theta / kHogBinWidthDeg - 0.5;
      const double lo = std::floor(pos);
      const double frac = pos - lo;
      const int b0 = (static_cast<int>(lo) + kBinsPerBlock) % kBinsPerBlock;
      const int b1 = (b0 + 1) % kBinsPerBlock;

      const int base = (lk.row[y] * kGridSize + lk.col[x]) * kBinsPerBlock;
      hist[base + b0] += (1.0 - frac) * mag;
      hist[base + b1] += frac * mag;
    }
  }
  FeatureVector fv;
  fv.extractor = ExtractorKind::hog;
  fv.values = normalize_blocks(hist, kHogEpsilon);
  return fv;
}

}  // namespace periocular
