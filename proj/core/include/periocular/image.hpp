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
#include <span>
#include <vector>

namespace periocular {

/// Single-channel raster, row-major. Pipeline stages keep values in [0,1];
/// the mean-subtracted images fed to networks are the only signed ones.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, double fill = 0.0);
  GrayImage(int width, int height, std::vector<double> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  double at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }

  /// Edge-replicating accessor: coordinates are clamped into the raster.
  double clamped(int x, int y) const;

  std::span<double> pixels() noexcept { return data_; }
  std::span<const double> pixels() const noexcept { return data_; }

  bool operator==(const GrayImage&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

/// Interleaved multi-channel raster with values in [0,1].
struct ColorImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> data;
};

/// Decodes a PNG/JPEG (or anything the codec backend reads) to grayscale.
/// Color files go through to_grayscale so the luma weights are ours.
GrayImage load_gray(const std::filesystem::path& path);
ColorImage load_color(const std::filesystem::path& path);

/// Writes an 8-bit PNG, values clamped to [0,1] and rounded.
void save_png(const GrayImage& img, const std::filesystem::path& path);

}  // namespace periocular
