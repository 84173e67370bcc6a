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
#include <string>
#include <vector>

#include "periocular/image.hpp"

namespace periocular {

enum class Eye { left, right };

std::string to_string(Eye eye);
Eye parse_eye(const std::string& text);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Manually annotated eye geometry, in pixel coordinates of the source image
/// (pixel centers at integer coordinates).
struct EyeAnnotation {
  std::string subject_id;
  Eye eye = Eye::left;
  int session = 1;
  double distance_m = 0.0;
  Point2 sclera_center;
  double sclera_radius = 0.0;
  Point2 iris_center;
  double iris_radius = 0.0;

  /// Throws InvalidInput unless sclera_radius > iris_radius > 0, session >= 1.
  void validate() const;
};

/// Square crop produced by normalize_and_crop. `source_center` is the sclera
/// center in source coordinates; together with `scale_factor` it maps source
/// points into ROI pixels.
struct RoiImage {
  GrayImage image;
  double scale_factor = 1.0;
  Point2 source_center;

  Point2 to_roi(Point2 source) const;
};

struct ClaheParams {
  int tiles_x = 8;
  int tiles_y = 8;
  double clip_limit = 0.01;
};

/// Side of the normalized ROI relative to the sclera radius.
inline constexpr double kRoiSideFactor = 7.6;

GrayImage to_grayscale(const ColorImage& rgb);

/// Catmull-Rom (a = -0.5) resampling with pixel-center alignment and edge
/// replication. Output is clamped to [0,1].
GrayImage resize_bicubic(const GrayImage& img, int target_w, int target_h);

/// Rescales so the sclera radius becomes `target_radius` and cuts the square
/// of side round(7.6 * target_radius) centred on the sclera center.
RoiImage normalize_and_crop(const GrayImage& img, const EyeAnnotation& ann,
                            double target_radius);

GrayImage clahe(const GrayImage& img, const ClaheParams& params = {});

/// Zeroes every pixel inside the iris circle, after mapping it into ROI space.
RoiImage mask_iris(const RoiImage& roi, const EyeAnnotation& ann);

struct MeanSubtracted {
  std::vector<GrayImage> residuals;
  GrayImage mean;
};

MeanSubtracted mean_subtract(const std::vector<GrayImage>& imgs);

/// Flat mean-image file: u32 width, u32 height (little endian) followed by
/// row-major little-endian float32 values.
void write_mean_image(const GrayImage& mean, const std::filesystem::path& path);
GrayImage read_mean_image(const std::filesystem::path& path);

}  // namespace periocular
