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

#include "periocular/image.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "periocular/error.hpp"
#include "periocular/imageproc.hpp"

namespace periocular {

GrayImage::GrayImage(int width, int height, double fill)
    : width_(width), height_(height) {
  if (width < 0 || height < 0) throw InvalidInput("negative image dimensions");
  data_.assign(static_cast<std::size_t>(width) * height, fill);
}

GrayImage::GrayImage(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width < 0 || height < 0) throw InvalidInput("negative image dimensions");
  if (data_.size() != static_cast<std::size_t>(width) * height)
    throw InvalidInput("image data length does not match width x height");
}

double GrayImage::clamped(int x, int y) const {
  x = std::clamp(x, 0, width_ - 1);
  y = std::clamp(y, 0, height_ - 1);
  return at(x, y);
}

ColorImage load_color(const std::filesystem::path& path) {
  cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (raw.empty()) throw IoError("cannot decode image: " + path.string());

  double scale = 1.0;
  switch (raw.depth()) {
    case CV_8U: scale = 1.0 / 255.0; break;
    case CV_16U: scale = 1.0 / 65535.0; break;
    case CV_32F:
    case CV_64F: scale = 1.0; break;
    default: throw IoError("unsupported pixel depth in " + path.string());
  }
  cv::Mat img;
  raw.convertTo(img, CV_64F, scale);

  ColorImage out;
  out.width = img.cols;
  out.height = img.rows;
  const int src_ch = img.channels();
  // Alpha is dropped; OpenCV stores color as BGR.
  out.channels = src_ch == 1 ? 1 : 3;
  out.data.resize(static_cast<std::size_t>(out.width) * out.height * out.channels);
  for (int y = 0; y < img.rows; ++y) {
    const double* row = img.ptr<double>(y);
    for (int x = 0; x < img.cols; ++x) {
      const double* px = row + static_cast<std::size_t>(x) * src_ch;
      double* dst = out.data.data() +
                    (static_cast<std::size_t>(y) * out.width + x) * out.channels;
      if (out.channels == 1) {
        dst[0] = std::clamp(px[0], 0.0, 1.0);
      } else {
        dst[0] = std::clamp(px[2], 0.0, 1.0);
        dst[1] = std::clamp(px[1], 0.0, 1.0);
        dst[2] = std::clamp(px[0], 0.0, 1.0);
      }
    }
  }
  return out;
}

GrayImage load_gray(const std::filesystem::path& path) {
  ColorImage color = load_color(path);
  if (color.channels == 3) return to_grayscale(color);
  return GrayImage(color.width, color.height, std::move(color.data));
}

void save_png(const GrayImage& img, const std::filesystem::path& path) {
  cv::Mat out(img.height(), img.width(), CV_8UC1);
  for (int y = 0; y < img.height(); ++y) {
    auto* row = out.ptr<unsigned char>(y);
    for (int x = 0; x < img.width(); ++x)
      row[x] = static_cast<unsigned char>(
          std::lround(std::clamp(img.at(x, y), 0.0, 1.0) * 255.0));
  }
  if (!cv::imwrite(path.string(), out))
    throw IoError("cannot write image: " + path.string());
}

}  // namespace periocular
