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

#include "periocular/imageproc.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>

#include "binary_io.hpp"
#include "periocular/error.hpp"

namespace periocular {

namespace {

constexpr double kCubicA = -0.5;
constexpr int kClaheBins = 256;

double cubic_weight(double t) {
  t = std::abs(t);
  if (t <= 1.0) return ((kCubicA + 2.0) * t - (kCubicA + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((kCubicA * t - 5.0 * kCubicA) * t + 8.0 * kCubicA) * t - 4.0 * kCubicA;
  return 0.0;
}

struct Taps {
  std::array<int, 4> index;
  std::array<double, 4> weight;
};

// Four Catmull-Rom taps around a continuous source coordinate, indices
// clamped to [0, n).
Taps cubic_taps(double src, int n) {
  const double base = std::floor(src);
  const double t = src - base;
  const int i0 = static_cast<int>(base);
  Taps taps;
  for (int k = 0; k < 4; ++k) {
    taps.index[k] = std::clamp(i0 - 1 + k, 0, n - 1);
    taps.weight[k] = cubic_weight(t - (k - 1));
  }
  return taps;
}

std::vector<int> tile_edges(int extent, int tiles) {
  std::vector<int> edges(static_cast<std::size_t>(tiles) + 1);
  const int step = extent / tiles;
  for (int k = 0; k < tiles; ++k) edges[k] = k * step;
  edges[tiles] = extent;
  return edges;
}

int clahe_bin(double v) {
  const int b = static_cast<int>(std::floor(std::clamp(v, 0.0, 1.0) * kClaheBins));
  return std::min(b, kClaheBins - 1);
}

struct TileMapping {
  bool identity = false;
  std::array<double, kClaheBins> lut{};

  double apply(double v) const { return identity ? v : lut[clahe_bin(v)]; }
};

// Position of pixel `p` between tile centres: indices of the two bracketing
// tiles and the weight of the second one.
struct Bracket {
  int lo = 0;
  int hi = 0;
  double w = 0.0;
};

Bracket bracket(double p, const std::vector<double>& centers) {
  const int last = static_cast<int>(centers.size()) - 1;
  if (p <= centers.front()) return {0, 0, 0.0};
  if (p >= centers.back()) return {last, last, 0.0};
  int lo = 0;
  while (lo + 1 < last && centers[lo + 1] <= p) ++lo;
  return {lo, lo + 1, (p - centers[lo]) / (centers[lo + 1] - centers[lo])};
}

}  // namespace

std::string to_string(Eye eye) { return eye == Eye::left ? "left" : "right"; }

Eye parse_eye(const std::string& text) {
  if (text == "left" || text == "L" || text == "l") return Eye::left;
  if (text == "right" || text == "R" || text == "r") return Eye::right;
  throw InvalidInput("unknown eye side: " + text);
}

void EyeAnnotation::validate() const {
  if (!(iris_radius > 0.0)) throw InvalidInput("iris radius must be positive");
  if (!(sclera_radius > iris_radius))
    throw InvalidInput("sclera radius must exceed iris radius");
  if (session < 1) throw InvalidInput("session must be >= 1");
}

Point2 RoiImage::to_roi(Point2 source) const {
  const double half = (image.width() - 1) / 2.0;
  return {(source.x - source_center.x) * scale_factor + half,
          (source.y - source_center.y) * scale_factor + half};
}

GrayImage to_grayscale(const ColorImage& rgb) {
  if (rgb.channels != 3) throw InvalidInput("to_grayscale expects 3 channels");
  if (rgb.data.size() != static_cast<std::size_t>(rgb.width) * rgb.height * 3)
    throw InvalidInput("color raster size does not match its dimensions");
  GrayImage out(rgb.width, rgb.height);
  auto dst = out.pixels();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const double* px = rgb.data.data() + 3 * i;
    dst[i] = std::clamp(0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2], 0.0, 1.0);
  }
  return out;
}

GrayImage resize_bicubic(const GrayImage& img, int target_w, int target_h) {
  if (target_w < 1 || target_h < 1) throw InvalidInput("resize target must be >= 1");
  if (img.empty()) throw InvalidInput("cannot resize an empty image");

  const double sx = static_cast<double>(img.width()) / target_w;
  const double sy = static_cast<double>(img.height()) / target_h;

  std::vector<Taps> col_taps(target_w);
  for (int x = 0; x < target_w; ++x)
    col_taps[x] = cubic_taps((x + 0.5) * sx - 0.5, img.width());

  // Horizontal pass: img.height() x target_w.
  GrayImage horiz(target_w, img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < target_w; ++x) {
      const Taps& t = col_taps[x];
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += t.weight[k] * img.at(t.index[k], y);
      horiz.at(x, y) = acc;
    }
  }

  GrayImage out(target_w, target_h);
  for (int y = 0; y < target_h; ++y) {
    const Taps t = cubic_taps((y + 0.5) * sy - 0.5, img.height());
    for (int x = 0; x < target_w; ++x) {
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += t.weight[k] * horiz.at(x, t.index[k]);
      out.at(x, y) = std::clamp(acc, 0.0, 1.0);
    }
  }
  return out;
}

RoiImage normalize_and_crop(const GrayImage& img, const EyeAnnotation& ann,
                            double target_radius) {
  ann.validate();
  if (img.empty()) throw InvalidInput("cannot crop an empty image");
  if (!(target_radius > 0.0)) throw InvalidInput("target radius must be positive");
  const auto inside = [&](Point2 p) {
    return p.x >= 0.0 && p.y >= 0.0 && p.x <= img.width() - 1 && p.y <= img.height() - 1;
  };
  if (!inside(ann.sclera_center) || !inside(ann.iris_center))
    throw InvalidInput("annotation centre lies outside the image");

  const int side = static_cast<int>(std::lround(kRoiSideFactor * target_radius));
  if (side < 1) throw InvalidInput("target radius yields an empty ROI");

  RoiImage roi;
  roi.scale_factor = target_radius / ann.sclera_radius;
  roi.source_center = ann.sclera_center;
  roi.image = GrayImage(side, side);

  const double half = (side - 1) / 2.0;
  std::vector<Taps> xs(side), ys(side);
  for (int i = 0; i < side; ++i) {
    xs[i] = cubic_taps(ann.sclera_center.x + (i - half) / roi.scale_factor, img.width());
    ys[i] = cubic_taps(ann.sclera_center.y + (i - half) / roi.scale_factor, img.height());
  }
  for (int y = 0; y < side; ++y) {
    const Taps& ty = ys[y];
    for (int x = 0; x < side; ++x) {
      const Taps& tx = xs[x];
      double acc = 0.0;
      for (int j = 0; j < 4; ++j) {
        double row = 0.0;
        for (int k = 0; k < 4; ++k) row += tx.weight[k] * img.at(tx.index[k], ty.index[j]);
        acc += ty.weight[j] * row;
      }
      roi.image.at(x, y) = std::clamp(acc, 0.0, 1.0);
    }
  }
  return roi;
}

GrayImage clahe(const GrayImage& img, const ClaheParams& params) {
  if (img.empty()) return img;
  if (params.tiles_x < 1 || params.tiles_y < 1) throw InvalidInput("CLAHE needs >= 1 tile");
  if (!(params.clip_limit > 0.0 && params.clip_limit <= 1.0))
    throw InvalidInput("CLAHE clip limit must lie in (0, 1]");

  const int tx = std::min(params.tiles_x, img.width());
  const int ty = std::min(params.tiles_y, img.height());
  const auto xe = tile_edges(img.width(), tx);
  const auto ye = tile_edges(img.height(), ty);

  std::vector<TileMapping> maps(static_cast<std::size_t>(tx) * ty);
  for (int r = 0; r < ty; ++r) {
    for (int c = 0; c < tx; ++c) {
      std::array<double, kClaheBins> hist{};
      for (int y = ye[r]; y < ye[r + 1]; ++y)
        for (int x = xe[c]; x < xe[c + 1]; ++x) hist[clahe_bin(img.at(x, y))] += 1.0;

      TileMapping& m = maps[static_cast<std::size_t>(r) * tx + c];
      const auto occupied = std::count_if(hist.begin(), hist.end(), [](double h) { return h > 0.0; });
      if (occupied <= 1) {
        m.identity = true;
        continue;
      }
      const double n = static_cast<double>(xe[c + 1] - xe[c]) * (ye[r + 1] - ye[r]);
      const double limit = params.clip_limit * n;
      double excess = 0.0;
      for (double& h : hist) {
        if (h > limit) {
          excess += h - limit;
          h = limit;
        }
      }
      const double share = excess / kClaheBins;
      double cdf = 0.0;
      for (int b = 0; b < kClaheBins; ++b) {
        cdf += hist[b] + share;
        m.lut[b] = std::clamp(cdf / n, 0.0, 1.0);
      }
    }
  }

  std::vector<double> cx(tx), cy(ty);
  for (int c = 0; c < tx; ++c) cx[c] = (xe[c] + xe[c + 1] - 1) / 2.0;
  for (int r = 0; r < ty; ++r) cy[r] = (ye[r] + ye[r + 1] - 1) / 2.0;

  std::vector<Bracket> bx(img.width());
  for (int x = 0; x < img.width(); ++x) bx[x] = bracket(x, cx);

  GrayImage out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    const Bracket by = bracket(y, cy);
    for (int x = 0; x < img.width(); ++x) {
      const Bracket& b = bx[x];
      const double v = img.at(x, y);
      const auto map_at = [&](int r, int c) { return maps[static_cast<std::size_t>(r) * tx + c].apply(v); };
      // a + w*(b - a) keeps the result exact when neighbouring tiles agree.
      const double m00 = map_at(by.lo, b.lo), m01 = map_at(by.lo, b.hi);
      const double m10 = map_at(by.hi, b.lo), m11 = map_at(by.hi, b.hi);
      const double top = m00 + b.w * (m01 - m00);
      const double bottom = m10 + b.w * (m11 - m10);
      out.at(x, y) = std::clamp(top + by.w * (bottom - top), 0.0, 1.0);
    }
  }
  return out;
}

RoiImage mask_iris(const RoiImage& roi, const EyeAnnotation& ann) {
  RoiImage out = roi;
  const Point2 c = roi.to_roi(ann.iris_center);
  const double r = ann.iris_radius * roi.scale_factor;
  const double r2 = r * r;
  const int x0 = std::max(0, static_cast<int>(std::floor(c.x - r)));
  const int x1 = std::min(out.image.width() - 1, static_cast<int>(std::ceil(c.x + r)));
  const int y0 = std::max(0, static_cast<int>(std::floor(c.y - r)));
  const int y1 = std::min(out.image.height() - 1, static_cast<int>(std::ceil(c.y + r)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = x - c.x, dy = y - c.y;
      if (dx * dx + dy * dy <= r2) out.image.at(x, y) = 0.0;
    }
  }
  return out;
}

MeanSubtracted mean_subtract(const std::vector<GrayImage>& imgs) {
  if (imgs.empty()) throw InvalidInput("mean_subtract needs at least one image");
  const int w = imgs.front().width(), h = imgs.front().height();
  for (const auto& im : imgs)
    if (im.width() != w || im.height() != h)
      throw InvalidInput("mean_subtract needs images of equal dimensions");

  MeanSubtracted out;
  out.mean = GrayImage(w, h);
  auto mean = out.mean.pixels();
  for (const auto& im : imgs) {
    auto px = im.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) mean[i] += px[i];
  }
  const double n = static_cast<double>(imgs.size());
  for (double& m : mean) m /= n;

  out.residuals.reserve(imgs.size());
  for (const auto& im : imgs) {
    GrayImage r = im;
    auto px = r.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) px[i] -= mean[i];
    out.residuals.push_back(std::move(r));
  }
  return out;
}

void write_mean_image(const GrayImage& mean, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  binio::write_u32(os, static_cast<std::uint32_t>(mean.width()));
  binio::write_u32(os, static_cast<std::uint32_t>(mean.height()));
  for (double v : mean.pixels()) binio::write_f32(os, static_cast<float>(v));
  if (!os) throw IoError("write failed: " + path.string());
}

GrayImage read_mean_image(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path.string());
  const std::uint32_t w = binio::read_u32(is);
  const std::uint32_t h = binio::read_u32(is);
  if (!is) throw IoError("truncated mean-image header: " + path.string());
  std::vector<double> data(static_cast<std::size_t>(w) * h);
  for (double& v : data) v = binio::read_f32(is);
  if (!is) throw IoError("truncated mean-image data: " + path.string());
  return GrayImage(static_cast<int>(w), static_cast<int>(h), std::move(data));
}

}  // namespace periocular
