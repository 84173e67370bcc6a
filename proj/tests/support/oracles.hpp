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


// Reference implementations used as test oracles. Each one is written
// straight from the definition, favouring obviousness over speed, and shares
// no code with the library beyond its plain data types.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "periocular/image.hpp"
#include "periocular/imageproc.hpp"

namespace oracle {

using periocular::GrayImage;

// ---------------------------------------------------------------- protocol

struct Img {
  std::string id;
  std::string user;
  int session = 1;
  double distance = 0.0;
};

struct PairCounts {
  std::size_t genuine = 0;
  std::size_t impostor = 0;
  std::set<std::pair<std::string, std::string>> genuine_pairs;  // unordered, stored sorted
  std::set<std::pair<std::string, std::string>> impostor_pairs;
};

/// Brute force over every ordered pair of images. A within-user unordered
/// pair counts once; an impostor trial is (first image of u, second image of
/// v) with images ranked by (session, distance, id).
inline PairCounts enumerate_pairs(const std::vector<Img>& imgs) {
  std::map<std::string, std::vector<Img>> users;
  for (const auto& im : imgs) users[im.user].push_back(im);
  PairCounts out;
  for (std::size_t i = 0; i < imgs.size(); ++i)
    for (std::size_t j = 0; j < imgs.size(); ++j) {
      if (i == j || imgs[i].user != imgs[j].user) continue;
      if (users[imgs[i].user].size() < 2) continue;
      auto p = std::minmax(imgs[i].id, imgs[j].id);
      out.genuine_pairs.insert({p.first, p.second});
    }
  out.genuine = out.genuine_pairs.size();
  const auto rank = [](std::vector<Img> v) {
    std::sort(v.begin(), v.end(), [](const Img& a, const Img& b) {
      return std::tie(a.session, a.distance, a.id) < std::tie(b.session, b.distance, b.id);
    });
    return v;
  };
  for (const auto& [u, iu] : users)
    for (const auto& [v, iv] : users) {
      if (u == v || iu.size() < 2 || iv.size() < 2) continue;
      out.impostor_pairs.insert({rank(iu)[0].id, rank(iv)[1].id});
      ++out.impostor;
    }
  return out;
}

// --------------------------------------------------------------------- DET

struct DetResult {
  double eer = 0.0;
  double frr_at_far = 1.0;
};

/// Exhaustive threshold sweep: every distinct score plus -inf and +inf.
/// FAR(t) counts impostors >= t, FRR(t) genuines < t. EER is taken where
/// FAR - FRR first becomes <= 0 along increasing thresholds, linearly
/// interpolating the crossing from the previous point.
inline DetResult det(const std::vector<double>& gen, const std::vector<double>& imp, double far_target) {
  std::set<double> ts(gen.begin(), gen.end());
  ts.insert(imp.begin(), imp.end());
  std::vector<double> thresholds = {-std::numeric_limits<double>::infinity()};
  thresholds.insert(thresholds.end(), ts.begin(), ts.end());
  thresholds.push_back(std::numeric_limits<double>::infinity());

  std::vector<std::pair<double, double>> pts;  // (far, frr)
  for (double t : thresholds) {
    double fa = 0, fr = 0;
    for (double s : imp) fa += s >= t ? 1 : 0;
    for (double s : gen) fr += s < t ? 1 : 0;
    if (std::isinf(t) && t < 0) fa = static_cast<double>(imp.size()), fr = 0;
    if (std::isinf(t) && t > 0) fa = 0, fr = static_cast<double>(gen.size());
    pts.push_back({fa / imp.size(), fr / gen.size()});
  }
  DetResult r;
  for (std::size_t k = 1; k < pts.size(); ++k) {
    const double d1 = pts[k].first - pts[k].second;
    if (d1 > 0) continue;
    const double d0 = pts[k - 1].first - pts[k - 1].second;
    if (d1 == 0) {
      r.eer = pts[k].first;
    } else {
      // Solve FAR(a) = FRR(a) on the segment between the two points.
      const double a = d0 / (d0 - d1);
      r.eer = (1 - a) * pts[k - 1].first + a * pts[k].first;
    }
    break;
  }
  for (const auto& [fa, fr] : pts)
    if (fa <= far_target) r.frr_at_far = std::min(r.frr_at_far, fr);
  return r;
}

// --------------------------------------------------------------- imageproc

/// Keys cubic convolution kernel with a = -0.5.
inline double keys(double x) {
  const double a = -0.5;
  x = std::fabs(x);
  if (x < 1) return (a + 2) * x * x * x - (a + 3) * x * x + 1;
  if (x < 2) return a * x * x * x - 5 * a * x * x + 8 * a * x - 4 * a;
  return 0;
}

/// Pixel-by-pixel bicubic evaluation: for each output pixel, sum the 4x4
/// source neighbourhood around its centre-aligned source position, with
/// clamped (edge-replicated) indices.
inline GrayImage bicubic(const GrayImage& src, int w, int h) {
  GrayImage out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double sx = (x + 0.5) * src.width() / w - 0.5;
      const double sy = (y + 0.5) * src.height() / h - 0.5;
      const int ix = static_cast<int>(std::floor(sx)), iy = static_cast<int>(std::floor(sy));
      double acc = 0;
      for (int j = iy - 1; j <= iy + 2; ++j)
        for (int i = ix - 1; i <= ix + 2; ++i) {
          const int ci = std::clamp(i, 0, src.width() - 1), cj = std::clamp(j, 0, src.height() - 1);
          acc += keys(sx - i) * keys(sy - j) * src.at(ci, cj);
        }
      out.at(x, y) = std::clamp(acc, 0.0, 1.0);
    }
  return out;
}

/// CLAHE written per output pixel: find the tile centres around the pixel,
/// build each of those tiles' clipped histogram mapping from scratch and
/// blend bilinearly. Conventions: 256 bins (bin = floor(v*256), top value
/// in the last bin); tile edges at k*floor(extent/tiles) with the last tile
/// taking the remainder; clip at limit*N with the excess spread evenly over
/// all bins; mapping = cumulative count / N; a tile whose pixels all fall in
/// one bin leaves values unchanged.
inline GrayImage clahe(const GrayImage& img, int tiles_x, int tiles_y, double clip) {
  const auto edges = [](int extent, int tiles) {
    std::vector<int> e;
    for (int k = 0; k < tiles; ++k) e.push_back(k * (extent / tiles));
    e.push_back(extent);
    return e;
  };
  const auto bin = [](double v) { return std::min(255, static_cast<int>(std::floor(v * 256))); };
  const auto xe = edges(img.width(), tiles_x), ye = edges(img.height(), tiles_y);
  const auto map_value = [&](int tr, int tc, double v) {
    std::array<double, 256> hist{};
    for (int y = ye[tr]; y < ye[tr + 1]; ++y)
      for (int x = xe[tc]; x < xe[tc + 1]; ++x) hist[bin(img.at(x, y))] += 1;
    int occupied = 0;
    for (double c : hist) occupied += c > 0;
    if (occupied <= 1) return v;
    const double n = double(xe[tc + 1] - xe[tc]) * (ye[tr + 1] - ye[tr]);
    double excess = 0;
    for (double& c : hist)
      if (c > clip * n) excess += c - clip * n, c = clip * n;
    double cdf = 0;
    for (int b = 0; b <= bin(v); ++b) cdf += hist[b] + excess / 256;
    return std::min(1.0, cdf / n);
  };
  const auto locate = [](double p, const std::vector<int>& e, int& lo, int& hi, double& w) {
    const int n = static_cast<int>(e.size()) - 1;
    std::vector<double> c;
    for (int k = 0; k < n; ++k) c.push_back((e[k] + e[k + 1] - 1) / 2.0);
    lo = hi = 0;
    w = 0;
    if (p <= c.front()) return;
    if (p >= c.back()) {
      lo = hi = n - 1;
      return;
    }
    for (int k = 0; k + 1 < n; ++k)
      if (c[k] <= p && p < c[k + 1]) {
        lo = k, hi = k + 1, w = (p - c[k]) / (c[k + 1] - c[k]);
        return;
      }
  };
  GrayImage out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      int r0, r1, c0, c1;
      double wy, wx;
      locate(y, ye, r0, r1, wy);
      locate(x, xe, c0, c1, wx);
      const double v = img.at(x, y);
      const double top = (1 - wx) * map_value(r0, c0, v) + wx * map_value(r0, c1, v);
      const double bot = (1 - wx) * map_value(r1, c0, v) + wx * map_value(r1, c1, v);
      out.at(x, y) = std::clamp((1 - wy) * top + wy * bot, 0.0, 1.0);
    }
  return out;
}

/// Pixels (x, y) with (x - cx)^2 + (y - cy)^2 <= r^2 inside a w x h grid.
inline std::size_t disc_pixels(int w, int h, double cx, double cy, double r) {
  std::size_t n = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) n += (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r;
  return n;
}

// ------------------------------------------------------------- descriptors

/// LBP histogram straight from the definition: clockwise neighbours from
/// the top-left, first neighbour as the most significant bit, neighbour >=
/// centre sets the bit, code >> 5 picks one of 8 bins, 8x8 blocks of
/// floor(extent/8) pixels (last block takes the remainder), border pixels
/// skipped, each non-empty block L1-normalised.
inline std::vector<double> lbp(const GrayImage& img) {
  const int W = img.width(), H = img.height();
  const int bw = W / 8, bh = H / 8;
  std::vector<double> h(512, 0);
  const int nx[8] = {-1, 0, 1, 1, 1, 0, -1, -1}, ny[8] = {-1, -1, -1, 0, 1, 1, 1, 0};
  for (int y = 1; y < H - 1; ++y)
    for (int x = 1; x < W - 1; ++x) {
      int code = 0;
      for (int k = 0; k < 8; ++k)
        if (img.at(x + nx[k], y + ny[k]) >= img.at(x, y)) code |= 1 << (7 - k);
      const int bx = std::min(7, x / bw), by = std::min(7, y / bh);
      h[(by * 8 + bx) * 8 + code / 32] += 1;
    }
  for (int b = 0; b < 64; ++b) {
    double s = 0;
    for (int k = 0; k < 8; ++k) s += h[b * 8 + k];
    if (s > 0)
      for (int k = 0; k < 8; ++k) h[b * 8 + k] /= s;
  }
  return h;
}

// ------------------------------------------------------------------ neural

/// Valid (unpadded, stride 1) 2-D cross-correlation plus bias.
inline std::vector<double> conv2d_valid(const std::vector<double>& in, int w, int h, const std::vector<double>& k,
                                        int kw, int kh, double bias) {
  std::vector<double> out;
  for (int y = 0; y + kh <= h; ++y)
    for (int x = 0; x + kw <= w; ++x) {
      double s = bias;
      for (int j = 0; j < kh; ++j)
        for (int i = 0; i < kw; ++i) s += k[j * kw + i] * in[(y + j) * w + (x + i)];
      out.push_back(s);
    }
  return out;
}

// ------------------------------------------------------------------- utils

inline GrayImage random_image(int w, int h, std::mt19937_64& rng, bool quantize = true) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GrayImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double v = u(rng);
      img.at(x, y) = quantize ? std::round(v * 255.0) / 255.0 : v;
    }
  return img;
}

}  // namespace oracle
