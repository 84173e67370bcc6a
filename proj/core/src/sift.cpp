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

#include "periocular/sift.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>

#include <json.hpp>

#include "periocular/error.hpp"

namespace periocular {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kMinSiftSide = 32;
constexpr int kBorder = 5;
constexpr int kDescWidth = 4;
constexpr int kDescBins = 8;
constexpr double kDescScaleFactor = 3.0;
constexpr double kOriSigmaFactor = 1.5;
constexpr double kOriRadiusFactor = 3.0 * kOriSigmaFactor;

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  if (a >= kTwoPi) a -= kTwoPi;
  return a;
}

GrayImage gaussian_blur(const GrayImage& src, double sigma) {
  if (sigma <= 0.0) return src;
  const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;

  const int w = src.width(), h = src.height();
  GrayImage tmp(w, h), out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * src.clamped(x + i, y);
      tmp.at(x, y) = acc;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * tmp.clamped(x, y + i);
      out.at(x, y) = acc;
    }
  return out;
}

GrayImage downsample(const GrayImage& src) {
  GrayImage out((src.width() + 1) / 2, (src.height() + 1) / 2);
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x) out.at(x, y) = src.at(2 * x, 2 * y);
  return out;
}

struct Octave {
  std::vector<GrayImage> gauss;  // scales_per_octave + 3 levels
  std::vector<GrayImage> dog;    // scales_per_octave + 2 levels
};

std::vector<Octave> build_pyramid(const GrayImage& img, const SiftParams& p) {
  const int levels = p.scales_per_octave + 3;
  const double k = std::pow(2.0, 1.0 / p.scales_per_octave);
  std::vector<double> incr(levels, 0.0);
  incr[0] = std::sqrt(std::max(p.sigma * p.sigma - p.assumed_blur * p.assumed_blur, 0.01));
  for (int i = 1; i < levels; ++i) {
    const double prev = p.sigma * std::pow(k, i - 1);
    const double total = prev * k;
    incr[i] = std::sqrt(total * total - prev * prev);
  }

  std::vector<Octave> pyr;
  GrayImage base = img;
  for (int o = 0; o < p.octaves; ++o) {
    if (std::min(base.width(), base.height()) < 2 * kBorder + 3) break;
    Octave oct;
    oct.gauss.reserve(levels);
    oct.gauss.push_back(gaussian_blur(base, o == 0 ? incr[0] : 0.0));
    for (int i = 1; i < levels; ++i) oct.gauss.push_back(gaussian_blur(oct.gauss.back(), incr[i]));
    for (int i = 0; i + 1 < levels; ++i) {
      GrayImage d(base.width(), base.height());
      auto dp = d.pixels();
      auto a = oct.gauss[i].pixels();
      auto b = oct.gauss[i + 1].pixels();
      for (std::size_t j = 0; j < dp.size(); ++j) dp[j] = b[j] - a[j];
      oct.dog.push_back(std::move(d));
    }
    base = downsample(oct.gauss[p.scales_per_octave]);
    pyr.push_back(std::move(oct));
  }
  return pyr;
}

bool is_extremum(const std::vector<GrayImage>& dog, int layer, int x, int y) {
  const double v = dog[layer].at(x, y);
  const bool want_max = v > 0.0;
  for (int l = layer - 1; l <= layer + 1; ++l)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (l == layer && dx == 0 && dy == 0) continue;
        const double n = dog[l].at(x + dx, y + dy);
        if (want_max ? n >= v : n <= v) return false;
      }
  return true;
}

// Solves a 3x3 system by Cramer's rule; false when singular.
bool solve3(const double h[3][3], const double g[3], double x[3]) {
  const double det = h[0][0] * (h[1][1] * h[2][2] - h[1][2] * h[2][1]) -
                     h[0][1] * (h[1][0] * h[2][2] - h[1][2] * h[2][0]) +
                     h[0][2] * (h[1][0] * h[2][1] - h[1][1] * h[2][0]);
  if (std::abs(det) < 1e-18) return false;
  for (int c = 0; c < 3; ++c) {
    double m[3][3];
    for (int r = 0; r < 3; ++r)
      for (int cc = 0; cc < 3; ++cc) m[r][cc] = cc == c ? g[r] : h[r][cc];
    x[c] = (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
            m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
            m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])) /
           det;
  }
  return true;
}

struct Extremum {
  int layer = 0;
  int x = 0;
  int y = 0;
  double offset[3] = {0.0, 0.0, 0.0};  // x, y, layer
};

// Quadratic refinement plus contrast and edge rejection.
bool refine(const std::vector<GrayImage>& dog, const SiftParams& p, Extremum& e) {
  const int w = dog[0].width(), h = dog[0].height();
  bool converged = false;
  double g[3] = {0, 0, 0};
  for (int step = 0; step < p.max_refine_steps; ++step) {
    const GrayImage& prev = dog[e.layer - 1];
    const GrayImage& cur = dog[e.layer];
    const GrayImage& next = dog[e.layer + 1];
    const int x = e.x, y = e.y;
    const double v = cur.at(x, y);
    g[0] = 0.5 * (cur.at(x + 1, y) - cur.at(x - 1, y));
    g[1] = 0.5 * (cur.at(x, y + 1) - cur.at(x, y - 1));
    g[2] = 0.5 * (next.at(x, y) - prev.at(x, y));
    double hs[3][3];
    hs[0][0] = cur.at(x + 1, y) + cur.at(x - 1, y) - 2 * v;
    hs[1][1] = cur.at(x, y + 1) + cur.at(x, y - 1) - 2 * v;
    hs[2][2] = next.at(x, y) + prev.at(x, y) - 2 * v;
    hs[0][1] = hs[1][0] =
        0.25 * (cur.at(x + 1, y + 1) - cur.at(x - 1, y + 1) - cur.at(x + 1, y - 1) + cur.at(x - 1, y - 1));
    hs[0][2] = hs[2][0] =
        0.25 * (next.at(x + 1, y) - next.at(x - 1, y) - prev.at(x + 1, y) + prev.at(x - 1, y));
    hs[1][2] = hs[2][1] =
        0.25 * (next.at(x, y + 1) - next.at(x, y - 1) - prev.at(x, y + 1) + prev.at(x, y - 1));
    const double neg_g[3] = {-g[0], -g[1], -g[2]};
    double off[3];
    if (!solve3(hs, neg_g, off)) return false;
    if (std::abs(off[0]) < 0.5 && std::abs(off[1]) < 0.5 && std::abs(off[2]) < 0.5) {
      std::copy(off, off + 3, e.offset);
      converged = true;
      break;
    }
    if (std::abs(off[0]) > 1e6 || std::abs(off[1]) > 1e6 || std::abs(off[2]) > 1e6) return false;
    e.x += static_cast<int>(std::lround(off[0]));
    e.y += static_cast<int>(std::lround(off[1]));
    e.layer += static_cast<int>(std::lround(off[2]));
    if (e.layer < 1 || e.layer > p.scales_per_octave || e.x < kBorder || e.x >= w - kBorder ||
        e.y < kBorder || e.y >= h - kBorder)
      return false;
  }
  if (!converged) return false;

  const GrayImage& cur = dog[e.layer];
  const int x = e.x, y = e.y;
  const double v = cur.at(x, y);
  const double contrast = v + 0.5 * (g[0] * e.offset[0] + g[1] * e.offset[1] + g[2] * e.offset[2]);
  if (std::abs(contrast) < p.contrast_threshold) return false;

  const double dxx = cur.at(x + 1, y) + cur.at(x - 1, y) - 2 * v;
  const double dyy = cur.at(x, y + 1) + cur.at(x, y - 1) - 2 * v;
  const double dxy =
      0.25 * (cur.at(x + 1, y + 1) - cur.at(x - 1, y + 1) - cur.at(x + 1, y - 1) + cur.at(x - 1, y - 1));
  const double tr = dxx + dyy;
  const double det = dxx * dyy - dxy * dxy;
  const double r = p.edge_ratio;
  return det > 0.0 && tr * tr * r < (r + 1.0) * (r + 1.0) * det;
}

std::vector<double> orientation_histogram(const GrayImage& g, int cx, int cy, double sigma_oct,
                                          int bins) {
  std::vector<double> hist(bins, 0.0);
  const int radius = static_cast<int>(std::lround(kOriRadiusFactor * sigma_oct));
  const double sw = kOriSigmaFactor * sigma_oct;
  const double denom = 2.0 * sw * sw;
  for (int dy = -radius; dy <= radius; ++dy) {
    const int y = cy + dy;
    if (y <= 0 || y >= g.height() - 1) continue;
    for (int dx = -radius; dx <= radius; ++dx) {
      const int x = cx + dx;
      if (x <= 0 || x >= g.width() - 1) continue;
      const double gx = g.at(x + 1, y) - g.at(x - 1, y);
      const double gy = g.at(x, y + 1) - g.at(x, y - 1);
      const double weight = std::exp(-(dx * dx + dy * dy) / denom);
      const double ang = wrap_angle(std::atan2(gy, gx));
      int bin = static_cast<int>(std::lround(ang * bins / kTwoPi));
      bin = ((bin % bins) + bins) % bins;
      hist[bin] += weight * std::hypot(gx, gy);
    }
  }
  // circular [1 4 6 4 1] / 16 smoothing
  std::vector<double> smooth(bins);
  for (int i = 0; i < bins; ++i) {
    const auto at = [&](int j) { return hist[((j % bins) + bins) % bins]; };
    smooth[i] = (at(i - 2) + at(i + 2)) * (1.0 / 16) + (at(i - 1) + at(i + 1)) * (4.0 / 16) + at(i) * (6.0 / 16);
  }
  return smooth;
}

std::array<float, kSiftDescriptorLength> compute_descriptor(const GrayImage& g, double xf, double yf,
                                                            double orientation, double sigma_oct,
                                                            double clip) {
  constexpr int d = kDescWidth, n = kDescBins;
  const int cx = static_cast<int>(std::lround(xf));
  const int cy = static_cast<int>(std::lround(yf));
  const double cos_t = std::cos(orientation), sin_t = std::sin(orientation);
  const double hist_width = kDescScaleFactor * sigma_oct;
  int radius = static_cast<int>(std::lround(hist_width * std::numbers::sqrt2 * (d + 1) * 0.5));
  radius = std::min(radius, static_cast<int>(std::hypot(g.width(), g.height())));
  const double exp_scale = -1.0 / (d * d * 0.5);

  std::vector<double> hist(d * d * n, 0.0);
  for (int i = -radius; i <= radius; ++i) {
    for (int j = -radius; j <= radius; ++j) {
      // offset (j, i) expressed in the keypoint frame, in cell units
      const double c_rot = (j * cos_t + i * sin_t) / hist_width;
      const double r_rot = (-j * sin_t + i * cos_t) / hist_width;
      const double rbin = r_rot + d / 2.0 - 0.5;
      const double cbin = c_rot + d / 2.0 - 0.5;
      if (rbin <= -1.0 || rbin >= d || cbin <= -1.0 || cbin >= d) continue;
      const int x = cx + j, y = cy + i;
      if (x <= 0 || x >= g.width() - 1 || y <= 0 || y >= g.height() - 1) continue;

      const double gx = g.at(x + 1, y) - g.at(x - 1, y);
      const double gy = g.at(x, y + 1) - g.at(x, y - 1);
      const double mag = std::hypot(gx, gy) * std::exp((c_rot * c_rot + r_rot * r_rot) * exp_scale);
      const double obin = wrap_angle(std::atan2(gy, gx) - orientation) * n / kTwoPi;

      const int r0 = static_cast<int>(std::floor(rbin));
      const int c0 = static_cast<int>(std::floor(cbin));
      const int o0 = static_cast<int>(std::floor(obin));
      const double dr = rbin - r0, dc = cbin - c0, dobin = obin - o0;
      for (int a = 0; a < 2; ++a) {
        const int r = r0 + a;
        if (r < 0 || r >= d) continue;
        const double wr = a ? dr : 1.0 - dr;
        for (int b = 0; b < 2; ++b) {
          const int c = c0 + b;
          if (c < 0 || c >= d) continue;
          const double wc = b ? dc : 1.0 - dc;
          for (int e = 0; e < 2; ++e) {
            const int o = (o0 + e) % n;
            const double wo = e ? dobin : 1.0 - dobin;
            hist[(r * d + c) * n + o] += mag * wr * wc * wo;
          }
        }
      }
    }
  }

  std::array<float, kSiftDescriptorLength> out{};
  double norm = 0.0;
  for (double v : hist) norm += v * v;
  norm = std::sqrt(norm);
  if (norm <= 0.0) return out;
  double norm2 = 0.0;
  for (double& v : hist) {
    v = std::min(v / norm, clip);
    norm2 += v * v;
  }
  norm2 = std::sqrt(norm2);
  for (std::size_t i = 0; i < hist.size(); ++i) out[i] = static_cast<float>(hist[i] / norm2);
  return out;
}

double descriptor_distance(const Keypoint& a, const Keypoint& b) {
  double acc = 0.0;
  for (int i = 0; i < kSiftDescriptorLength; ++i) {
    const double d = static_cast<double>(a.descriptor[i]) - b.descriptor[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::vector<Keypoint> detect_keypoints(const GrayImage& img, const SiftParams& p) {
  if (img.width() < kMinSiftSide || img.height() < kMinSiftSide)
    throw InvalidInput("SIFT input must be at least 32x32");
  if (p.scales_per_octave < 1 || p.octaves < 1) throw InvalidInput("bad SIFT pyramid parameters");

  const auto pyramid = build_pyramid(img, p);
  const double prelim = 0.5 * p.contrast_threshold / p.scales_per_octave;

  std::vector<Keypoint> out;
  for (std::size_t o = 0; o < pyramid.size(); ++o) {
    const auto& oct = pyramid[o];
    const int w = oct.dog[0].width(), h = oct.dog[0].height();
    const double octave_scale = std::ldexp(1.0, static_cast<int>(o));
    for (int layer = 1; layer <= p.scales_per_octave; ++layer) {
      for (int y = kBorder; y < h - kBorder; ++y) {
        for (int x = kBorder; x < w - kBorder; ++x) {
          const double v = oct.dog[layer].at(x, y);
          if (std::abs(v) <= prelim || !is_extremum(oct.dog, layer, x, y)) continue;

          Extremum e{layer, x, y, {0, 0, 0}};
          if (!refine(oct.dog, p, e)) continue;

          const double sigma_oct =
              p.sigma * std::pow(2.0, (e.layer + e.offset[2]) / p.scales_per_octave);
          const double xf = e.x + e.offset[0];
          const double yf = e.y + e.offset[1];
          const GrayImage& g = oct.gauss[e.layer];

          const auto hist = orientation_histogram(g, e.x, e.y, sigma_oct, p.orientation_bins);
          const double peak = *std::max_element(hist.begin(), hist.end());
          if (peak <= 0.0) continue;
          const int bins = p.orientation_bins;
          for (int b = 0; b < bins; ++b) {
            const double l = hist[(b + bins - 1) % bins];
            const double r = hist[(b + 1) % bins];
            const double c = hist[b];
            if (!(c > l && c > r && c >= p.peak_ratio * peak)) continue;
            const double shift = 0.5 * (l - r) / (l - 2.0 * c + r);
            Keypoint kp;
            kp.x = xf * octave_scale;
            kp.y = yf * octave_scale;
            kp.scale = sigma_oct * octave_scale;
            kp.orientation = wrap_angle((b + shift) * kTwoPi / bins);
            kp.descriptor = compute_descriptor(g, xf, yf, kp.orientation, sigma_oct, p.descriptor_clip);
            out.push_back(kp);
          }
        }
      }
    }
  }
  return out;
}

MatchSet match_constrained(const std::vector<Keypoint>& enrol, const std::vector<Keypoint>& probe,
                           const MatchParams& params) {
  MatchSet result;
  if (enrol.empty() || probe.empty()) return result;

  // 1. ratio test, then greedy one-to-one by ascending distance
  std::vector<MatchPair> cand;
  for (std::size_t i = 0; i < enrol.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    double second = std::numeric_limits<double>::infinity();
    std::size_t best_j = 0;
    for (std::size_t j = 0; j < probe.size(); ++j) {
      const double d = descriptor_distance(enrol[i], probe[j]);
      if (d < best) {
        second = best;
        best = d;
        best_j = j;
      } else if (d < second) {
        second = d;
      }
    }
    if (probe.size() == 1 || best < params.ratio * second) cand.push_back({i, best_j, best});
  }
  std::sort(cand.begin(), cand.end(), [](const MatchPair& a, const MatchPair& b) {
    return std::tie(a.distance, a.enrol, a.probe) < std::tie(b.distance, b.enrol, b.probe);
  });
  std::vector<bool> used_e(enrol.size(), false), used_p(probe.size(), false);
  std::vector<MatchPair> pairs;
  for (const auto& c : cand) {
    if (used_e[c.enrol] || used_p[c.probe]) continue;
    used_e[c.enrol] = used_p[c.probe] = true;
    pairs.push_back(c);
  }
  result.candidates = pairs.size();
  if (pairs.empty()) return result;

  // 2. orientation-difference consistency around the modal bin
  const int bins = std::max(1, params.angle_bins);
  const double bin_width = kTwoPi / bins;
  std::vector<double> diffs(pairs.size());
  std::vector<int> counts(bins, 0);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    diffs[k] = wrap_angle(probe[pairs[k].probe].orientation - enrol[pairs[k].enrol].orientation);
    ++counts[std::min(bins - 1, static_cast<int>(diffs[k] / bin_width))];
  }
  const int mode_bin = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  const double mode = (mode_bin + 0.5) * bin_width;
  const double tol = params.angle_tolerance_deg * std::numbers::pi / 180.0;
  std::vector<MatchPair> kept;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    double dev = wrap_angle(diffs[k] - mode);
    if (dev > std::numbers::pi) dev = kTwoPi - dev;
    if (dev <= tol) kept.push_back(pairs[k]);
  }
  if (kept.empty()) return result;

  // 3. displacement consistency around the median displacement
  double diag = params.image_diagonal;
  if (!(diag > 0.0)) {
    double mx = 0.0, my = 0.0;
    for (const auto& kp : enrol) mx = std::max(mx, kp.x), my = std::max(my, kp.y);
    for (const auto& kp : probe) mx = std::max(mx, kp.x), my = std::max(my, kp.y);
    diag = std::hypot(mx + 1.0, my + 1.0);
  }
  std::vector<double> dxs, dys;
  for (const auto& m : kept) {
    dxs.push_back(probe[m.probe].x - enrol[m.enrol].x);
    dys.push_back(probe[m.probe].y - enrol[m.enrol].y);
  }
  const double mdx = median(dxs), mdy = median(dys);
  const double limit = params.distance_fraction * diag;
  for (std::size_t k = 0; k < kept.size(); ++k)
    if (std::hypot(dxs[k] - mdx, dys[k] - mdy) <= limit) result.pairs.push_back(kept[k]);

  std::sort(result.pairs.begin(), result.pairs.end(),
            [](const MatchPair& a, const MatchPair& b) { return a.enrol < b.enrol; });
  result.score = result.pairs.size();
  return result;
}

void write_keypoints(std::ostream& os, const std::vector<Keypoint>& kps) {
  for (const auto& kp : kps) {
    nlohmann::ordered_json j;
    j["x"] = kp.x;
    j["y"] = kp.y;
    j["scale"] = kp.scale;
    j["orientation"] = kp.orientation;
    j["descriptor"] = kp.descriptor;
    os << j.dump() << '\n';
  }
}

std::vector<Keypoint> read_keypoints(std::istream& is) {
  std::vector<Keypoint> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Keypoint kp;
      kp.x = j.at("x").get<double>();
      kp.y = j.at("y").get<double>();
      kp.scale = j.at("scale").get<double>();
      kp.orientation = j.at("orientation").get<double>();
      const auto& d = j.at("descriptor");
      if (d.size() != kSiftDescriptorLength) throw InvalidInput("descriptor must have 128 values");
      for (int i = 0; i < kSiftDescriptorLength; ++i) kp.descriptor[i] = d[i].get<float>();
      out.push_back(kp);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("keypoint line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void save_keypoints(const std::vector<Keypoint>& kps, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  write_keypoints(os, kps);
  if (!os) throw IoError("write failed: " + path.string());
}

std::vector<Keypoint> load_keypoints(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path.string());
  return read_keypoints(is);
}

}  // namespace periocular
