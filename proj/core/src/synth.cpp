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


#include "periocular/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <system_error>

#include "periocular/error.hpp"
#include "rng.hpp"

namespace periocular {

namespace {

// Normalised coordinates span [-kExtent, kExtent] sclera radii, a little more
// than the 7.6-radius crop.
constexpr double kExtent = 4.2;

/// Random lattice sampled bilinearly over the normalised square.
class ValueGrid {
 public:
  ValueGrid(int cells, Rng& rng) : n_(cells + 1), v_(static_cast<std::size_t>(n_ * n_)) {
    for (auto& x : v_) x = rng.uniform();
  }
  double operator()(double u, double v) const {
    const double gx = std::clamp((u + kExtent) / (2 * kExtent), 0.0, 1.0) * (n_ - 1);
    const double gy = std::clamp((v + kExtent) / (2 * kExtent), 0.0, 1.0) * (n_ - 1);
    const int x0 = std::min(static_cast<int>(gx), n_ - 2), y0 = std::min(static_cast<int>(gy), n_ - 2);
    const double fx = gx - x0, fy = gy - y0;
    const auto at = [&](int x, int y) { return v_[static_cast<std::size_t>(y * n_ + x)]; };
    const double top = at(x0, y0) + fx * (at(x0 + 1, y0) - at(x0, y0));
    const double bot = at(x0, y0 + 1) + fx * (at(x0 + 1, y0 + 1) - at(x0, y0 + 1));
    return top + fy * (bot - top);
  }

 private:
  int n_;
  std::vector<double> v_;
};

struct Blob {
  double u, v, sigma, amplitude;
};

struct UserModel {
  ValueGrid coarse;
  ValueGrid fine;
  ValueGrid iris_texture;
  std::vector<Blob> blobs;
  double skin_level;
  Point2 iris_offset;  // in sclera radii

  explicit UserModel(Rng& rng)
      : coarse(8, rng), fine(40, rng), iris_texture(24, rng), skin_level(rng.uniform(0.45, 0.6)) {
    for (int k = 0; k < 10; ++k) {
      Blob b{rng.uniform(-3.6, 3.6), rng.uniform(-3.6, 3.6), rng.uniform(0.15, 0.5), rng.uniform(0.12, 0.3)};
      if (rng.uniform() < 0.5) b.amplitude = -b.amplitude;
      blobs.push_back(b);
    }
    iris_offset = {rng.uniform(-0.08, 0.08), rng.uniform(-0.08, 0.08)};
  }
};

/// Fraction of the pixel inside a circle of radius r at distance d.
double coverage(double d, double r) { return std::clamp(r - d + 0.5, 0.0, 1.0); }

double skin(const UserModel& m, double u, double v) {
  double s = m.skin_level + 0.25 * (m.coarse(u, v) - 0.5) + 0.18 * (m.fine(u, v) - 0.5);
  for (const auto& b : m.blobs) {
    const double du = u - b.u, dv = v - b.v;
    s += b.amplitude * std::exp(-(du * du + dv * dv) / (2 * b.sigma * b.sigma));
  }
  return s;
}

}  // namespace

Manifest generate_synthetic(const SynthParams& p, const std::filesystem::path& out_dir) {
  if (p.users < 2) throw InvalidInput("synthetic set needs at least 2 users");
  if (p.images_per_user < 2) throw InvalidInput("synthetic set needs at least 2 images per user");
  if (p.image_size < 32) throw InvalidInput("synthetic image size must be at least 32");
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "images", ec);
  if (ec) throw IoError("cannot create " + (out_dir / "images").string() + ": " + ec.message());

  Manifest manifest;
  manifest.base_dir = out_dir;
  constexpr double kIrisRatio = 0.4, kPupilRatio = 0.15;
  for (int user = 0; user < p.users; ++user) {
    Rng user_rng(p.seed, static_cast<std::uint64_t>(user) * 2);
    const UserModel model(user_rng);
    char subject[32];
    std::snprintf(subject, sizeof subject, "s%03d", user / 2);
    const Eye eye = user % 2 == 0 ? Eye::left : Eye::right;

    for (int i = 0; i < p.images_per_user; ++i) {
      Rng rng(p.seed, (static_cast<std::uint64_t>(user) << 20) + static_cast<std::uint64_t>(i) * 2 + 1);
      const bool near = (i / 2) % 2 == 0;
      const double rs = (near ? p.near_radius : p.far_radius) * rng.uniform(0.98, 1.02);
      const double half = (p.image_size - 1) / 2.0;
      const Point2 sc{half + rng.uniform(-p.max_shift_px, p.max_shift_px),
                      half + rng.uniform(-p.max_shift_px, p.max_shift_px)};
      const Point2 ic{sc.x + model.iris_offset.x * rs, sc.y + model.iris_offset.y * rs};
      const double ri = kIrisRatio * rs, rp = kPupilRatio * rs;
      const double brightness = rng.uniform(-p.max_brightness_shift, p.max_brightness_shift);

      GrayImage img(p.image_size, p.image_size);
      for (int y = 0; y < p.image_size; ++y) {
        for (int x = 0; x < p.image_size; ++x) {
          const double u = (x - sc.x) / rs, v = (y - sc.y) / rs;
          double val = skin(model, u, v);
          const double ds = std::hypot(x - sc.x, y - sc.y);
          const double di = std::hypot(x - ic.x, y - ic.y);
          const double sclera = 0.82 + 0.06 * (model.fine(u * 2, v * 2) - 0.5);
          const double iris = 0.22 + 0.2 * model.iris_texture((x - ic.x) / rs, (y - ic.y) / rs);
          val += coverage(ds, rs) * (sclera - val);
          val += coverage(di, ri) * (iris - val);
          val += coverage(di, rp) * (0.05 - val);
          val += brightness + p.noise_sigma * rng.normal();
          img.at(x, y) = std::clamp(val, 0.0, 1.0);
        }
      }

      char name[96];
      std::snprintf(name, sizeof name, "images/%s_%s_%02d.png", subject, to_string(eye).c_str(), i);
      save_png(img, out_dir / name);

      ManifestRecord r;
      r.image_path = name;
      r.annotation.subject_id = subject;
      r.annotation.eye = eye;
      r.annotation.session = 1 + i % 2;
      r.annotation.distance_m = near ? p.near_distance_m : p.far_distance_m;
      r.annotation.sclera_center = sc;
      r.annotation.sclera_radius = rs;
      r.annotation.iris_center = ic;
      r.annotation.iris_radius = ri;
      r.pupil_center = ic;
      r.pupil_radius = rp;
      manifest.records.push_back(std::move(r));
    }
  }
  write_manifest(manifest, out_dir / "manifest.csv");
  return manifest;
}

}  // namespace periocular
