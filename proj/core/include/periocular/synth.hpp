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

#include <cstdint>
#include <filesystem>

#include "periocular/manifest.hpp"

namespace periocular {

struct SynthParams {
  int users = 20;
  int images_per_user = 4;
  std::uint64_t seed = 7;
  int image_size = 224;
  /// Sclera radius in pixels for the near and far capture distance.
  double near_radius = 26.0;
  double far_radius = 21.0;
  double near_distance_m = 4.0;
  double far_distance_m = 8.0;
  double max_shift_px = 3.0;
  double max_brightness_shift = 0.05;
  double noise_sigma = 0.02;
};

/// Renders a labelled synthetic periocular set into out_dir/images and writes
/// out_dir/manifest.csv. User k is subject s<k/2>, eye left for even k and
/// right for odd k. Each user owns a skin texture and blob pattern laid out
/// in sclera-radius units, so it survives the scale normalisation; each
/// image adds a shift, a brightness offset and pixel noise. Images alternate
/// sessions 1/2 and, in pairs, the near/far distance groups. Output is a pure
/// function of the parameters.
Manifest generate_synthetic(const SynthParams& params, const std::filesystem::path& out_dir);

}  // namespace periocular
