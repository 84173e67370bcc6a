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
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "periocular/eval.hpp"
#include "periocular/imageproc.hpp"

namespace periocular {

struct ManifestRecord {
  /// As written in the manifest; also the image id used by the protocol.
  std::string image_path;
  EyeAnnotation annotation;
  std::optional<Point2> pupil_center;
  std::optional<double> pupil_radius;
  std::optional<long> order;
};

struct SkippedLine {
  std::size_t line = 0;  // 1-based
  std::string reason;
};

struct Manifest {
  /// Directory that relative image paths are resolved against.
  std::filesystem::path base_dir;
  std::vector<ManifestRecord> records;
  std::vector<SkippedLine> skipped;

  std::filesystem::path resolve(const ManifestRecord& record) const;
  std::vector<ProtocolImage> protocol_images() const;
};

/// Column names. The header line is mandatory; column order is free.
inline constexpr const char* kManifestColumns[] = {
    "image_path",      "subject_id",      "eye",           "session",        "distance_m",
    "sclera_center_x", "sclera_center_y", "sclera_radius", "iris_center_x",  "iris_center_y",
    "iris_radius",     "pupil_center_x",  "pupil_center_y", "pupil_radius",  "order"};

/// Malformed records are skipped and listed. More than 5% malformed data
/// lines, or a header missing a required column, raise DataError carrying the
/// line-numbered diagnostics.
Manifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir);
Manifest ingest_manifest(const std::filesystem::path& path);

void write_manifest(const Manifest& manifest, std::ostream& out);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

}  // namespace periocular
