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
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace periocular {

enum class ExtractorKind { lbp, hog, neural };

std::string to_string(ExtractorKind kind);
ExtractorKind parse_extractor_kind(const std::string& text);

/// Flat feature vector. Values are stored as float32, which is also the
/// on-disk precision, so a vector read back from the cache is bit-identical
/// to the freshly extracted one.
struct FeatureVector {
  std::vector<float> values;
  ExtractorKind extractor = ExtractorKind::lbp;
  std::optional<std::string> layer;
  std::string source_id;

  std::span<const float> view() const noexcept { return values; }
  std::size_t size() const noexcept { return values.size(); }
  bool operator==(const FeatureVector&) const = default;
};

/// One JSON header line ({"extractor":..,"layer":..,"source":..}), then a
/// little-endian u32 element count and that many little-endian float32s.
void write_feature(std::ostream& os, const FeatureVector& fv);
FeatureVector read_feature(std::istream& is);

void save_feature(const FeatureVector& fv, const std::filesystem::path& path);
FeatureVector load_feature(const std::filesystem::path& path);

}  // namespace periocular
