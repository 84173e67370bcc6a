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

#include "periocular/feature.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "binary_io.hpp"
#include "periocular/error.hpp"

namespace periocular {

std::string to_string(ExtractorKind kind) {
  switch (kind) {
    case ExtractorKind::lbp: return "lbp";
    case ExtractorKind::hog: return "hog";
    case ExtractorKind::neural: return "neural";
  }
  return "?";
}

ExtractorKind parse_extractor_kind(const std::string& text) {
  if (text == "lbp") return ExtractorKind::lbp;
  if (text == "hog") return ExtractorKind::hog;
  if (text == "neural") return ExtractorKind::neural;
  throw InvalidInput("unknown extractor kind: " + text);
}

void write_feature(std::ostream& os, const FeatureVector& fv) {
  nlohmann::ordered_json header;
  header["extractor"] = to_string(fv.extractor);
  header["layer"] = fv.layer ? nlohmann::ordered_json(*fv.layer) : nlohmann::ordered_json(nullptr);
  header["source"] = fv.source_id;
  os << header.dump() << '\n';
  binio::write_u32(os, static_cast<std::uint32_t>(fv.values.size()));
  for (float v : fv.values) binio::write_f32(os, v);
}

FeatureVector read_feature(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw IoError("missing feature header");
  FeatureVector fv;
  try {
    const auto header = nlohmann::json::parse(line);
    fv.extractor = parse_extractor_kind(header.at("extractor").get<std::string>());
    if (!header.at("layer").is_null()) fv.layer = header.at("layer").get<std::string>();
    fv.source_id = header.at("source").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed feature header: ") + e.what());
  }
  const std::uint32_t n = binio::read_u32(is);
  if (!is) throw IoError("truncated feature length");
  fv.values.resize(n);
  for (float& v : fv.values) v = binio::read_f32(is);
  if (!is) throw IoError("truncated feature data");
  return fv;
}

void save_feature(const FeatureVector& fv, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  write_feature(os, fv);
  if (!os) throw IoError("write failed: " + path.string());
}

FeatureVector load_feature(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path.string());
  return read_feature(is);
}

}  // namespace periocular
