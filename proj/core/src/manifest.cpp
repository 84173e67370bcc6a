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


#include "periocular/manifest.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "csv.hpp"
#include "periocular/error.hpp"

namespace periocular {

namespace {

constexpr std::size_t kRequiredColumns = 11;
constexpr double kMaxMalformedFraction = 0.05;

ManifestRecord parse_record(const std::vector<std::string>& fields, const std::map<std::string, std::size_t>& col) {
  const auto get = [&](const char* name) -> const std::string* {
    const auto it = col.find(name);
    if (it == col.end() || fields[it->second].empty()) return nullptr;
    return &fields[it->second];
  };
  const auto req = [&](const char* name) -> const std::string& {
    const std::string* v = get(name);
    if (!v) throw InvalidInput(std::string("missing value for ") + name);
    return *v;
  };
  ManifestRecord r;
  r.image_path = req("image_path");
  csv::require_plain_field(r.image_path);
  EyeAnnotation& a = r.annotation;
  a.subject_id = req("subject_id");
  a.eye = parse_eye(req("eye"));
  const long session = csv::parse_long(req("session"));
  if (session < 1 || session > 1000000) throw InvalidInput("session must be >= 1");
  a.session = static_cast<int>(session);
  a.distance_m = csv::parse_double(req("distance_m"));
  a.sclera_center = {csv::parse_double(req("sclera_center_x")), csv::parse_double(req("sclera_center_y"))};
  a.sclera_radius = csv::parse_double(req("sclera_radius"));
  a.iris_center = {csv::parse_double(req("iris_center_x")), csv::parse_double(req("iris_center_y"))};
  a.iris_radius = csv::parse_double(req("iris_radius"));
  for (double v : {a.distance_m, a.sclera_center.x, a.sclera_center.y, a.sclera_radius, a.iris_center.x,
                   a.iris_center.y, a.iris_radius})
    if (!std::isfinite(v)) throw InvalidInput("non-finite annotation value");
  if (a.distance_m < 0.0) throw InvalidInput("distance_m must be non-negative");
  a.validate();

  const std::string* px = get("pupil_center_x");
  const std::string* py = get("pupil_center_y");
  const std::string* pr = get("pupil_radius");
  if (px || py || pr) {
    if (!px || !py || !pr) throw InvalidInput("pupil fields must be given together");
    r.pupil_center = Point2{csv::parse_double(*px), csv::parse_double(*py)};
    r.pupil_radius = csv::parse_double(*pr);
    if (!(*r.pupil_radius > 0.0) || !(*r.pupil_radius < a.iris_radius))
      throw InvalidInput("pupil_radius must lie in (0, iris_radius)");
  }
  if (const std::string* o = get("order")) r.order = csv::parse_long(*o);
  return r;
}

}  // namespace

std::filesystem::path Manifest::resolve(const ManifestRecord& record) const {
  const std::filesystem::path p(record.image_path);
  return p.is_absolute() ? p : base_dir / p;
}

std::vector<ProtocolImage> Manifest::protocol_images() const {
  std::vector<ProtocolImage> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back({r.image_path, r.annotation, r.order});
  return out;
}

Manifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir) {
  Manifest m;
  m.base_dir = base_dir;
  std::string line;
  std::size_t line_no = 0;
  std::map<std::string, std::size_t> col;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = csv::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto header = csv::split(t);
    for (std::size_t k = 0; k < header.size(); ++k) {
      if (!col.emplace(header[k], k).second)
        throw DataError("manifest line " + std::to_string(line_no) + ": duplicate column " + header[k]);
    }
    width = header.size();
    break;
  }
  if (col.empty()) throw DataError("manifest has no header line");
  for (std::size_t k = 0; k < kRequiredColumns; ++k)
    if (!col.count(kManifestColumns[k]))
      throw DataError(std::string("manifest header lacks required column ") + kManifestColumns[k]);

  std::set<std::string> seen;
  std::size_t data_lines = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = csv::trim(line);
    if (t.empty() || t.front() == '#') continue;
    ++data_lines;
    const auto fields = csv::split(t);
    try {
      if (fields.size() != width)
        throw InvalidInput("expected " + std::to_string(width) + " fields, found " + std::to_string(fields.size()));
      ManifestRecord r = parse_record(fields, col);
      if (!seen.insert(r.image_path).second) throw InvalidInput("duplicate image_path " + r.image_path);
      m.records.push_back(std::move(r));
    } catch (const InvalidInput& e) {
      m.skipped.push_back({line_no, e.what()});
    }
  }
  if (static_cast<double>(m.skipped.size()) > kMaxMalformedFraction * static_cast<double>(data_lines)) {
    std::ostringstream msg;
    msg << "manifest rejected: " << m.skipped.size() << " of " << data_lines << " records malformed";
    for (const auto& s : m.skipped) msg << "\n  line " << s.line << ": " << s.reason;
    throw DataError(msg.str());
  }
  return m;
}

Manifest ingest_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  return parse_manifest(in, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

void write_manifest(const Manifest& manifest, std::ostream& out) {
  bool pupil = false, order = false;
  for (const auto& r : manifest.records) {
    pupil = pupil || r.pupil_radius.has_value();
    order = order || r.order.has_value();
  }
  out << "image_path,subject_id,eye,session,distance_m,sclera_center_x,sclera_center_y,sclera_radius,"
         "iris_center_x,iris_center_y,iris_radius";
  if (pupil) out << ",pupil_center_x,pupil_center_y,pupil_radius";
  if (order) out << ",order";
  out << '\n';
  for (const auto& r : manifest.records) {
    const EyeAnnotation& a = r.annotation;
    csv::require_plain_field(r.image_path);
    csv::require_plain_field(a.subject_id);
    out << r.image_path << ',' << a.subject_id << ',' << to_string(a.eye) << ',' << a.session << ','
        << format_double(a.distance_m) << ',' << format_double(a.sclera_center.x) << ','
        << format_double(a.sclera_center.y) << ',' << format_double(a.sclera_radius) << ','
        << format_double(a.iris_center.x) << ',' << format_double(a.iris_center.y) << ','
        << format_double(a.iris_radius);
    if (pupil) {
      if (r.pupil_radius)
        out << ',' << format_double(r.pupil_center->x) << ',' << format_double(r.pupil_center->y) << ','
            << format_double(*r.pupil_radius);
      else
        out << ",,,";
    }
    if (order) {
      out << ',';
      if (r.order) out << *r.order;
    }
    out << '\n';
  }
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest " + path.string());
  write_manifest(manifest, out);
  if (!out) throw IoError("failed writing manifest " + path.string());
}

}  // namespace periocular
