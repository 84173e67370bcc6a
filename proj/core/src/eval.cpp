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

#include "periocular/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "csv.hpp"
#include "periocular/error.hpp"
#include "periocular/parallel.hpp"

namespace periocular {

std::string to_string(Label label) { return label == Label::genuine ? "genuine" : "impostor"; }

Label parse_label(const std::string& text) {
  if (text == "genuine") return Label::genuine;
  if (text == "impostor") return Label::impostor;
  throw InvalidInput("unknown trial label: " + text);
}

std::string user_key(const EyeAnnotation& ann) {
  return ann.subject_id + "_" + to_string(ann.eye);
}

TrialList build_trials(const std::vector<ProtocolImage>& images) {
  std::map<std::string, std::vector<const ProtocolImage*>> by_user;
  std::set<std::string> seen;
  for (const auto& img : images) {
    if (!seen.insert(img.image_id).second)
      throw InvalidInput("duplicate image id in protocol: " + img.image_id);
    by_user[user_key(img.annotation)].push_back(&img);
  }

  TrialList out;
  std::vector<std::vector<const ProtocolImage*>> ordered;
  for (auto& [key, imgs] : by_user) {
    if (imgs.size() < 2) {
      out.skipped_users.push_back(key);
      continue;
    }
    std::sort(imgs.begin(), imgs.end(), [](const ProtocolImage* a, const ProtocolImage* b) {
      constexpr long kNoOrder = std::numeric_limits<long>::max();
      return std::tuple(a->order.value_or(kNoOrder), a->annotation.session,
                        a->annotation.distance_m, a->image_id) <
             std::tuple(b->order.value_or(kNoOrder), b->annotation.session,
                        b->annotation.distance_m, b->image_id);
    });
    const std::size_t index = out.users.size();
    out.users.push_back(key);
    for (const auto* img : imgs) out.image_user[img->image_id] = index;
    ordered.push_back(imgs);
  }

  for (const auto& imgs : ordered)
    for (std::size_t i = 0; i < imgs.size(); ++i)
      for (std::size_t j = i + 1; j < imgs.size(); ++j)
        out.genuine.push_back({imgs[i]->image_id, imgs[j]->image_id});

  for (std::size_t u = 0; u < ordered.size(); ++u)
    for (std::size_t v = 0; v < ordered.size(); ++v)
      if (u != v) out.impostor.push_back({ordered[u][0]->image_id, ordered[v][1]->image_id});

  return out;
}

std::vector<double> ScoreSet::scores_for(Label label) const {
  std::vector<double> out;
  for (const auto& e : entries)
    if (e.label == label) out.push_back(e.score);
  return out;
}

double DetCurve::frr_at(double far_target) const {
  double best = 1.0;
  for (const auto& p : points)
    if (p.far <= far_target) best = std::min(best, p.frr);
  return best;
}

DetCurve compute_det(std::span<const double> genuine, std::span<const double> impostor,
                     std::span<const double> far_targets) {
  if (genuine.empty() || impostor.empty())
    throw InvalidInput("DET needs both genuine and impostor scores");
  for (double s : genuine)
    if (!std::isfinite(s)) throw InvalidInput("non-finite genuine score");
  for (double s : impostor)
    if (!std::isfinite(s)) throw InvalidInput("non-finite impostor score");

  std::vector<double> gen(genuine.begin(), genuine.end());
  std::vector<double> imp(impostor.begin(), impostor.end());
  std::sort(gen.begin(), gen.end());
  std::sort(imp.begin(), imp.end());

  std::vector<double> thresholds;
  thresholds.reserve(gen.size() + imp.size());
  std::merge(gen.begin(), gen.end(), imp.begin(), imp.end(), std::back_inserter(thresholds));
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  const double ng = static_cast<double>(gen.size());
  const double ni = static_cast<double>(imp.size());
  constexpr double inf = std::numeric_limits<double>::infinity();

  DetCurve det;
  det.genuine_count = gen.size();
  det.impostor_count = imp.size();
  det.points.reserve(thresholds.size() + 2);
  det.points.push_back({-inf, 1.0, 0.0});
  std::size_t g_below = 0, i_below = 0;
  for (double t : thresholds) {
    while (g_below < gen.size() && gen[g_below] < t) ++g_below;
    while (i_below < imp.size() && imp[i_below] < t) ++i_below;
    det.points.push_back({t, (ni - static_cast<double>(i_below)) / ni, static_cast<double>(g_below) / ng});
  }
  det.points.push_back({inf, 0.0, 1.0});

  for (std::size_t k = 0; k + 1 < det.points.size(); ++k) {
    const DetPoint& a = det.points[k];
    const DetPoint& b = det.points[k + 1];
    const double da = a.far - a.frr;
    const double db = b.far - b.frr;
    if (db > 0.0) continue;
    if (db == 0.0) {
      det.eer = b.far;
    } else {
      const double alpha = da / (da - db);
      det.eer = a.far + alpha * (b.far - a.far);
    }
    break;
  }

  for (double target : far_targets) det.frr_at_far[target] = det.frr_at(target);
  return det;
}

DetCurve compute_det(const ScoreSet& scores, std::span<const double> far_targets) {
  const auto gen = scores.scores_for(Label::genuine);
  const auto imp = scores.scores_for(Label::impostor);
  return compute_det(gen, imp, far_targets);
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_scores(const ScoreSet& scores, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  csv::require_plain_field(scores.comparator_id);
  os << "enrol_id,probe_id,label,score,comparator\n";
  for (const auto& e : scores.entries) {
    csv::require_plain_field(e.enrol_id);
    csv::require_plain_field(e.probe_id);
    os << e.enrol_id << ',' << e.probe_id << ',' << to_string(e.label) << ','
       << format_double(e.score) << ',' << scores.comparator_id << '\n';
  }
  if (!os) throw IoError("write failed: " + path.string());
}

ScoreSet read_scores(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path.string());
  std::string line;
  if (!std::getline(is, line) || csv::trim(line) != "enrol_id,probe_id,label,score,comparator")
    throw DataError("unexpected score-file header in " + path.string());
  ScoreSet set;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split(csv::trim(line));
    if (f.size() != 5) throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected 5 fields");
    ScoreEntry e;
    e.enrol_id = f[0];
    e.probe_id = f[1];
    try {
      e.label = parse_label(f[2]);
      e.score = csv::parse_double(f[3]);
    } catch (const Error& err) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + err.what());
    }
    if (set.entries.empty()) set.comparator_id = f[4];
    else if (f[4] != set.comparator_id)
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": mixed comparators");
    set.entries.push_back(std::move(e));
  }
  return set;
}

void write_det_csv(const DetCurve& det, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os << "threshold,far,frr\n";
  for (const auto& p : det.points)
    os << format_double(p.threshold) << ',' << format_double(p.far) << ',' << format_double(p.frr) << '\n';
  if (!os) throw IoError("write failed: " + path.string());
}

void write_det_summary(const DetCurve& det, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["eer"] = det.eer;
  j["frr_at_far_1pct"] = det.frr_at(0.01);
  j["genuine"] = det.genuine_count;
  j["impostor"] = det.impostor_count;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os << j.dump(2) << '\n';
}

ScoreSet score_trials(const TrialList& trials, const PairScorer& scorer, const std::string& comparator_id,
                      int workers) {
  ScoreSet out;
  out.comparator_id = comparator_id;
  const std::size_t ng = trials.genuine.size();
  out.entries.resize(ng + trials.impostor.size());
  parallel_for(out.entries.size(), workers, [&](std::size_t k) {
    const bool genuine = k < ng;
    const Trial& t = genuine ? trials.genuine[k] : trials.impostor[k - ng];
    const double s = scorer(t.enrol_id, t.probe_id);
    if (!std::isfinite(s)) throw InvalidInput("non-finite score for trial " + t.enrol_id + " / " + t.probe_id);
    out.entries[k] = {t.enrol_id, t.probe_id, genuine ? Label::genuine : Label::impostor, s};
  });
  return out;
}

}  // namespace periocular
