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


#include "periocular/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <system_error>

#include <json.hpp>

#include "binary_io.hpp"
#include "csv.hpp"
#include "hash.hpp"
#include "periocular/descriptors.hpp"
#include "periocular/error.hpp"
#include "periocular/parallel.hpp"
#include "periocular/sift.hpp"

namespace periocular {

using nlohmann::json;

namespace {

constexpr double kMaxFailureFraction = 0.05;
constexpr const char* kNeuralPrefix = "neural:";

bool is_neural(const std::string& extractor) { return extractor.rfind(kNeuralPrefix, 0) == 0; }
std::string neural_layer(const std::string& extractor) { return extractor.substr(std::string(kNeuralPrefix).size()); }

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw InvalidInput(where + " must be an object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) throw InvalidInput("unknown key '" + key + "' in " + where);
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  try {
    return it->template get<T>();
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("config key '") + key + "': " + e.what());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

void make_dirs(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

// Cache entries are written to a unique temporary name and renamed into
// place, so concurrent writers of the same key never expose partial files.
template <typename Writer>
void cache_store(const std::filesystem::path& path, std::size_t slot, Writer&& write) {
  make_dirs(path.parent_path());
  const auto tmp = path.string() + ".tmp" + std::to_string(slot);
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write cache entry " + tmp);
    write(out);
    if (!out) throw IoError("failed writing cache entry " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot finalise cache entry " + path.string() + ": " + ec.message());
}

void write_roi(std::ostream& os, const RoiImage& roi) {
  binio::write_u32(os, static_cast<std::uint32_t>(roi.image.width()));
  binio::write_u32(os, static_cast<std::uint32_t>(roi.image.height()));
  binio::write_f64(os, roi.scale_factor);
  binio::write_f64(os, roi.source_center.x);
  binio::write_f64(os, roi.source_center.y);
  for (double v : roi.image.pixels()) binio::write_f64(os, v);
}

std::optional<RoiImage> read_roi(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  const auto w = binio::read_u32(in), h = binio::read_u32(in);
  if (!in || w == 0 || h == 0 || w > 1u << 15 || h > 1u << 15) return std::nullopt;
  RoiImage roi;
  roi.scale_factor = binio::read_f64(in);
  roi.source_center.x = binio::read_f64(in);
  roi.source_center.y = binio::read_f64(in);
  std::vector<double> px(static_cast<std::size_t>(w) * h);
  for (auto& v : px) v = binio::read_f64(in);
  if (!in) return std::nullopt;
  roi.image = GrayImage(static_cast<int>(w), static_cast<int>(h), std::move(px));
  return roi;
}

std::string annotation_text(const EyeAnnotation& a) {
  return a.subject_id + "|" + to_string(a.eye) + "|" + std::to_string(a.session) + "|" + format_double(a.distance_m) +
         "|" + format_double(a.sclera_center.x) + "|" + format_double(a.sclera_center.y) + "|" +
         format_double(a.sclera_radius) + "|" + format_double(a.iris_center.x) + "|" +
         format_double(a.iris_center.y) + "|" + format_double(a.iris_radius);
}

std::string preprocess_params_text(double target, const ClaheParams& c, bool mask) {
  return format_double(target) + "|" + std::to_string(c.tiles_x) + "|" + std::to_string(c.tiles_y) + "|" +
         format_double(c.clip_limit) + "|" + (mask ? "mask" : "nomask");
}

/// Re-raises a toolkit error with the stage name in front of its message,
/// keeping the error category.
template <typename F>
auto in_stage(const std::string& stage, F&& fn) -> decltype(fn()) {
  const auto tag = [&](const std::exception& e) { return "[" + stage + "] " + e.what(); };
  try {
    return fn();
  } catch (const ModelLoadError& e) {
    throw ModelLoadError(tag(e));
  } catch (const DataError& e) {
    throw DataError(tag(e));
  } catch (const IoError& e) {
    throw IoError(tag(e));
  } catch (const InvalidInput& e) {
    throw InvalidInput(tag(e));
  } catch (const InvalidLayer& e) {
    throw InvalidInput(tag(e));
  } catch (const Error& e) {
    throw Error(tag(e));
  }
}

}  // namespace

// ------------------------------------------------------------------ config

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
  return extractors == o.extractors && metrics == o.metrics && target_radius == o.target_radius &&
         clahe.tiles_x == o.clahe.tiles_x && clahe.tiles_y == o.clahe.tiles_y &&
         clahe.clip_limit == o.clahe.clip_limit && mask_iris == o.mask_iris && model == o.model &&
         sweep == o.sweep && fusion == o.fusion && fold_rule == o.fold_rule && output_dir == o.output_dir &&
         cache_dir == o.cache_dir;
}

std::string config_to_json(const ExperimentConfig& c) {
  json radius = json::object();
  for (const auto& [d, r] : c.target_radius) radius[format_double(d)] = r;
  json j = {
      {"extractors", c.extractors},
      {"metrics", c.metrics},
      {"preprocess",
       {{"target_radius", radius},
        {"clahe", {{"tiles_x", c.clahe.tiles_x}, {"tiles_y", c.clahe.tiles_y}, {"clip_limit", c.clahe.clip_limit}}},
        {"mask_iris", c.mask_iris}}},
      {"model", c.model},
      {"sweep", {{"enabled", c.sweep.enabled}, {"metrics", c.sweep.metrics}, {"layers", c.sweep.layers}}},
      {"fusion", {{"groups", c.fusion}, {"fold_rule", c.fold_rule}}},
      {"output_dir", c.output_dir},
      {"cache_dir", c.cache_dir},
  };
  return j.dump(2) + "\n";
}

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, {"extractors", "metrics", "preprocess", "model", "sweep", "fusion", "output_dir", "cache_dir"},
             "config");
  ExperimentConfig c;
  c.extractors = get_or(j, "extractors", c.extractors);
  c.metrics = get_or(j, "metrics", c.metrics);
  c.model = get_or(j, "model", c.model);
  c.output_dir = get_or(j, "output_dir", c.output_dir);
  c.cache_dir = get_or(j, "cache_dir", c.cache_dir);
  if (j.contains("preprocess")) {
    const json& p = j["preprocess"];
    check_keys(p, {"target_radius", "clahe", "mask_iris"}, "preprocess");
    c.mask_iris = get_or(p, "mask_iris", c.mask_iris);
    if (p.contains("target_radius")) {
      if (!p["target_radius"].is_object()) throw InvalidInput("preprocess.target_radius must be an object");
      for (const auto& [key, value] : p["target_radius"].items()) {
        if (!value.is_number()) throw InvalidInput("target_radius values must be numbers");
        c.target_radius[csv::parse_double(key)] = value.get<double>();
      }
    }
    if (p.contains("clahe")) {
      const json& q = p["clahe"];
      check_keys(q, {"tiles_x", "tiles_y", "clip_limit"}, "preprocess.clahe");
      c.clahe.tiles_x = get_or(q, "tiles_x", c.clahe.tiles_x);
      c.clahe.tiles_y = get_or(q, "tiles_y", c.clahe.tiles_y);
      c.clahe.clip_limit = get_or(q, "clip_limit", c.clahe.clip_limit);
    }
  }
  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    check_keys(s, {"enabled", "metrics", "layers"}, "sweep");
    c.sweep.enabled = get_or(s, "enabled", c.sweep.enabled);
    c.sweep.metrics = get_or(s, "metrics", c.sweep.metrics);
    c.sweep.layers = get_or(s, "layers", c.sweep.layers);
  }
  if (j.contains("fusion")) {
    const json& f = j["fusion"];
    check_keys(f, {"groups", "fold_rule"}, "fusion");
    c.fusion = get_or(f, "groups", c.fusion);
    c.fold_rule = get_or(f, "fold_rule", c.fold_rule);
  }
  validate_config(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) { return config_from_json(read_file(path)); }

void save_config(const ExperimentConfig& config, const std::filesystem::path& path) {
  write_text(path, config_to_json(config));
}

std::vector<SystemSpec> systems_of(const ExperimentConfig& config) {
  std::vector<SystemSpec> out;
  for (const auto& ex : config.extractors) {
    if (ex == "sift") {
      out.push_back({"sift", ex, ""});
      continue;
    }
    for (const auto& m : config.metrics)
      out.push_back({config.metrics.size() == 1 ? ex : ex + "/" + m, ex, m});
  }
  return out;
}

std::string file_stem(const std::string& id) {
  std::string s = id;
  for (char& ch : s) {
    const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') || ch == '.' ||
                    ch == '_' || ch == '-';
    if (!ok) ch = '_';
  }
  return s;
}

void validate_config(const ExperimentConfig& c) {
  if (c.extractors.empty()) throw InvalidInput("config lists no extractors");
  bool needs_model = c.sweep.enabled;
  bool needs_metric = false;
  for (const auto& ex : c.extractors) {
    if (ex == "lbp" || ex == "hog") {
      needs_metric = true;
    } else if (ex == "sift") {
    } else if (is_neural(ex)) {
      if (neural_layer(ex).empty()) throw InvalidInput("neural extractor needs a layer: neural:<layer>");
      needs_metric = needs_model = true;
    } else {
      throw InvalidInput("unknown extractor '" + ex + "' (expected lbp, hog, sift or neural:<layer>)");
    }
  }
  if (needs_metric && c.metrics.empty()) throw InvalidInput("config lists no metrics");
  for (const auto& m : c.metrics) parse_metric(m);
  if (c.sweep.enabled) {
    if (c.sweep.metrics.empty()) throw InvalidInput("sweep lists no metrics");
    for (const auto& m : c.sweep.metrics) parse_metric(m);
  }
  if (needs_model && c.model.empty()) throw InvalidInput("neural extractors and the layer sweep need 'model'");
  for (const auto& [d, r] : c.target_radius)
    if (!std::isfinite(d) || !(r > 0.0) || !std::isfinite(r))
      throw InvalidInput("target_radius entries must be finite and positive");
  if (c.clahe.tiles_x < 1 || c.clahe.tiles_y < 1) throw InvalidInput("CLAHE needs at least one tile per axis");
  if (!(c.clahe.clip_limit > 0.0 && c.clahe.clip_limit <= 1.0)) throw InvalidInput("CLAHE clip_limit must be in (0,1]");
  if (c.fold_rule != "user_parity") throw InvalidInput("unknown fold rule '" + c.fold_rule + "'");

  std::set<std::string> ids, stems;
  for (const auto& s : systems_of(c)) {
    if (!ids.insert(s.id).second) throw InvalidInput("system '" + s.id + "' is configured twice");
    if (!stems.insert(file_stem(s.id)).second) throw InvalidInput("system ids collide as file names: " + s.id);
  }
  for (const auto& group : c.fusion) {
    if (group.size() < 2) throw InvalidInput("a fusion group needs at least two systems");
    std::set<std::string> seen;
    std::string fused = "fusion:";
    for (const auto& id : group) {
      if (!ids.count(id)) throw InvalidInput("fusion refers to unknown system '" + id + "'");
      if (!seen.insert(id).second) throw InvalidInput("fusion group repeats system '" + id + "'");
      fused += (seen.size() > 1 ? "+" : "") + id;
    }
    if (!stems.insert(file_stem(fused)).second) throw InvalidInput("fusion group configured twice: " + fused);
  }
}

// ---------------------------------------------------------------- pipeline

std::vector<ProtocolImage> PreparedSet::protocol_images() const {
  std::vector<ProtocolImage> out;
  out.reserve(images.size());
  for (const auto& im : images) out.push_back(im.protocol);
  return out;
}

PreparedSet preprocess(const Manifest& manifest, const ExperimentConfig& config, const RunOptions& options) {
  PreparedSet set;
  set.attempted = manifest.records.size();
  if (manifest.records.empty()) throw InvalidInput("manifest has no usable records");

  std::map<double, std::pair<double, std::size_t>> sums;
  for (const auto& r : manifest.records) {
    auto& s = sums[r.annotation.distance_m];
    s.first += r.annotation.sclera_radius;
    ++s.second;
  }
  for (const auto& [d, s] : sums) {
    const auto it = config.target_radius.find(d);
    set.target_radius[d] = it != config.target_radius.end() ? it->second : s.first / static_cast<double>(s.second);
  }

  struct Slot {
    std::optional<PreparedImage> image;
    std::string error;
  };
  std::vector<Slot> slots(manifest.records.size());
  parallel_for(slots.size(), options.workers, [&](std::size_t i) {
    const ManifestRecord& r = manifest.records[i];
    try {
      const auto path = manifest.resolve(r);
      const double target = set.target_radius.at(r.annotation.distance_m);
      Sha256 key;
      key.field("roi-v1")
          .field(sha256_file(path))
          .field(annotation_text(r.annotation))
          .field(preprocess_params_text(target, config.clahe, config.mask_iris));
      PreparedImage img;
      img.protocol = {r.image_path, r.annotation, r.order};
      img.roi_key = key.digest();
      const auto cache_path =
          options.cache_dir.empty() ? std::filesystem::path() : options.cache_dir / "roi" / (img.roi_key + ".roi");
      std::optional<RoiImage> cached;
      if (!cache_path.empty()) cached = read_roi(cache_path);
      if (cached) {
        img.roi = std::move(*cached);
      } else {
        RoiImage roi = normalize_and_crop(load_gray(path), r.annotation, target);
        roi.image = clahe(roi.image, config.clahe);
        if (config.mask_iris) roi = mask_iris(roi, r.annotation);
        if (!cache_path.empty()) cache_store(cache_path, i, [&](std::ostream& os) { write_roi(os, roi); });
        img.roi = std::move(roi);
      }
      slots[i].image = std::move(img);
    } catch (const InvalidInput& e) {
      slots[i].error = e.what();
    } catch (const IoError& e) {
      slots[i].error = e.what();
    }
  });
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].image)
      set.images.push_back(std::move(*slots[i].image));
    else
      set.failures.push_back({manifest.records[i].image_path, slots[i].error});
  }
  if (static_cast<double>(set.failures.size()) > kMaxFailureFraction * static_cast<double>(set.attempted)) {
    std::ostringstream msg;
    msg << set.failures.size() << " of " << set.attempted << " images failed preprocessing";
    for (const auto& f : set.failures) msg << "\n  " << f.image_id << ": " << f.reason;
    throw DataError(msg.str());
  }
  return set;
}

FeatureTable extract_features(const PreparedSet& prepared, const std::string& extractor,
                              const NetworkHandle* model, const RunOptions& options) {
  FeatureTable table;
  table.extractor = extractor;
  const std::size_t n = prepared.images.size();
  for (std::size_t i = 0; i < n; ++i) table.index[prepared.images[i].protocol.image_id] = i;
  const bool cache = !options.cache_dir.empty();
  const auto entry = [&](const std::string& key, const char* ext) {
    return options.cache_dir / "features" / (key + ext);
  };

  if (extractor == "sift") {
    table.keypoints.resize(n);
    parallel_for(n, options.workers, [&](std::size_t i) {
      const std::string key = Sha256().field("sift-v1").field(prepared.images[i].roi_key).digest();
      if (cache) {
        const auto path = entry(key, ".kp");
        if (std::filesystem::exists(path)) {
          table.keypoints[i] = load_keypoints(path);
          return;
        }
        table.keypoints[i] = detect_keypoints(prepared.images[i].roi.image);
        cache_store(path, i, [&](std::ostream& os) { write_keypoints(os, table.keypoints[i]); });
      } else {
        table.keypoints[i] = detect_keypoints(prepared.images[i].roi.image);
      }
    });
    return table;
  }

  table.vectors.resize(n);
  if (extractor == "lbp" || extractor == "hog") {
    const bool lbp = extractor == "lbp";
    parallel_for(n, options.workers, [&](std::size_t i) {
      const PreparedImage& img = prepared.images[i];
      const std::string key = Sha256().field("classic-v1").field(extractor).field(img.roi_key).digest();
      const auto path = cache ? entry(key, ".feat") : std::filesystem::path();
      if (cache && std::filesystem::exists(path)) {
        table.vectors[i] = load_feature(path);
      } else {
        table.vectors[i] = lbp ? lbp_descriptor(img.roi.image) : hog_descriptor(img.roi.image);
        if (cache) cache_store(path, i, [&](std::ostream& os) { write_feature(os, table.vectors[i]); });
      }
      table.vectors[i].source_id = img.protocol.image_id;
    });
    return table;
  }

  if (!is_neural(extractor)) throw InvalidInput("unknown extractor '" + extractor + "'");
  if (model == nullptr) throw InvalidInput("extractor " + extractor + " needs a model");
  const std::string layer = neural_layer(extractor);
  if (!model->has_layer(layer)) throw InvalidLayer(layer);

  std::vector<GrayImage> rois;
  rois.reserve(n);
  for (const auto& img : prepared.images) rois.push_back(img.roi.image);
  const MeanSubtracted inputs = prepare_network_inputs(*model, rois);
  Sha256 mean_hash;
  for (double v : inputs.mean.pixels()) mean_hash.update(format_double(v)).update(",");
  const std::string mean_key = mean_hash.digest();

  parallel_for(n, options.workers, [&](std::size_t i) {
    const PreparedImage& img = prepared.images[i];
    const std::string key =
        Sha256().field("neural-v1").field(model->digest()).field(layer).field(img.roi_key).field(mean_key).digest();
    const auto path = cache ? entry(key, ".feat") : std::filesystem::path();
    if (cache && std::filesystem::exists(path)) {
      table.vectors[i] = load_feature(path);
    } else {
      LayerActivation act = extract_activation(*model, inputs.residuals[i], layer);
      FeatureVector fv;
      fv.values = std::move(act.values);
      fv.extractor = ExtractorKind::neural;
      fv.layer = layer;
      table.vectors[i] = std::move(fv);
      if (cache) cache_store(path, i, [&](std::ostream& os) { write_feature(os, table.vectors[i]); });
    }
    table.vectors[i].source_id = img.protocol.image_id;
  });
  return table;
}

ScoreSet score_features(const FeatureTable& features, const TrialList& trials, const std::string& metric,
                        const std::string& comparator_id, const RunOptions& options) {
  if (features.extractor == "sift") {
    return score_trials(
        trials,
        [&](const std::string& a, const std::string& b) {
          return static_cast<double>(
              match_constrained(features.keypoints.at(features.index.at(a)), features.keypoints.at(features.index.at(b)))
                  .score);
        },
        comparator_id, options.workers);
  }
  const Metric m = parse_metric(metric);
  // chi2 needs non-negative input; signed (network) features are shifted by
  // their dataset-wide minimum.
  float min_value = 0.0f;
  if (m == Metric::chi2)
    for (const auto& fv : features.vectors)
      for (float v : fv.values) min_value = std::min(min_value, v);
  std::vector<std::vector<float>> shifted;
  if (min_value < 0.0f) {
    shifted.reserve(features.vectors.size());
    for (const auto& fv : features.vectors) {
      shifted.push_back(fv.values);
      for (float& v : shifted.back()) v -= min_value;
    }
  }
  const auto view = [&](const std::string& id) -> std::span<const float> {
    const std::size_t i = features.index.at(id);
    return shifted.empty() ? features.vectors[i].view() : std::span<const float>(shifted[i]);
  };
  return score_trials(
      trials, [&](const std::string& a, const std::string& b) { return similarity(m, view(a), view(b)); },
      comparator_id, options.workers);
}

namespace {

TrialList protocol_trials(const PreparedSet& prepared) {
  TrialList trials = build_trials(prepared.protocol_images());
  if (trials.users.size() < 2)
    throw InvalidInput("the protocol needs at least 2 users with at least 2 usable images each");
  return trials;
}

std::optional<NetworkHandle> load_model_if(bool needed, const std::string& path) {
  if (!needed) return std::nullopt;
  return load_network(path);
}

}  // namespace

ExperimentResult run_experiment(const Manifest& manifest, const ExperimentConfig& config,
                                const std::string& extractor, const std::string& metric,
                                const RunOptions& options) {
  ExperimentResult result;
  result.prepared = in_stage("preprocess", [&] { return preprocess(manifest, config, options); });
  result.trials = in_stage("protocol", [&] { return protocol_trials(result.prepared); });
  const auto model = in_stage("model", [&] { return load_model_if(is_neural(extractor), config.model); });
  const FeatureTable features = in_stage("extract " + extractor, [&] {
    return extract_features(result.prepared, extractor, model ? &*model : nullptr, options);
  });
  const std::string id = extractor == "sift" ? extractor : extractor + "/" + metric;
  result.scores = in_stage("score " + id, [&] { return score_features(features, result.trials, metric, id, options); });
  result.det = compute_det(result.scores);
  return result;
}

// ----------------------------------------------------------------- reports

SummaryRow summarize(const ScoreSet& scores) {
  const DetCurve det = compute_det(scores);
  return {scores.comparator_id, 100.0 * det.eer, 100.0 * det.frr_at(kDefaultFarTarget)};
}

void write_summary_csv(const std::vector<SummaryRow>& rows, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "system,eer_percent,frr_at_far_1pct_percent\n";
  for (const auto& r : rows) {
    csv::require_plain_field(r.system);
    out << r.system << ',' << format_double(r.eer_percent) << ',' << format_double(r.frr_at_far_1pct_percent) << '\n';
  }
  write_text(path, out.str());
}

std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || csv::trim(line) != "system,eer_percent,frr_at_far_1pct_percent")
    throw DataError("unexpected summary header in " + path.string());
  std::vector<SummaryRow> rows;
  while (std::getline(in, line)) {
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != 3) throw DataError("malformed summary line in " + path.string());
    rows.push_back({f[0], csv::parse_double(f[1]), csv::parse_double(f[2])});
  }
  return rows;
}

std::string format_summary_table(const std::vector<SummaryRow>& rows) {
  std::size_t width = 6;
  for (const auto& r : rows) width = std::max(width, r.system.size());
  std::ostringstream out;
  char buf[64];
  out << "System" << std::string(width - 6, ' ') << "  EER (%)  FRR@FAR=1% (%)\n";
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "  %7.2f  %14.2f", r.eer_percent, r.frr_at_far_1pct_percent);
    out << r.system << std::string(width - r.system.size(), ' ') << buf << '\n';
  }
  return out.str();
}

void write_system_outputs(const ScoreSet& scores, const DetCurve& det, const std::filesystem::path& out_dir) {
  const std::string stem = file_stem(scores.comparator_id);
  make_dirs(out_dir / "scores");
  make_dirs(out_dir / "det");
  write_scores(scores, out_dir / "scores" / (stem + ".csv"));
  write_det_csv(det, out_dir / "det" / (stem + ".csv"));
  write_det_summary(det, out_dir / "det" / (stem + ".json"));
}

namespace {

std::string run_report(const Manifest& manifest, const PreparedSet& prepared, const TrialList& trials) {
  std::ostringstream out;
  out << "manifest records: " << manifest.records.size() << "\n";
  out << "manifest lines skipped: " << manifest.skipped.size() << "\n";
  for (const auto& s : manifest.skipped) out << "  line " << s.line << ": " << s.reason << "\n";
  out << "images prepared: " << prepared.images.size() << " of " << prepared.attempted << "\n";
  out << "images failed: " << prepared.failures.size() << "\n";
  for (const auto& f : prepared.failures) out << "  " << f.image_id << ": " << f.reason << "\n";
  out << "target sclera radius by distance:\n";
  for (const auto& [d, r] : prepared.target_radius)
    out << "  " << format_double(d) << " m: " << format_double(r) << " px\n";
  out << "users: " << trials.users.size() << "\n";
  out << "users skipped (fewer than 2 images): " << trials.skipped_users.size() << "\n";
  for (const auto& u : trials.skipped_users) out << "  " << u << "\n";
  out << "genuine trials: " << trials.genuine.size() << "\n";
  out << "impostor trials: " << trials.impostor.size() << "\n";
  return out.str();
}

}  // namespace

RunResult run(const Manifest& manifest, const ExperimentConfig& config, const std::filesystem::path& out_dir,
              const RunOptions& options) {
  in_stage("config", [&] { validate_config(config); });
  make_dirs(out_dir);
  RunResult result;

  const PreparedSet prepared = in_stage("preprocess", [&] { return preprocess(manifest, config, options); });
  const TrialList trials = in_stage("protocol", [&] { return protocol_trials(prepared); });

  bool needs_model = config.sweep.enabled;
  for (const auto& ex : config.extractors) needs_model = needs_model || is_neural(ex);
  const auto model = in_stage("model", [&] { return load_model_if(needs_model, config.model); });

  std::map<std::string, FeatureTable> tables;
  std::map<std::string, ScoreSet> score_sets;
  for (const SystemSpec& sys : systems_of(config)) {
    auto it = tables.find(sys.extractor);
    if (it == tables.end()) {
      FeatureTable t = in_stage("extract " + sys.extractor, [&] {
        return extract_features(prepared, sys.extractor, model ? &*model : nullptr, options);
      });
      it = tables.emplace(sys.extractor, std::move(t)).first;
    }
    ScoreSet scores =
        in_stage("score " + sys.id, [&] { return score_features(it->second, trials, sys.metric, sys.id, options); });
    const DetCurve det = in_stage("evaluate " + sys.id, [&] { return compute_det(scores); });
    in_stage("write " + sys.id, [&] { write_system_outputs(scores, det, out_dir); });
    result.summary.push_back({sys.id, 100.0 * det.eer, 100.0 * det.frr_at(kDefaultFarTarget)});
    score_sets.emplace(sys.id, std::move(scores));
  }
  tables.clear();

  if (config.sweep.enabled) {
    result.sweep = in_stage("sweep", [&] {
      std::vector<SweepSample> samples;
      samples.reserve(prepared.images.size());
      for (const auto& img : prepared.images) samples.push_back({img.protocol, img.roi.image});
      std::vector<Metric> metrics;
      for (const auto& m : config.sweep.metrics) metrics.push_back(parse_metric(m));
      SweepOptions so;
      so.layers = config.sweep.layers;
      so.workers = options.workers;
      auto rows = layer_sweep(*model, samples, metrics, so);
      write_sweep_csv(rows, out_dir / "sweep.csv");
      return rows;
    });
  }

  for (const auto& group : config.fusion) {
    std::vector<ScoreSet> inputs;
    for (const auto& id : group) inputs.push_back(score_sets.at(id));
    std::string fused_id = "fusion:";
    for (std::size_t k = 0; k < group.size(); ++k) fused_id += (k ? "+" : "") + group[k];
    in_stage(fused_id, [&] {
      const auto folds = folds_by_user_parity(inputs.front(), trials.image_user);
      TwoFoldResult fused = two_fold_fusion(inputs, folds);
      const DetCurve det = compute_det(fused.fused);
      write_system_outputs(fused.fused, det, out_dir);
      make_dirs(out_dir / "fusion");
      for (int f = 0; f < 2; ++f)
        save_fusion_model(fused.models[f],
                          out_dir / "fusion" / (file_stem(fused_id) + ".fold" + std::to_string(f + 1) + ".json"));
      result.summary.push_back({fused.fused.comparator_id, 100.0 * det.eer, 100.0 * det.frr_at(kDefaultFarTarget)});
    });
  }

  in_stage("report", [&] {
    write_summary_csv(result.summary, out_dir / "summary.csv");
    write_text(out_dir / "run_report.txt", run_report(manifest, prepared, trials));
    ExperimentConfig recorded = config;
    recorded.output_dir.clear();
    recorded.cache_dir.clear();
    write_text(out_dir / "config.json", config_to_json(recorded));
  });
  return result;
}

}  // namespace periocular
