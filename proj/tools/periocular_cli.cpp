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


// Command-line front end. Exit codes: 0 success, 1 usage error, 2 data or
// input error, 3 internal error.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "periocular/error.hpp"
#include "periocular/experiment.hpp"
#include "periocular/fusion.hpp"
#include "periocular/model_builder.hpp"
#include "periocular/neural.hpp"
#include "periocular/sift.hpp"
#include "periocular/synth.hpp"

namespace fs = std::filesystem;
using namespace periocular;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

struct Common {
  std::string manifest;
  std::string config;
  std::string out;
  int workers = 1;
  std::vector<std::string> extractors;
  std::vector<std::string> metrics;
  std::vector<std::string> layers;
  std::string model;
};

ExperimentConfig resolve_config(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
  if (!c.extractors.empty()) cfg.extractors = c.extractors;
  if (!c.metrics.empty()) cfg.metrics = c.metrics;
  if (!c.model.empty()) cfg.model = c.model;
  if (!c.out.empty()) cfg.output_dir = c.out;
  if (cfg.output_dir.empty()) throw InvalidInput("no output directory: pass --out or set output_dir");
  return cfg;
}

RunOptions run_options(const Common& c, const ExperimentConfig& cfg) {
  RunOptions o;
  o.workers = c.workers;
  if (cfg.cache_dir == "none")
    o.cache_dir.clear();
  else
    o.cache_dir = cfg.cache_dir.empty() ? fs::path(cfg.output_dir) / "cache" : fs::path(cfg.cache_dir);
  return o;
}

void report_manifest(const Manifest& m) {
  for (const auto& s : m.skipped) std::cerr << "manifest line " << s.line << " skipped: " << s.reason << "\n";
}

Manifest open_manifest(const Common& c) {
  if (c.manifest.empty()) throw InvalidInput("--manifest is required");
  Manifest m = ingest_manifest(c.manifest);
  report_manifest(m);
  return m;
}

std::string image_stem(const std::string& image_id) {
  return file_stem(fs::path(image_id).replace_extension().generic_string());
}

void make_dirs(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw IoError("cannot create " + p.string() + ": " + ec.message());
}

int cmd_synth(int users, int images, long long seed, const std::string& out) {
  SynthParams p;
  p.users = users;
  p.images_per_user = images;
  p.seed = static_cast<std::uint64_t>(seed);
  const Manifest m = generate_synthetic(p, out);
  std::cout << "wrote " << m.records.size() << " images and " << (fs::path(out) / "manifest.csv").string() << "\n";
  return kOk;
}

int cmd_preprocess(const Common& c) {
  const ExperimentConfig cfg = resolve_config(c);
  const Manifest m = open_manifest(c);
  const PreparedSet set = preprocess(m, cfg, run_options(c, cfg));
  const fs::path dir = fs::path(cfg.output_dir) / "roi";
  make_dirs(dir);
  for (const auto& img : set.images) save_png(img.roi.image, dir / (image_stem(img.protocol.image_id) + ".png"));
  for (const auto& f : set.failures) std::cerr << "failed: " << f.image_id << ": " << f.reason << "\n";
  std::cout << "prepared " << set.images.size() << " of " << set.attempted << " images into " << dir.string() << "\n";
  return kOk;
}

int cmd_extract(const Common& c) {
  const ExperimentConfig cfg = resolve_config(c);
  if (c.extractors.size() != 1) throw InvalidInput("extract needs exactly one --extractor");
  const std::string& extractor = c.extractors.front();
  const Manifest m = open_manifest(c);
  const RunOptions opts = run_options(c, cfg);
  const PreparedSet set = preprocess(m, cfg, opts);
  std::optional<NetworkHandle> net;
  if (extractor.rfind("neural:", 0) == 0) net = load_network(cfg.model);
  const FeatureTable table = extract_features(set, extractor, net ? &*net : nullptr, opts);
  const fs::path dir = fs::path(cfg.output_dir) / "features" / file_stem(extractor);
  make_dirs(dir);
  for (std::size_t i = 0; i < set.images.size(); ++i) {
    const std::string stem = image_stem(set.images[i].protocol.image_id);
    if (extractor == "sift")
      save_keypoints(table.keypoints[i], dir / (stem + ".kp"));
    else
      save_feature(table.vectors[i], dir / (stem + ".feat"));
  }
  std::cout << "extracted " << set.images.size() << " feature files into " << dir.string() << "\n";
  return kOk;
}

int cmd_score(const Common& c) {
  const ExperimentConfig cfg = resolve_config(c);
  if (c.extractors.size() != 1) throw InvalidInput("score needs exactly one --extractor");
  const std::string& extractor = c.extractors.front();
  std::string metric = c.metrics.empty() ? cfg.metrics.front() : c.metrics.front();
  if (c.metrics.size() > 1) throw InvalidInput("score takes a single --metric");
  const Manifest m = open_manifest(c);
  const ExperimentResult r = run_experiment(m, cfg, extractor, metric, run_options(c, cfg));
  write_system_outputs(r.scores, r.det, cfg.output_dir);
  std::cout << format_summary_table({summarize(r.scores)});
  return kOk;
}

int cmd_sweep(const Common& c) {
  ExperimentConfig cfg = resolve_config(c);
  if (cfg.model.empty()) throw InvalidInput("sweep needs --model or a config 'model'");
  const Manifest m = open_manifest(c);
  const RunOptions opts = run_options(c, cfg);
  const PreparedSet set = preprocess(m, cfg, opts);
  const NetworkHandle net = load_network(cfg.model);
  std::vector<SweepSample> samples;
  for (const auto& img : set.images) samples.push_back({img.protocol, img.roi.image});
  std::vector<Metric> metrics;
  for (const auto& id : c.metrics.empty() ? cfg.sweep.metrics : c.metrics) metrics.push_back(parse_metric(id));
  SweepOptions so;
  so.layers = c.layers.empty() ? cfg.sweep.layers : c.layers;
  so.workers = c.workers;
  const auto rows = layer_sweep(net, samples, metrics, so);
  make_dirs(cfg.output_dir);
  write_sweep_csv(rows, fs::path(cfg.output_dir) / "sweep.csv");
  std::cout << "layer,metric,eer_percent\n";
  for (const auto& r : rows) std::cout << r.layer << ',' << to_string(r.metric) << ',' << format_double(r.eer_percent) << '\n';
  return kOk;
}

int cmd_fuse(const Common& c, const std::vector<std::string>& score_files) {
  if (score_files.size() < 2) throw InvalidInput("fuse needs at least two --scores files");
  if (c.out.empty()) throw InvalidInput("--out is required");
  const Manifest m = open_manifest(c);
  std::vector<ScoreSet> inputs;
  for (const auto& f : score_files) inputs.push_back(read_scores(f));
  const TrialList trials = build_trials(m.protocol_images());
  const auto folds = folds_by_user_parity(inputs.front(), trials.image_user);
  const TwoFoldResult fused = two_fold_fusion(inputs, folds);
  const DetCurve det = compute_det(fused.fused);
  write_system_outputs(fused.fused, det, c.out);
  make_dirs(fs::path(c.out) / "fusion");
  const std::string stem = file_stem(fused.fused.comparator_id);
  for (int f = 0; f < 2; ++f)
    save_fusion_model(fused.models[f], fs::path(c.out) / "fusion" / (stem + ".fold" + std::to_string(f + 1) + ".json"));
  std::cout << format_summary_table({summarize(fused.fused)});
  return kOk;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out) {
  if (inputs.empty()) throw InvalidInput("report needs --scores (files or directories)");
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(in))
        if (e.is_regular_file() && e.path().extension() == ".csv") found.push_back(e.path());
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.emplace_back(in);
    }
  }
  std::vector<SummaryRow> rows;
  for (const auto& f : files) rows.push_back(summarize(read_scores(f)));
  std::cout << format_summary_table(rows);
  if (!out.empty()) {
    make_dirs(out);
    write_summary_csv(rows, fs::path(out) / "summary.csv");
  }
  return kOk;
}

int cmd_run(const Common& c) {
  const ExperimentConfig cfg = resolve_config(c);
  const Manifest m = open_manifest(c);
  const RunResult r = run(m, cfg, cfg.output_dir, run_options(c, cfg));
  std::cout << format_summary_table(r.summary);
  return kOk;
}

int cmd_toy_model(const std::string& out, long long seed) {
  const std::string bytes = toy_model_bytes(static_cast<std::uint64_t>(seed));
  std::ofstream f(out, std::ios::binary);
  if (!f) throw IoError("cannot write " + out);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("failed writing " + out);
  return kOk;
}

void add_pipeline_flags(CLI::App* sub, Common& c, bool extractor, bool metric, bool layer) {
  sub->add_option("--manifest", c.manifest, "Manifest CSV")->required();
  sub->add_option("--config", c.config, "Experiment config (JSON)");
  sub->add_option("--out", c.out, "Output directory (overrides config output_dir)");
  sub->add_option("--workers", c.workers, "Worker threads")->check(CLI::Range(1, 1024));
  sub->add_option("--model", c.model, "ONNX model (overrides config model)");
  if (extractor) sub->add_option("--extractor", c.extractors, "lbp, hog, sift or neural:<layer>");
  if (metric) sub->add_option("--metric", c.metrics, "euclidean, chi2 or cosine");
  if (layer) sub->add_option("--layer", c.layers, "Restrict the sweep to these layers");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Periocular verification toolkit"};
  app.require_subcommand(1);
  Common c;

  int users = 20, images = 4;
  long long seed = 7;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Render a synthetic annotated dataset");
  synth->add_option("--users", users, "Number of users (eyes)")->check(CLI::Range(2, 100000));
  synth->add_option("--images", images, "Images per user")->check(CLI::Range(2, 10000));
  synth->add_option("--seed", seed, "Random seed");
  synth->add_option("--out", synth_out, "Output directory")->required();

  auto* pre = app.add_subcommand("preprocess", "Normalise, crop, equalise and mask every image");
  add_pipeline_flags(pre, c, false, false, false);
  auto* extract = app.add_subcommand("extract", "Write per-image features for one extractor");
  add_pipeline_flags(extract, c, true, false, false);
  auto* score = app.add_subcommand("score", "Score the verification protocol for one extractor and metric");
  add_pipeline_flags(score, c, true, true, false);
  auto* sweep = app.add_subcommand("sweep", "EER of every network layer under each metric");
  add_pipeline_flags(sweep, c, false, true, true);
  auto* run_cmd = app.add_subcommand("run", "Run every configured experiment, sweep and fusion");
  add_pipeline_flags(run_cmd, c, true, true, false);

  std::vector<std::string> score_files;
  auto* fuse = app.add_subcommand("fuse", "Two-fold logistic-regression fusion of score files");
  fuse->add_option("--manifest", c.manifest, "Manifest CSV (defines users and folds)")->required();
  fuse->add_option("--scores", score_files, "Score CSV files, one per comparator")->required();
  fuse->add_option("--out", c.out, "Output directory")->required();

  std::vector<std::string> report_inputs;
  std::string report_out;
  auto* report = app.add_subcommand("report", "Summary table (system, EER, FRR@FAR=1%) from score files");
  report->add_option("--scores", report_inputs, "Score CSV files or directories")->required();
  report->add_option("--out", report_out, "Directory for summary.csv");

  std::string toy_out;
  long long toy_seed = 7;
  auto* toy = app.add_subcommand("toy-model", "Write the bundled six-layer test network");
  toy->add_option("--out", toy_out, "Output .onnx path")->required();
  toy->add_option("--seed", toy_seed, "Weight seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*synth) return cmd_synth(users, images, seed, synth_out);
    if (*pre) return cmd_preprocess(c);
    if (*extract) return cmd_extract(c);
    if (*score) return cmd_score(c);
    if (*sweep) return cmd_sweep(c);
    if (*run_cmd) return cmd_run(c);
    if (*fuse) return cmd_fuse(c, score_files);
    if (*report) return cmd_report(report_inputs, report_out);
    if (*toy) return cmd_toy_model(toy_out, toy_seed);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kUsage;
}
