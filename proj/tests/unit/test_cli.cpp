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


// Manifest ingestion, synthetic data, configuration, the end-to-end runner
// and the command-line binary.
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sys/wait.h>
#include <sstream>

#include "periocular/error.hpp"
#include "periocular/experiment.hpp"
#include "periocular/manifest.hpp"
#include "periocular/model_builder.hpp"
#include "periocular/synth.hpp"
#include "test_util.hpp"

namespace {

using namespace periocular;
namespace fs = std::filesystem;

const char* kHeader =
    "image_path,subject_id,eye,session,distance_m,sclera_center_x,sclera_center_y,sclera_radius,"
    "iris_center_x,iris_center_y,iris_radius\n";

std::string record(int i, double sclera_radius = 26.0) {
  std::ostringstream os;
  os << "img/" << i << ".png,s" << i / 4 << "," << (i % 2 ? "right" : "left") << "," << 1 + i % 2 << ",4,100,90,"
     << sclera_radius << ",101,91,10\n";
  return os.str();
}

std::string manifest_text(int records, const std::vector<int>& bad) {
  std::string s = kHeader;
  for (int i = 0; i < records; ++i)
    s += std::find(bad.begin(), bad.end(), i) != bad.end() ? record(i, 0.0) : record(i);
  return s;
}

// ------------------------------------------------------------------ manifest

TEST(Manifest, WellFormedRecordsAreIngested) {
  std::istringstream in(manifest_text(4, {}));
  const Manifest m = parse_manifest(in, "/data/set");
  ASSERT_EQ(m.records.size(), 4u);
  EXPECT_TRUE(m.skipped.empty());
  EXPECT_EQ(m.records[1].annotation.eye, Eye::right);
  EXPECT_EQ(m.records[1].annotation.session, 2);
  EXPECT_EQ(m.records[0].annotation.sclera_radius, 26.0);
  EXPECT_EQ(m.resolve(m.records[0]), fs::path("/data/set/img/0.png"));
  EXPECT_EQ(m.protocol_images()[2].image_id, "img/2.png");
}

TEST(Manifest, InvalidRadiusRecordIsSkippedAndReported) {
  std::istringstream in(manifest_text(30, {7}));
  const Manifest m = parse_manifest(in, ".");
  EXPECT_EQ(m.records.size(), 29u);
  ASSERT_EQ(m.skipped.size(), 1u);
  EXPECT_EQ(m.skipped[0].line, 9u);  // header is line 1, record 0 line 2
}

TEST(Manifest, TooManyMalformedLinesAbortWithLineNumbers) {
  std::istringstream in(manifest_text(30, {3, 10, 20}));
  try {
    parse_manifest(in, ".");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    for (const char* line : {"5", "12", "22"}) EXPECT_NE(msg.find(line), std::string::npos) << msg;
  }
}

TEST(Manifest, HeaderRequirementsAndCommentLines) {
  std::istringstream missing("image_path,subject_id,eye\nimg/a.png,s0,left\n");
  EXPECT_THROW(parse_manifest(missing, "."), DataError);
  std::istringstream empty("");
  EXPECT_THROW(parse_manifest(empty, "."), DataError);
  std::istringstream commented(std::string("# comment\n\n") + kHeader + "# another\n" + record(0) + "\n" + record(1));
  EXPECT_EQ(parse_manifest(commented, ".").records.size(), 2u);
}

TEST(Manifest, DuplicatePathAndPupilRulesAreMalformed) {
  std::string text = manifest_text(40, {});
  text += record(3);  // duplicate path
  std::istringstream in(text);
  const Manifest m = parse_manifest(in, ".");
  EXPECT_EQ(m.records.size(), 40u);
  EXPECT_EQ(m.skipped.size(), 1u);

  std::string pupil = "image_path,subject_id,eye,session,distance_m,sclera_center_x,sclera_center_y,sclera_radius,"
                      "iris_center_x,iris_center_y,iris_radius,pupil_center_x,pupil_center_y,pupil_radius\n";
  for (int i = 0; i < 25; ++i) pupil += "p" + std::to_string(i) + ".png,s,left,1,4,50,50,20,50,50,8,50,50,3\n";
  pupil += "bad.png,s,left,1,4,50,50,20,50,50,8,50,50,9\n";
  std::istringstream pin(pupil);
  const Manifest pm = parse_manifest(pin, ".");
  EXPECT_EQ(pm.records.size(), 25u);
  ASSERT_TRUE(pm.records[0].pupil_radius.has_value());
  EXPECT_EQ(*pm.records[0].pupil_radius, 3.0);
}

TEST(Manifest, TwoSessionsOfManyUsersFormTheFullProtocol) {
  std::string text = kHeader;
  for (int u = 0; u < 172; ++u)
    for (int session = 1; session <= 2; ++session)
      text += "u" + std::to_string(u) + "_" + std::to_string(session) + ".png,s" + std::to_string(u / 2) + "," +
              (u % 2 ? "right" : "left") + "," + std::to_string(session) + ",4,100,90,26,101,91,10\n";
  std::istringstream in(text);
  const Manifest m = parse_manifest(in, ".");
  ASSERT_EQ(m.records.size(), 344u);
  const TrialList t = build_trials(m.protocol_images());
  EXPECT_EQ(t.users.size(), 172u);
  EXPECT_EQ(t.genuine.size(), 172u);
  EXPECT_EQ(t.impostor.size(), 29412u);
  for (const auto& g : t.genuine) {
    EXPECT_NE(g.enrol_id.find("_1.png"), std::string::npos);
    EXPECT_NE(g.probe_id.find("_2.png"), std::string::npos);
  }
}

TEST(Manifest, WriteThenParseRoundTrips) {
  std::istringstream in(manifest_text(6, {}));
  Manifest m = parse_manifest(in, ".");
  m.records[2].order = 5;
  m.records[2].annotation.sclera_center.x = 100.123456789012345;
  std::ostringstream out;
  write_manifest(m, out);
  std::istringstream back_in(out.str());
  const Manifest back = parse_manifest(back_in, ".");
  ASSERT_EQ(back.records.size(), m.records.size());
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    EXPECT_EQ(back.records[i].image_path, m.records[i].image_path);
    EXPECT_EQ(back.records[i].annotation.sclera_center.x, m.records[i].annotation.sclera_center.x);
    EXPECT_EQ(back.records[i].order, m.records[i].order);
  }
}

TEST(Manifest, IngestResolvesAgainstManifestDirectory) {
  testutil::TempDir dir("manifest");
  fs::create_directories(dir / "nested");
  testutil::write_file(dir / "nested" / "m.csv", manifest_text(2, {}));
  const Manifest m = ingest_manifest(dir / "nested" / "m.csv");
  EXPECT_EQ(m.resolve(m.records[0]), dir / "nested" / "img/0.png");
  EXPECT_THROW(ingest_manifest(dir / "nope.csv"), IoError);
}

// ------------------------------------------------------------------- synth

// Strongest radial edge along `angle` from `c`, searched in [lo, hi].
std::optional<Point2> radial_edge(const GrayImage& img, Point2 c, double angle, double lo, double hi) {
  const auto at = [&](double x, double y) {
    const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0, fy = y - y0;
    return (1 - fy) * ((1 - fx) * img.clamped(x0, y0) + fx * img.clamped(x0 + 1, y0)) +
           fy * ((1 - fx) * img.clamped(x0, y0 + 1) + fx * img.clamped(x0 + 1, y0 + 1));
  };
  double best = 0, best_r = 0;
  const double step = 0.05;
  for (double r = lo; r <= hi; r += step) {
    const double inner = at(c.x + (r - 1) * std::cos(angle), c.y + (r - 1) * std::sin(angle));
    const double outer = at(c.x + (r + 1) * std::cos(angle), c.y + (r + 1) * std::sin(angle));
    if (std::fabs(inner - outer) > best) best = std::fabs(inner - outer), best_r = r;
  }
  if (best < 0.15) return std::nullopt;
  return Point2{c.x + best_r * std::cos(angle), c.y + best_r * std::sin(angle)};
}

// Algebraic least-squares circle through the points: returns (cx, cy, r).
std::array<double, 3> fit_circle(const std::vector<Point2>& pts) {
  double sxx = 0, sxy = 0, syy = 0, sx = 0, sy = 0, sxz = 0, syz = 0, sz = 0, n = pts.size();
  for (const auto& p : pts) {
    const double z = p.x * p.x + p.y * p.y;
    sxx += p.x * p.x, sxy += p.x * p.y, syy += p.y * p.y, sx += p.x, sy += p.y;
    sxz += p.x * z, syz += p.y * z, sz += z;
  }
  // Solve [sxx sxy sx; sxy syy sy; sx sy n] [a b c] = [sxz syz sz] for x^2+y^2 = a x + b y + c.
  double m[3][4] = {{sxx, sxy, sx, sxz}, {sxy, syy, sy, syz}, {sx, sy, n, sz}};
  for (int i = 0; i < 3; ++i)
    for (int k = i + 1; k < 3; ++k) {
      const double f = m[k][i] / m[i][i];
      for (int j = i; j < 4; ++j) m[k][j] -= f * m[i][j];
    }
  double s[3];
  for (int i = 2; i >= 0; --i) {
    s[i] = m[i][3];
    for (int j = i + 1; j < 3; ++j) s[i] -= m[i][j] * s[j];
    s[i] /= m[i][i];
  }
  const double cx = s[0] / 2, cy = s[1] / 2;
  return {cx, cy, std::sqrt(s[2] + cx * cx + cy * cy)};
}

TEST(Synth, DeterministicForASeed) {
  testutil::TempDir a("synth_a"), b("synth_b"), c("synth_c");
  SynthParams p;
  p.users = 4;
  p.images_per_user = 2;
  generate_synthetic(p, a.path());
  generate_synthetic(p, b.path());
  EXPECT_EQ(testutil::compare_trees(a.path(), b.path()), "");
  p.seed = 8;
  generate_synthetic(p, c.path());
  EXPECT_NE(testutil::compare_trees(a.path(), c.path()), "");
}

TEST(Synth, LayoutAndIdentities) {
  testutil::TempDir dir("synth_layout");
  SynthParams p;
  p.users = 6;
  p.images_per_user = 4;
  const Manifest m = generate_synthetic(p, dir.path());
  ASSERT_EQ(m.records.size(), 24u);
  const Manifest back = ingest_manifest(dir / "manifest.csv");
  ASSERT_EQ(back.records.size(), 24u);
  const TrialList t = build_trials(back.protocol_images());
  EXPECT_EQ(t.users.size(), 6u);
  EXPECT_EQ(t.genuine.size(), 6u * 6);
  for (const auto& r : back.records) {
    EXPECT_TRUE(fs::exists(back.resolve(r))) << r.image_path;
    const double expect = r.annotation.distance_m == p.near_distance_m ? p.near_radius : p.far_radius;
    EXPECT_NEAR(r.annotation.sclera_radius, expect, 0.021 * expect + 1e-9);
  }
}

TEST(Synth, AnnotationsMatchRenderedCircles) {
  testutil::TempDir dir("synth_geom");
  SynthParams p;
  p.users = 6;
  p.images_per_user = 4;
  const Manifest m = generate_synthetic(p, dir.path());
  for (const auto& r : m.records) {
    const GrayImage img = load_gray(m.resolve(r));
    const auto& a = r.annotation;
    const auto check = [&](Point2 c, double radius, double lo, double hi, const char* what) {
      std::vector<Point2> edges;
      for (int k = 0; k < 72; ++k)
        if (auto e = radial_edge(img, c, 2 * std::numbers::pi * k / 72, lo * radius, hi * radius)) edges.push_back(*e);
      ASSERT_GE(edges.size(), 36u) << r.image_path << " " << what;
      const auto [cx, cy, fr] = fit_circle(edges);
      EXPECT_NEAR(cx, c.x, 0.5) << r.image_path << " " << what;
      EXPECT_NEAR(cy, c.y, 0.5) << r.image_path << " " << what;
      EXPECT_NEAR(fr, radius, 0.5) << r.image_path << " " << what;
    };
    check(a.iris_center, a.iris_radius, 0.7, 1.6, "iris");
    check(a.sclera_center, a.sclera_radius, 0.75, 1.3, "sclera");
  }
}

// ------------------------------------------------------------------ config

TEST(Config, DefaultAndPopulatedConfigsRoundTrip) {
  const ExperimentConfig d;
  EXPECT_EQ(config_from_json(config_to_json(d)), d);
  ExperimentConfig c;
  c.extractors = {"lbp", "hog", "sift", "neural:gap"};
  c.metrics = {"chi2", "cosine"};
  c.target_radius = {{4.0, 26.5}, {8.0, 21.25}};
  c.clahe = {4, 6, 0.03};
  c.mask_iris = false;
  c.model = "models/toy_cnn.onnx";
  c.sweep.enabled = true;
  c.sweep.layers = {"conv1", "gap"};
  c.fusion = {{"lbp/chi2", "hog/cosine"}, {"sift", "neural:gap/cosine", "lbp/cosine"}};
  c.output_dir = "out";
  c.cache_dir = "none";
  EXPECT_NO_THROW(validate_config(c));
  EXPECT_EQ(config_from_json(config_to_json(c)), c);
  testutil::TempDir dir("config");
  save_config(c, dir / "c.json");
  EXPECT_EQ(load_config(dir / "c.json"), c);
}

TEST(Config, BundledSyntheticConfigIsValid) {
  const ExperimentConfig c = load_config(testutil::source_dir() / "configs" / "synthetic.json");
  EXPECT_EQ(systems_of(c).size(), 2u);
  ASSERT_EQ(c.fusion.size(), 1u);
}

TEST(Config, RejectsBadConfigs) {
  EXPECT_THROW(config_from_json("{\"extractor\": [\"lbp\"]}"), InvalidInput);
  EXPECT_THROW(config_from_json("{\"extractors\": [\"gabor\"]}"), InvalidInput);
  EXPECT_THROW(config_from_json("{\"metrics\": [\"l1\"]}"), InvalidInput);
  EXPECT_THROW(config_from_json("{\"fusion\": {\"groups\": [[\"lbp\", \"sift\"]]}}"), InvalidInput);
  EXPECT_THROW(config_from_json("{\"fusion\": {\"groups\": [[\"lbp\"]]}}"), InvalidInput);
  EXPECT_THROW(config_from_json("{\"extractors\": [\"neural:gap\"]}"), InvalidInput);
  EXPECT_THROW(config_from_json("{\"preprocess\": {\"clahe\": {\"tiles_x\": 0}}}"), InvalidInput);
  EXPECT_THROW(config_from_json("{\"fusion\": {\"fold_rule\": \"random\"}}"), InvalidInput);
  EXPECT_THROW(config_from_json("not json"), InvalidInput);
}

TEST(Config, SystemIdsAndStems) {
  ExperimentConfig c;
  c.extractors = {"lbp", "sift"};
  c.metrics = {"chi2"};
  auto s = systems_of(c);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].id, "lbp");
  EXPECT_EQ(s[1].id, "sift");
  c.metrics = {"chi2", "euclidean"};
  s = systems_of(c);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[1].id, "lbp/euclidean");
  EXPECT_EQ(file_stem("fusion:lbp+hog"), "fusion_lbp_hog");
  EXPECT_EQ(file_stem("neural:conv1/chi2"), "neural_conv1_chi2");
}

// ---------------------------------------------------------------- pipeline

struct SynthSet {
  testutil::TempDir dir{"pipeline"};
  Manifest manifest;
  explicit SynthSet(int users, int images = 4) {
    SynthParams p;
    p.users = users;
    p.images_per_user = images;
    manifest = generate_synthetic(p, dir.path() / "data");
  }
};

ExperimentConfig lbp_hog_fusion() {
  ExperimentConfig c;
  c.fusion = {{"lbp", "hog"}};
  return c;
}

TEST(Pipeline, RunWritesSummaryWithFusionRow) {
  SynthSet set(8);
  RunOptions opt;
  opt.workers = 4;
  opt.cache_dir = set.dir / "cache";
  const fs::path out = set.dir / "out";
  const RunResult r = run(set.manifest, lbp_hog_fusion(), out, opt);
  ASSERT_EQ(r.summary.size(), 3u);
  EXPECT_EQ(r.summary[0].system, "lbp");
  EXPECT_EQ(r.summary[1].system, "hog");
  EXPECT_EQ(r.summary[2].system, "fusion:lbp+hog");
  for (const char* f : {"summary.csv", "run_report.txt", "config.json", "scores/lbp.csv", "scores/hog.csv",
                        "scores/fusion_lbp_hog.csv", "det/lbp.csv", "det/lbp.json", "fusion/fusion_lbp_hog.fold1.json",
                        "fusion/fusion_lbp_hog.fold2.json"})
    EXPECT_TRUE(fs::exists(out / f)) << f;

  // The summary is reproducible from the emitted score files alone.
  const auto rows = read_summary_csv(out / "summary.csv");
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& row : rows) {
    const SummaryRow again = summarize(read_scores(out / "scores" / (file_stem(row.system) + ".csv")));
    EXPECT_EQ(again.system, row.system);
    EXPECT_EQ(again.eer_percent, row.eer_percent);
    EXPECT_EQ(again.frr_at_far_1pct_percent, row.frr_at_far_1pct_percent);
  }
  // Default settings separate the synthetic users better than chance.
  for (const auto& row : rows) EXPECT_LT(row.eer_percent, 50.0) << row.system;
  const auto header = testutil::read_file(out / "summary.csv");
  EXPECT_EQ(header.substr(0, header.find('\n')), "system,eer_percent,frr_at_far_1pct_percent");
  EXPECT_NE(format_summary_table(rows).find("fusion:lbp+hog"), std::string::npos);
}

TEST(Pipeline, CachedRunsMatchColdRuns) {
  SynthSet set(6);
  RunOptions cold;
  const fs::path a = set.dir / "a", b = set.dir / "b", c = set.dir / "c";
  run(set.manifest, lbp_hog_fusion(), a, cold);
  RunOptions cached;
  cached.cache_dir = set.dir / "cache";
  cached.workers = 3;
  run(set.manifest, lbp_hog_fusion(), b, cached);
  const auto entries = testutil::list_files(set.dir / "cache");
  EXPECT_FALSE(entries.empty());
  run(set.manifest, lbp_hog_fusion(), c, cached);
  EXPECT_EQ(testutil::list_files(set.dir / "cache"), entries);
  EXPECT_EQ(testutil::compare_trees(a, b), "");
  EXPECT_EQ(testutil::compare_trees(a, c), "");
}

TEST(Pipeline, ChangedParametersMissTheCache) {
  SynthSet set(4);
  RunOptions opt;
  opt.cache_dir = set.dir / "cache";
  ExperimentConfig c;
  c.extractors = {"lbp"};
  run(set.manifest, c, set.dir / "a", opt);
  const auto before = testutil::list_files(set.dir / "cache").size();
  c.clahe.clip_limit = 0.02;
  run(set.manifest, c, set.dir / "b", opt);
  EXPECT_GT(testutil::list_files(set.dir / "cache").size(), before);
}

TEST(Pipeline, UnreadableImagesAreToleratedUpToFivePercent) {
  SynthSet set(7, 4);  // 28 images
  testutil::write_file(set.manifest.resolve(set.manifest.records[5]), "not an image");
  const PreparedSet ok = preprocess(set.manifest, ExperimentConfig{}, {});
  EXPECT_EQ(ok.images.size(), 27u);
  ASSERT_EQ(ok.failures.size(), 1u);
  EXPECT_EQ(ok.failures[0].image_id, set.manifest.records[5].image_path);
  testutil::write_file(set.manifest.resolve(set.manifest.records[9]), "");
  EXPECT_THROW(preprocess(set.manifest, ExperimentConfig{}, {}), DataError);
}

TEST(Pipeline, SiftNeuralAndSweepSystems) {
  SynthSet set(4);
  const fs::path model = set.dir / "toy.onnx";
  testutil::write_file(model, toy_model_bytes());
  ExperimentConfig c;
  c.extractors = {"sift", "neural:gap"};
  c.metrics = {"cosine"};
  c.model = model.string();
  c.sweep.enabled = true;
  c.fusion = {{"sift", "neural:gap"}};
  RunOptions opt;
  opt.workers = 4;
  const RunResult r = run(set.manifest, c, set.dir / "out", opt);
  ASSERT_EQ(r.summary.size(), 3u);
  EXPECT_EQ(r.summary[0].system, "sift");
  EXPECT_EQ(r.summary[1].system, "neural:gap");
  EXPECT_EQ(r.summary[2].system, "fusion:sift+neural:gap");
  EXPECT_EQ(r.sweep.size(), 18u);
  EXPECT_TRUE(fs::exists(set.dir / "out" / "sweep.csv"));
  for (const auto& row : r.summary) {
    EXPECT_GE(row.eer_percent, 0.0);
    EXPECT_LE(row.eer_percent, 100.0);
  }
}

TEST(Pipeline, SingleExperimentMatchesRun) {
  SynthSet set(5);
  ExperimentConfig c;
  c.extractors = {"hog"};
  const ExperimentResult e = run_experiment(set.manifest, c, "hog", "chi2", {});
  EXPECT_EQ(e.scores.comparator_id, "hog/chi2");
  EXPECT_EQ(e.trials.genuine.size(), 5u * 6);
  const RunResult r = run(set.manifest, c, set.dir / "out", {});
  EXPECT_EQ(r.summary[0].eer_percent, 100.0 * e.det.eer);
}

TEST(Pipeline, IdenticalImagesPerUserGiveZeroEer) {
  SynthSet set(6);
  // Every image of a user becomes a copy of that user's first image.
  std::map<std::string, std::size_t> first;
  for (std::size_t i = 0; i < set.manifest.records.size(); ++i) {
    auto& rec = set.manifest.records[i];
    const std::string user = user_key(rec.annotation);
    const auto [it, inserted] = first.emplace(user, i);
    if (inserted) continue;
    const ManifestRecord& src = set.manifest.records[it->second];
    fs::copy_file(set.manifest.resolve(src), set.manifest.resolve(rec), fs::copy_options::overwrite_existing);
    const int session = rec.annotation.session;
    rec.annotation = src.annotation;
    rec.annotation.session = session;
  }
  const fs::path model = set.dir / "toy.onnx";
  testutil::write_file(model, toy_model_bytes());
  ExperimentConfig c;
  c.extractors = {"lbp", "hog", "sift", "neural:gap"};
  c.model = model.string();
  RunOptions opt;
  opt.workers = 4;
  const RunResult r = run(set.manifest, c, set.dir / "out", opt);
  ASSERT_EQ(r.summary.size(), 4u);
  for (const auto& row : r.summary) {
    EXPECT_EQ(row.eer_percent, 0.0) << row.system;
    EXPECT_EQ(row.frr_at_far_1pct_percent, 0.0) << row.system;
  }
}

TEST(Pipeline, PureNoiseImagesGiveChanceEer) {
  testutil::TempDir dir("noise");
  Manifest m;
  m.base_dir = dir.path();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0, 1);
  for (int user = 0; user < 100; ++user)
    for (int i = 0; i < 4; ++i) {
      GrayImage img(64, 64);
      for (double& v : img.pixels()) v = std::round(u(rng) * 255) / 255;
      ManifestRecord rec;
      rec.image_path = "n" + std::to_string(user) + "_" + std::to_string(i) + ".png";
      rec.annotation.subject_id = "s" + std::to_string(user);
      rec.annotation.session = 1 + i % 2;
      rec.annotation.distance_m = 4;
      rec.annotation.sclera_center = {32, 32};
      rec.annotation.sclera_radius = 8;
      rec.annotation.iris_center = {32, 32};
      rec.annotation.iris_radius = 3;
      save_png(img, m.resolve(rec));
      m.records.push_back(rec);
    }
  const fs::path model = dir.path() / "toy.onnx";
  testutil::write_file(model, toy_model_bytes());
  ExperimentConfig c;
  c.extractors = {"lbp", "hog", "neural:gap"};
  c.metrics = {"euclidean"};
  c.model = model.string();
  c.target_radius = {{4.0, 8.0}};
  RunOptions opt;
  opt.workers = 4;
  const RunResult r = run(m, c, dir.path() / "out", opt);
  ASSERT_EQ(r.summary.size(), 3u);
  for (const auto& row : r.summary) EXPECT_NEAR(row.eer_percent, 50.0, 5.0) << row.system;
}

// --------------------------------------------------------------- CLI binary

#ifdef PERIOCULAR_CLI_PATH
int cli(const std::string& args) {
  const std::string cmd = std::string("\"") + PERIOCULAR_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodes) {
  testutil::TempDir dir("cli_codes");
  EXPECT_EQ(cli("--help"), 0);
  EXPECT_EQ(cli(""), 1);
  EXPECT_EQ(cli("frobnicate"), 1);
  EXPECT_EQ(cli("run --bogus"), 1);
  EXPECT_EQ(cli("run --manifest " + (dir / "missing.csv").string() + " --out " + (dir / "o").string()), 2);
  testutil::write_file(dir / "bad.json", "{\"extractors\": [\"gabor\"]}");
  EXPECT_EQ(cli("run --manifest x.csv --config " + (dir / "bad.json").string()), 2);
}

TEST(Cli, SynthRunReportRoundTrip) {
  testutil::TempDir dir("cli_run");
  const std::string data = (dir / "data").string(), out = (dir / "out").string();
  ASSERT_EQ(cli("synth --users 6 --images 4 --seed 3 --out " + data), 0);
  ASSERT_EQ(cli("run --manifest " + data + "/manifest.csv --config " +
                (testutil::source_dir() / "configs" / "synthetic.json").string() + " --out " + out + " --workers 2"),
            0);
  ASSERT_EQ(cli("report --scores " + out + "/scores --out " + (dir / "rep").string()), 0);
  auto a = read_summary_csv(dir / "out" / "summary.csv");
  auto b = read_summary_csv(dir / "rep" / "summary.csv");
  const auto by_name = [](const SummaryRow& x, const SummaryRow& y) { return x.system < y.system; };
  std::sort(a.begin(), a.end(), by_name);
  std::sort(b.begin(), b.end(), by_name);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].system, b[i].system);
    EXPECT_EQ(a[i].eer_percent, b[i].eer_percent);
  }
  ASSERT_EQ(cli("fuse --manifest " + data + "/manifest.csv --scores " + out + "/scores/lbp.csv " + out +
                "/scores/hog.csv --out " + (dir / "fused").string()),
            0);
  EXPECT_EQ(testutil::read_file(dir / "fused" / "scores" / "fusion_lbp_hog.csv"),
            testutil::read_file(dir / "out" / "scores" / "fusion_lbp_hog.csv"));
  ASSERT_EQ(cli("preprocess --manifest " + data + "/manifest.csv --out " + (dir / "pre").string()), 0);
  EXPECT_EQ(testutil::list_files(dir / "pre" / "roi").size(), 24u);
  ASSERT_EQ(cli("toy-model --out " + (dir / "toy.onnx").string()), 0);
  EXPECT_EQ(testutil::read_file(dir / "toy.onnx"), toy_model_bytes());
}
#endif

}  // namespace
