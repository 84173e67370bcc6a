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

#include "periocular/fusion.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "periocular/error.hpp"

namespace periocular {

namespace {

constexpr double kConstantStd = 1e-12;

// log(sigmoid(eta)) without overflow.
double log_sigmoid(double eta) {
  return eta >= 0.0 ? -std::log1p(std::exp(-eta)) : eta - std::log1p(std::exp(eta));
}

double sigmoid(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

// Solves A x = b in place (Gaussian elimination, partial pivoting).
std::vector<double> solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    std::swap(a[col], a[piv]);
    std::swap(b[col], b[piv]);
    const double d = a[col][col];
    if (std::abs(d) < 1e-300) throw InvalidInput("singular system in fusion training");
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / d;
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
    x[i] = s / a[i][i];
  }
  return x;
}

void check_aligned(const std::vector<ScoreSet>& scores) {
  if (scores.empty()) throw InvalidInput("fusion needs at least one comparator");
  const auto& ref = scores.front().entries;
  for (const auto& s : scores) {
    if (s.entries.size() != ref.size()) throw InvalidInput("comparators cover different trial sets");
    for (std::size_t j = 0; j < ref.size(); ++j) {
      const auto& a = ref[j];
      const auto& b = s.entries[j];
      if (a.enrol_id != b.enrol_id || a.probe_id != b.probe_id || a.label != b.label)
        throw InvalidInput("comparators disagree on trial " + std::to_string(j));
    }
  }
}

std::vector<std::vector<double>> columns_of(const std::vector<ScoreSet>& scores,
                                            const std::vector<std::size_t>& rows) {
  std::vector<std::vector<double>> cols(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    cols[i].reserve(rows.size());
    for (std::size_t j : rows) cols[i].push_back(scores[i].entries[j].score);
  }
  return cols;
}

std::string joined_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += '+';
    out += ids[i];
  }
  return out;
}

}  // namespace

std::string FusionModel::fused_id() const { return "fusion:" + joined_ids(comparator_ids); }

FusionModel train_logistic(const std::vector<std::vector<double>>& columns,
                           const std::vector<bool>& genuine, const FusionOptions& options) {
  if (columns.empty()) throw InvalidInput("fusion needs at least one comparator");
  const std::size_t n = genuine.size();
  for (const auto& c : columns)
    if (c.size() != n) throw InvalidInput("score column length differs from label count");
  std::size_t positives = 0;
  for (bool g : genuine) positives += g ? 1 : 0;
  if (positives == 0 || positives == n) throw InvalidInput("fusion training needs both classes");

  FusionModel model;
  model.comparator_ids.resize(columns.size());
  model.weights.assign(columns.size(), 0.0);
  model.stats.resize(columns.size());

  // z-normalized active columns
  std::vector<std::size_t> active;
  std::vector<std::vector<double>> z;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    double mean = 0.0;
    for (double v : columns[i]) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : columns[i]) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    ComparatorStats& st = model.stats[i];
    st.mean = mean;
    if (!(sd > kConstantStd)) {
      st.stddev = 1.0;
      st.dropped = true;
      std::cerr << "warning: comparator " << i << " is constant on the training fold; dropped\n";
      continue;
    }
    st.stddev = sd;
    std::vector<double> col(n);
    for (std::size_t j = 0; j < n; ++j) col[j] = (columns[i][j] - mean) / sd;
    active.push_back(i);
    z.push_back(std::move(col));
  }

  const std::size_t p = active.size() + 1;  // bias first
  std::vector<double> theta(p, 0.0);
  std::vector<double> eta(n, 0.0);

  const auto linear = [&](const std::vector<double>& th, std::vector<double>& out) {
    for (std::size_t j = 0; j < n; ++j) {
      double e = th[0];
      for (std::size_t k = 1; k < p; ++k) e += th[k] * z[k - 1][j];
      out[j] = e;
    }
  };
  const auto objective = [&](const std::vector<double>& th, const std::vector<double>& et) {
    double ll = 0.0;
    for (std::size_t j = 0; j < n; ++j) ll += genuine[j] ? log_sigmoid(et[j]) : log_sigmoid(-et[j]);
    double pen = 0.0;
    for (std::size_t k = 1; k < p; ++k) pen += th[k] * th[k];
    return ll - 0.5 * options.ridge * pen;
  };

  linear(theta, eta);
  double current = objective(theta, eta);
  int iter = 0;
  std::vector<double> trial_theta(p), trial_eta(n);
  while (iter < options.max_iterations) {
    ++iter;
    std::vector<double> grad(p, 0.0);
    std::vector<std::vector<double>> hess(p, std::vector<double>(p, 0.0));
    for (std::size_t j = 0; j < n; ++j) {
      const double prob = sigmoid(eta[j]);
      const double resid = (genuine[j] ? 1.0 : 0.0) - prob;
      const double w = prob * (1.0 - prob);
      for (std::size_t a = 0; a < p; ++a) {
        const double xa = a == 0 ? 1.0 : z[a - 1][j];
        grad[a] += resid * xa;
        for (std::size_t b = a; b < p; ++b) {
          const double xb = b == 0 ? 1.0 : z[b - 1][j];
          hess[a][b] += w * xa * xb;
        }
      }
    }
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = 0; b < a; ++b) hess[a][b] = hess[b][a];
    for (std::size_t k = 1; k < p; ++k) {
      grad[k] -= options.ridge * theta[k];
      hess[k][k] += options.ridge;
    }
    // Keeps the bias direction solvable once the fit saturates.
    hess[0][0] += 1e-12;

    const std::vector<double> step = solve(hess, grad);
    double scale = 1.0;
    double next = current;
    bool improved = false;
    for (int halving = 0; halving < 40; ++halving, scale *= 0.5) {
      for (std::size_t k = 0; k < p; ++k) trial_theta[k] = theta[k] + scale * step[k];
      linear(trial_theta, trial_eta);
      next = objective(trial_theta, trial_eta);
      if (next >= current) {
        improved = true;
        break;
      }
    }
    if (!improved) break;
    const double gain = next - current;
    theta = trial_theta;
    eta = trial_eta;
    current = next;
    if (gain < options.tolerance) break;
  }

  model.bias = theta[0];
  for (std::size_t k = 1; k < p; ++k) model.weights[active[k - 1]] = theta[k];
  model.iterations = iter;
  double ll = 0.0;
  for (std::size_t j = 0; j < n; ++j) ll += genuine[j] ? log_sigmoid(eta[j]) : log_sigmoid(-eta[j]);
  model.log_likelihood = ll;
  return model;
}

FusionModel train_fusion(const std::vector<ScoreSet>& scores, const FusionOptions& options) {
  check_aligned(scores);
  const std::size_t n = scores.front().entries.size();
  std::vector<std::size_t> rows(n);
  for (std::size_t j = 0; j < n; ++j) rows[j] = j;
  std::vector<bool> genuine(n);
  for (std::size_t j = 0; j < n; ++j) genuine[j] = scores.front().entries[j].label == Label::genuine;
  FusionModel model = train_logistic(columns_of(scores, rows), genuine, options);
  for (std::size_t i = 0; i < scores.size(); ++i) model.comparator_ids[i] = scores[i].comparator_id;
  return model;
}

Score apply_fusion(const FusionModel& model, std::span<const double> scores) {
  if (scores.size() != model.weights.size() || model.stats.size() != model.weights.size())
    throw InvalidInput("fusion arity mismatch: model has " + std::to_string(model.weights.size()) +
                       " comparators, got " + std::to_string(scores.size()) + " scores");
  double f = model.bias;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& st = model.stats[i];
    f += model.weights[i] * ((scores[i] - st.mean) / st.stddev);
  }
  return {f, model.fused_id()};
}

double fusion_log_likelihood(const FusionModel& model,
                             const std::vector<std::vector<double>>& columns,
                             const std::vector<bool>& genuine) {
  double ll = 0.0;
  std::vector<double> row(columns.size());
  for (std::size_t j = 0; j < genuine.size(); ++j) {
    for (std::size_t i = 0; i < columns.size(); ++i) row[i] = columns[i][j];
    const double eta = apply_fusion(model, row).value;
    ll += genuine[j] ? log_sigmoid(eta) : log_sigmoid(-eta);
  }
  return ll;
}

std::vector<int> folds_by_user_parity(const ScoreSet& trials,
                                      const std::map<std::string, std::size_t>& image_user) {
  std::vector<int> folds;
  folds.reserve(trials.entries.size());
  for (const auto& e : trials.entries) {
    const auto it = image_user.find(e.enrol_id);
    if (it == image_user.end()) throw InvalidInput("no user known for image " + e.enrol_id);
    folds.push_back(it->second % 2 == 0 ? 1 : 2);
  }
  return folds;
}

TwoFoldResult two_fold_fusion(const std::vector<ScoreSet>& scores, const std::vector<int>& folds,
                              const FusionOptions& options) {
  check_aligned(scores);
  const auto& ref = scores.front().entries;
  if (folds.size() != ref.size()) throw InvalidInput("fold assignment does not cover every trial");

  std::vector<std::size_t> rows[2];
  for (std::size_t j = 0; j < ref.size(); ++j) {
    if (folds[j] != 1 && folds[j] != 2) throw InvalidInput("fold ids must be 1 or 2");
    rows[folds[j] - 1].push_back(j);
  }
  for (int f = 0; f < 2; ++f) {
    bool gen = false, imp = false;
    for (std::size_t j : rows[f]) (ref[j].label == Label::genuine ? gen : imp) = true;
    if (!gen || !imp)
      throw InvalidInput("fold " + std::to_string(f + 1) + " lacks genuine or impostor trials");
  }

  TwoFoldResult result;
  for (int f = 0; f < 2; ++f) {
    std::vector<bool> genuine;
    for (std::size_t j : rows[f]) genuine.push_back(ref[j].label == Label::genuine);
    FusionModel m = train_logistic(columns_of(scores, rows[f]), genuine, options);
    for (std::size_t i = 0; i < scores.size(); ++i) m.comparator_ids[i] = scores[i].comparator_id;
    m.fold = f + 1;
    result.models[f] = std::move(m);
  }

  result.fused.comparator_id = result.models[0].fused_id();
  result.fused.entries = ref;
  std::vector<double> row(scores.size());
  for (std::size_t j = 0; j < ref.size(); ++j) {
    const FusionModel& m = result.models[folds[j] == 1 ? 1 : 0];
    for (std::size_t i = 0; i < scores.size(); ++i) row[i] = scores[i].entries[j].score;
    result.fused.entries[j].score = apply_fusion(m, row).value;
  }
  return result;
}

ScoreSet mean_rule_fusion(const std::vector<ScoreSet>& scores) {
  check_aligned(scores);
  const std::size_t n = scores.front().entries.size();
  ScoreSet out;
  std::vector<std::string> ids;
  for (const auto& s : scores) ids.push_back(s.comparator_id);
  out.comparator_id = "mean:" + joined_ids(ids);
  out.entries = scores.front().entries;
  for (auto& e : out.entries) e.score = 0.0;
  for (const auto& s : scores) {
    double mean = 0.0;
    for (const auto& e : s.entries) mean += e.score;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const auto& e : s.entries) var += (e.score - mean) * (e.score - mean);
    double sd = std::sqrt(var / static_cast<double>(n));
    if (!(sd > kConstantStd)) sd = 1.0;
    for (std::size_t j = 0; j < n; ++j)
      out.entries[j].score += (s.entries[j].score - mean) / sd / static_cast<double>(scores.size());
  }
  return out;
}

std::string fusion_model_to_json(const FusionModel& model) {
  nlohmann::ordered_json j;
  j["comparator_ids"] = model.comparator_ids;
  j["weights"] = model.weights;
  j["bias"] = model.bias;
  auto stats = nlohmann::ordered_json::array();
  for (const auto& s : model.stats)
    stats.push_back({{"mean", s.mean}, {"stddev", s.stddev}, {"dropped", s.dropped}});
  j["stats"] = stats;
  j["training"] = {{"fold", model.fold},
                   {"iterations", model.iterations},
                   {"log_likelihood", model.log_likelihood}};
  return j.dump(2);
}

FusionModel fusion_model_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    FusionModel m;
    m.comparator_ids = j.at("comparator_ids").get<std::vector<std::string>>();
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    for (const auto& s : j.at("stats"))
      m.stats.push_back({s.at("mean").get<double>(), s.at("stddev").get<double>(),
                         s.at("dropped").get<bool>()});
    const auto& t = j.at("training");
    m.fold = t.at("fold").get<int>();
    m.iterations = t.at("iterations").get<int>();
    m.log_likelihood = t.at("log_likelihood").get<double>();
    if (m.weights.size() != m.comparator_ids.size() || m.stats.size() != m.weights.size())
      throw InvalidInput("fusion model arrays differ in length");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed fusion model: ") + e.what());
  }
}

void save_fusion_model(const FusionModel& model, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os << fusion_model_to_json(model) << '\n';
}

FusionModel load_fusion_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return fusion_model_from_json(ss.str());
}

}  // namespace periocular
