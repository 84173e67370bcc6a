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


#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "periocular/error.hpp"
#include "periocular/metrics.hpp"

namespace {

using namespace periocular;

std::vector<float> random_vector(std::mt19937_64& rng, std::size_t n, bool non_negative) {
  std::uniform_real_distribution<float> u(non_negative ? 0.0f : -1.0f, 1.0f);
  std::vector<float> v(n);
  for (float& x : v) x = u(rng);
  return v;
}

std::vector<float> l2_normalized(std::vector<float> v) {
  double n = 0;
  for (float x : v) n += double(x) * x;
  n = std::sqrt(n);
  for (float& x : v) x = static_cast<float>(x / n);
  return v;
}

TEST(Metrics, SymmetricOnRandomPairs) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 10000; ++i) {
    const auto a = random_vector(rng, 64, true), b = random_vector(rng, 64, true);
    for (Metric m : {Metric::euclidean, Metric::chi2, Metric::cosine})
      ASSERT_EQ(similarity(m, a, b), similarity(m, b, a)) << to_string(m) << " pair " << i;
  }
}

TEST(Metrics, HandExamples) {
  const std::vector<float> a{1, 0}, b{0, 1};
  EXPECT_EQ(chi2_similarity(a, b), -2.0);
  EXPECT_EQ(chi2_similarity(a, a), 0.0);
  EXPECT_EQ(euclidean_similarity(std::vector<float>{0, 0}, std::vector<float>{3, 4}), -5.0);
  EXPECT_EQ(cosine_similarity(a, b), 0.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(std::vector<float>{1, 2}, std::vector<float>{2, 4}), 1.0);
  // chi2 skips bins empty in both vectors: ((0.5-0.25)^2 / 0.75)
  EXPECT_DOUBLE_EQ(chi2_similarity(std::vector<float>{0.5f, 0, 0.5f}, std::vector<float>{0.25f, 0, 0.5f}),
                   -(0.25 * 0.25) / 0.75);
}

TEST(Metrics, IdentityAndHandValues) {
  const std::vector<float> v{0.2f, 0.5f, 0.3f};
  EXPECT_EQ(euclidean_similarity(v, v), 0.0);
  EXPECT_EQ(chi2_similarity(v, v), 0.0);
  EXPECT_NEAR(cosine_similarity(v, v), 1.0, 1e-15);
  EXPECT_NEAR(cosine_similarity(std::vector<float>{1, 1}, std::vector<float>{1, 0}), 1 / std::sqrt(2.0), 1e-15);
  // Zero-padded extra bin: 0/0 term is skipped, not NaN.
  EXPECT_EQ(chi2_similarity(std::vector<float>{0.5f, 0.5f, 0}, std::vector<float>{0.5f, 0.5f, 0}), 0.0);
}

// Neumaier-compensated sums in long double, as an independent reference.
long double compensated(const std::vector<long double>& terms) {
  long double sum = 0, c = 0;
  for (long double t : terms) {
    const long double s = sum + t;
    c += std::fabs(sum) >= std::fabs(t) ? (sum - s) + t : (t - s) + sum;
    sum = s;
  }
  return sum + c;
}

TEST(Metrics, MatchHighPrecisionOracle) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = random_vector(rng, 512, true), b = random_vector(rng, 512, true);
    std::vector<long double> sq, chi, dot, na, nb;
    for (std::size_t i = 0; i < 512; ++i) {
      const long double x = a[i], y = b[i];
      sq.push_back((x - y) * (x - y));
      if (x + y >= 1e-12L) chi.push_back((x - y) * (x - y) / (x + y));
      dot.push_back(x * y);
      na.push_back(x * x);
      nb.push_back(y * y);
    }
    const double e = -std::sqrt(static_cast<double>(compensated(sq)));
    const double c = -static_cast<double>(compensated(chi));
    const double cs = static_cast<double>(compensated(dot) / std::sqrt(compensated(na) * compensated(nb)));
    EXPECT_NEAR(euclidean_similarity(a, b), e, 1e-9 * std::fabs(e));
    EXPECT_NEAR(chi2_similarity(a, b), c, 1e-9 * std::fabs(c));
    EXPECT_NEAR(cosine_similarity(a, b), cs, 1e-9 * std::fabs(cs));
  }
}

TEST(Metrics, ZeroNormCosineIsZero) {
  EXPECT_EQ(cosine_similarity(std::vector<float>{0, 0}, std::vector<float>{1, 1}), 0.0);
}

TEST(Metrics, RejectsBadInput) {
  EXPECT_THROW(chi2_similarity(std::vector<float>{-1, 0}, std::vector<float>{1, 0}), InvalidInput);
  EXPECT_THROW(euclidean_similarity(std::vector<float>{1}, std::vector<float>{1, 2}), InvalidInput);
  EXPECT_THROW(parse_metric("manhattan"), InvalidInput);
  for (Metric m : {Metric::euclidean, Metric::chi2, Metric::cosine}) EXPECT_EQ(parse_metric(to_string(m)), m);
}

TEST(Metrics, ScoresCarryComparatorId) {
  FeatureVector a{{1, 0}}, b{{0, 1}};
  EXPECT_EQ(chi2(a, b).value, -2.0);
  EXPECT_EQ(chi2(a, b).comparator_id, "chi2");
  EXPECT_EQ(euclidean(a, b).comparator_id, "euclidean");
  EXPECT_EQ(cosine(a, b).comparator_id, "cosine");
}

TEST(Metrics, CosineAndEuclideanRankIdenticallyOnUnitVectors) {
  std::mt19937_64 rng(22);
  std::vector<std::vector<float>> gallery;
  for (int g = 0; g < 100; ++g) gallery.push_back(l2_normalized(random_vector(rng, 128, false)));
  for (int p = 0; p < 100; ++p) {
    const auto probe = l2_normalized(random_vector(rng, 128, false));
    std::vector<int> by_cos(100), by_euc(100);
    std::iota(by_cos.begin(), by_cos.end(), 0);
    by_euc = by_cos;
    std::vector<double> cs(100), es(100);
    for (int g = 0; g < 100; ++g) {
      cs[g] = cosine_similarity(probe, gallery[g]);
      es[g] = euclidean_similarity(probe, gallery[g]);
    }
    std::stable_sort(by_cos.begin(), by_cos.end(), [&](int i, int j) { return cs[i] > cs[j]; });
    std::stable_sort(by_euc.begin(), by_euc.end(), [&](int i, int j) { return es[i] > es[j]; });
    ASSERT_EQ(by_cos, by_euc) << "probe " << p;
  }
}

}  // namespace
