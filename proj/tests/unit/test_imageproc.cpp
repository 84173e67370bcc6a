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

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "periocular/error.hpp"
#include "periocular/imageproc.hpp"
#include "test_util.hpp"

namespace {

using namespace periocular;

EyeAnnotation annotation(double cx, double cy, double rs, double ix, double iy, double ri) {
  EyeAnnotation a;
  a.subject_id = "s0";
  a.sclera_center = {cx, cy};
  a.sclera_radius = rs;
  a.iris_center = {ix, iy};
  a.iris_radius = ri;
  return a;
}

double max_abs_diff(const GrayImage& a, const GrayImage& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a.pixels()[i] - b.pixels()[i]));
  return m;
}

// Bicubic value of `src` at a fractional position, from the kernel definition.
double sample(const GrayImage& src, double sx, double sy) {
  const int ix = static_cast<int>(std::floor(sx)), iy = static_cast<int>(std::floor(sy));
  double acc = 0;
  for (int j = iy - 1; j <= iy + 2; ++j)
    for (int i = ix - 1; i <= ix + 2; ++i)
      acc += oracle::keys(sx - i) * oracle::keys(sy - j) * src.clamped(i, j);
  return std::clamp(acc, 0.0, 1.0);
}

TEST(Grayscale, LumaWeights) {
  ColorImage c{3, 1, 3, {1, 0, 0, 0, 1, 0, 1, 1, 1}};
  const GrayImage g = to_grayscale(c);
  EXPECT_NEAR(g.at(0, 0), 0.299, 1e-12);
  EXPECT_NEAR(g.at(1, 0), 0.587, 1e-12);
  EXPECT_NEAR(g.at(2, 0), 1.0, 1e-12);
}

TEST(Grayscale, WhiteAndBlack) {
  ColorImage c{2, 1, 3, {1, 1, 1, 0, 0, 0}};
  const GrayImage g = to_grayscale(c);
  EXPECT_NEAR(g.at(0, 0), 1.0, 1e-12);
  EXPECT_EQ(g.at(1, 0), 0.0);
}

TEST(Grayscale, RejectsWrongChannelCount) {
  ColorImage c{1, 1, 4, {0, 0, 0, 0}};
  EXPECT_THROW(to_grayscale(c), InvalidInput);
}

TEST(Resize, ConstantImageStaysConstant) {
  const GrayImage img(13, 7, 0.37);
  const GrayImage out = resize_bicubic(img, 29, 31);
  for (double v : out.pixels()) EXPECT_NEAR(v, 0.37, 1e-12);
}

TEST(Resize, SameSizeIsIdentity) {
  std::mt19937_64 rng(1);
  const GrayImage img = oracle::random_image(17, 11, rng);
  EXPECT_LT(max_abs_diff(resize_bicubic(img, 17, 11), img), 1e-12);
}

TEST(Resize, MatchesPerPixelOracle) {
  std::mt19937_64 rng(2);
  for (auto [w, h, tw, th] : {std::array{4, 4, 8, 8}, {10, 6, 3, 9}, {32, 32, 224, 224}, {50, 40, 17, 23}}) {
    const GrayImage img = oracle::random_image(w, h, rng);
    EXPECT_LT(max_abs_diff(resize_bicubic(img, tw, th), oracle::bicubic(img, tw, th)), 1e-12)
        << w << "x" << h << " -> " << tw << "x" << th;
  }
}

TEST(Resize, RejectsEmptyTarget) {
  EXPECT_THROW(resize_bicubic(GrayImage(4, 4), 0, 4), InvalidInput);
}

TEST(NormalizeAndCrop, SideIsRoundedMultipleOfRadius) {
  const GrayImage img(400, 400, 0.5);
  const auto ann = annotation(200, 200, 40, 200, 200, 15);
  EXPECT_EQ(normalize_and_crop(img, ann, 50).image.width(), 380);
  for (double target : {10.0, 21.0, 26.0, 26.03, 33.3}) {
    const RoiImage roi = normalize_and_crop(img, ann, target);
    EXPECT_EQ(roi.image.width(), std::lround(7.6 * target));
    EXPECT_EQ(roi.image.height(), roi.image.width());
    EXPECT_DOUBLE_EQ(roi.scale_factor, target / 40.0);
  }
}

TEST(NormalizeAndCrop, SamplesTheScaledSourceAroundTheScleraCentre) {
  std::mt19937_64 rng(3);
  const GrayImage img = oracle::random_image(120, 90, rng);
  const auto ann = annotation(61.3, 40.7, 20.0, 62.0, 41.0, 8.0);
  const double target = 13.0;
  const RoiImage roi = normalize_and_crop(img, ann, target);
  const double scale = target / 20.0, half = (roi.image.width() - 1) / 2.0;
  double worst = 0;
  for (int y = 0; y < roi.image.height(); ++y)
    for (int x = 0; x < roi.image.width(); ++x) {
      const double expect = sample(img, 61.3 + (x - half) / scale, 40.7 + (y - half) / scale);
      worst = std::max(worst, std::fabs(expect - roi.image.at(x, y)));
    }
  EXPECT_LT(worst, 1e-12);
}

TEST(NormalizeAndCrop, UnitScaleWhenTargetEqualsRadius) {
  std::mt19937_64 rng(9);
  const GrayImage img = oracle::random_image(80, 80, rng);
  const RoiImage roi = normalize_and_crop(img, annotation(40, 40, 5, 40, 40, 2), 5.0);
  EXPECT_EQ(roi.scale_factor, 1.0);
  // side 38: pixel i samples source 40 + i - 18.5, halfway between two pixels.
  EXPECT_NEAR(roi.image.at(0, 0), sample(img, 21.5, 21.5), 1e-12);
}

TEST(NormalizeAndCrop, CornerCentreStillGivesFullSquare) {
  const GrayImage img(64, 64, 0.25);
  const RoiImage roi = normalize_and_crop(img, annotation(0, 0, 10, 0, 0, 4), 10);
  EXPECT_EQ(roi.image.width(), 76);
  for (double v : roi.image.pixels()) EXPECT_NEAR(v, 0.25, 1e-12);
}

TEST(NormalizeAndCrop, RejectsCentreOutsideImageAndBadGeometry) {
  const GrayImage img(64, 64, 0.25);
  EXPECT_THROW(normalize_and_crop(img, annotation(70, 10, 10, 10, 10, 4), 10), InvalidInput);
  EXPECT_THROW(normalize_and_crop(img, annotation(10, 10, 4, 10, 10, 5), 10), InvalidInput);
  EXPECT_THROW(normalize_and_crop(img, annotation(10, 10, 0, 10, 10, 4), 10), InvalidInput);
  EXPECT_THROW(normalize_and_crop(img, annotation(10, 10, 10, 10, 10, 4), 0), InvalidInput);
}

TEST(NormalizeAndCrop, ScleraCentreMapsToRoiCentre) {
  const GrayImage img(100, 100, 0.5);
  const RoiImage roi = normalize_and_crop(img, annotation(40, 55, 20, 40, 55, 8), 25);
  const Point2 c = roi.to_roi({40, 55});
  EXPECT_DOUBLE_EQ(c.x, (roi.image.width() - 1) / 2.0);
  const Point2 edge = roi.to_roi({60, 55});
  EXPECT_DOUBLE_EQ(edge.x - c.x, 25.0);
}

TEST(Clahe, ConstantImageIsFixedPoint) {
  for (double v : {0.0, 0.3, 1.0}) {
    const GrayImage img(40, 30, v);
    EXPECT_EQ(clahe(img), img);
  }
}

TEST(Clahe, OutputStaysInUnitRange) {
  std::mt19937_64 rng(4);
  const GrayImage out = clahe(oracle::random_image(64, 48, rng, false), {8, 8, 0.02});
  for (double v : out.pixels()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Clahe, TwoDisjointTilesMatchOracle) {
  // Left half dark gradient, right half bright gradient: two tiles, no overlap.
  GrayImage img(16, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 16; ++x) img.at(x, y) = x < 8 ? 0.05 * (x % 4) + 0.01 * y : 0.6 + 0.04 * (x % 3);
  const ClaheParams p{2, 1, 0.05};
  EXPECT_LT(max_abs_diff(clahe(img, p), oracle::clahe(img, 2, 1, 0.05)), 1e-12);
}

TEST(Clahe, RandomImagesMatchOracle) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> dim(9, 70), tiles(1, 9);
  std::uniform_real_distribution<double> clip(0.005, 0.2);
  for (int trial = 0; trial < 20; ++trial) {
    const int w = dim(rng), h = dim(rng), tx = tiles(rng), ty = tiles(rng);
    const double c = clip(rng);
    const GrayImage img = oracle::random_image(w, h, rng, trial % 2 == 0);
    EXPECT_LT(max_abs_diff(clahe(img, {tx, ty, c}), oracle::clahe(img, std::min(tx, w), std::min(ty, h), c)),
              1e-12)
        << w << "x" << h << " tiles " << tx << "x" << ty << " clip " << c;
  }
}

TEST(Clahe, RejectsBadParameters) {
  const GrayImage img(8, 8, 0.5);
  EXPECT_THROW(clahe(img, {0, 8, 0.01}), InvalidInput);
  EXPECT_THROW(clahe(img, {8, 8, 0.0}), InvalidInput);
  EXPECT_THROW(clahe(img, {8, 8, 1.5}), InvalidInput);
}

TEST(MaskIris, ZeroesExactlyTheMappedDisc) {
  const GrayImage img(200, 200, 0.8);
  for (double r : {5.0, 9.5, 12.0}) {
    const auto ann = annotation(100, 100, 30, 103.2, 98.6, r);
    const RoiImage roi = normalize_and_crop(img, ann, 30);
    const RoiImage masked = mask_iris(roi, ann);
    std::size_t zeros = 0;
    for (double v : masked.image.pixels()) zeros += v == 0.0;
    const Point2 c = roi.to_roi(ann.iris_center);
    EXPECT_EQ(zeros, oracle::disc_pixels(roi.image.width(), roi.image.height(), c.x, c.y, r));
    EXPECT_NEAR(static_cast<double>(zeros), std::numbers::pi * r * r, 4 * r);
    EXPECT_EQ(masked.image.at(static_cast<int>(std::lround(c.x)), static_cast<int>(std::lround(c.y))), 0.0);
    EXPECT_EQ(masked.image.at(0, 0), roi.image.at(0, 0));
    EXPECT_EQ(mask_iris(masked, ann).image, masked.image);
  }
}

TEST(MeanSubtract, SingleImageGivesZeroResidual) {
  std::mt19937_64 rng(6);
  const GrayImage img = oracle::random_image(9, 9, rng);
  const auto ms = mean_subtract({img});
  EXPECT_EQ(ms.mean, img);
  for (double v : ms.residuals[0].pixels()) EXPECT_EQ(v, 0.0);
}

TEST(MeanSubtract, TwoImagesGiveHalfDifferences) {
  std::mt19937_64 rng(10);
  const GrayImage a = oracle::random_image(7, 5, rng), b = oracle::random_image(7, 5, rng);
  const auto ms = mean_subtract({a, b});
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(ms.residuals[0].pixels()[i], (a.pixels()[i] - b.pixels()[i]) / 2, 1e-12);
    EXPECT_NEAR(ms.residuals[1].pixels()[i], (b.pixels()[i] - a.pixels()[i]) / 2, 1e-12);
  }
}

TEST(MeanSubtract, ResidualsAverageToZero) {
  std::mt19937_64 rng(7);
  std::vector<GrayImage> set;
  for (int i = 0; i < 5; ++i) set.push_back(oracle::random_image(6, 4, rng));
  const auto ms = mean_subtract(set);
  for (std::size_t p = 0; p < set[0].size(); ++p) {
    double sum = 0, mean = 0;
    for (const auto& im : set) mean += im.pixels()[p] / 5;
    for (const auto& r : ms.residuals) sum += r.pixels()[p];
    EXPECT_NEAR(sum, 0.0, 1e-12);
    EXPECT_NEAR(ms.mean.pixels()[p], mean, 1e-12);
  }
  EXPECT_THROW(mean_subtract({}), InvalidInput);
  EXPECT_THROW(mean_subtract({GrayImage(2, 2), GrayImage(2, 3)}), InvalidInput);
}

TEST(MeanImageFile, LayoutAndRoundTrip) {
  testutil::TempDir dir("mean");
  GrayImage m(3, 2, std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0, -0.125});
  write_mean_image(m, dir / "mean.bin");
  const std::string bytes = testutil::read_file(dir / "mean.bin");
  ASSERT_EQ(bytes.size(), 8u + 6 * 4);
  EXPECT_EQ(static_cast<unsigned char>(bytes[0]), 3);
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 2);
  float second;
  std::memcpy(&second, bytes.data() + 12, 4);
  EXPECT_EQ(second, 0.25f);
  EXPECT_EQ(read_mean_image(dir / "mean.bin"), m);
}

TEST(Png, EightBitRoundTrip) {
  testutil::TempDir dir("png");
  GrayImage img(5, 3);
  for (int i = 0; i < 15; ++i) img.pixels()[i] = (i * 17) / 255.0;
  save_png(img, dir / "a.png");
  EXPECT_EQ(load_gray(dir / "a.png"), img);
  EXPECT_THROW(load_gray(dir / "missing.png"), IoError);
}

TEST(Pipeline, Deterministic) {
  std::mt19937_64 rng(8);
  const GrayImage img = oracle::random_image(150, 120, rng);
  const auto ann = annotation(75, 60, 24, 76, 61, 9);
  const auto run = [&] { return mask_iris(RoiImage{clahe(normalize_and_crop(img, ann, 26).image), 26.0 / 24, {75, 60}}, ann); };
  EXPECT_EQ(run().image, run().image);
}

}  // namespace
