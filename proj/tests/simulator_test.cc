#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wasmfp/catalog.h"
#include "wasmfp/classifier.h"
#include "wasmfp/errors.h"
#include "wasmfp/simulator.h"

using namespace wasmfp;

namespace {

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;
};

Moments moments(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs)
    ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

ClassProfile profile_named(const std::string& name) {
  for (auto& p : builtin_profiles())
    if (p.name == name)
      return p;
  throw std::runtime_error("no profile " + name);
}

struct RatioSamples {
  std::vector<double> ss1, ss2;
};

RatioSamples ratios_of(const FingerprintDatabase& db) {
  RatioSamples out;
  for (Eigen::Index j = 0; j < db.size(); ++j) {
    const auto r = compute_ratios(db.column(j));
    out.ss1.push_back(r.ss1_over_sg0);
    out.ss2.push_back(r.ss2_over_sg0);
  }
  return out;
}

void expect_within(double got, double want, double tolerance, const std::string& what) {
  EXPECT_LE(std::abs(got - want), tolerance * want) << what << ": got " << got << ", want " << want;
}

}  // namespace

TEST(Profiles, EightBuiltinsAllValid) {
  const auto profiles = builtin_profiles();
  ASSERT_EQ(profiles.size(), 8u);
  for (const auto& p : profiles) {
    EXPECT_NO_THROW(p.validate()) << p.name;
    EXPECT_EQ(p.per_test_mean.size(), kTestCount);
  }
}

TEST(Profiles, ValidationCatchesBadShapes) {
  auto p = profile_named("chrome-windows");
  p.per_test_mean.pop_back();
  EXPECT_THROW(p.validate(), DataError);
  p = profile_named("chrome-windows");
  p.per_test_spread[3] = -0.1;
  EXPECT_THROW(p.validate(), DataError);
  p = profile_named("chrome-windows");
  p.setter_inflation.ss1 = 0.0;
  EXPECT_THROW(p.validate(), DataError);
}

TEST(Sampling, BareMetalChromeSetterMeans) {
  ClassProfile p;
  p.name = "flat-19.54";
  p.label = {"Chrome", "Windows", "desktop"};
  p.per_test_mean.assign(kTestCount, 19.54);
  p.per_test_spread.assign(kTestCount, 0.1);
  p.setter_inflation = {7.79, 8.25};
  p.device_spread = 0.2;
  const auto db = sample_dataset(std::span(&p, 1), 20000, 99);
  const Eigen::VectorXd means = db.matrix().rowwise().mean();
  expect_within(means(kScriptedSetter1), 152.21, 0.10, "SS1 mean");
  expect_within(means(kScriptedSetter2), 161.14, 0.10, "SS2 mean");
  expect_within(means(kScriptedGetter0), 19.54, 0.10, "SG0 mean");
}

TEST(Sampling, ZeroSpreadReturnsMeans) {
  auto p = profile_named("firefox-unix");
  std::fill(p.per_test_spread.begin(), p.per_test_spread.end(), 0.0);
  p.device_spread = 0.0;
  const auto db = sample_dataset(std::span(&p, 1), 25, 7);
  for (Eigen::Index j = 0; j < db.size(); ++j) {
    for (std::size_t t = 0; t < kTestCount; ++t) {
      double want = p.per_test_mean[t];
      if (t == kScriptedSetter1)
        want *= p.setter_inflation.ss1;
      if (t == kScriptedSetter2)
        want *= p.setter_inflation.ss2;
      EXPECT_NEAR(db.matrix()(static_cast<Eigen::Index>(t), j), want, 1e-12 * want);
    }
  }
}

TEST(Sampling, SameSeedSameBytes) {
  const auto profiles = builtin_profiles();
  const auto a = to_json(sample_dataset(profiles, 12, 1234)).dump();
  const auto b = to_json(sample_dataset(profiles, 12, 1234)).dump();
  const auto c = to_json(sample_dataset(profiles, 12, 1235)).dump();
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Sampling, ColumnsOrderedByProfile) {
  const auto profiles = builtin_profiles();
  std::vector<std::size_t> counts{2, 0, 1, 0, 0, 0, 0, 3};
  const auto db = sample_dataset(profiles, counts, 5);
  ASSERT_EQ(db.size(), 6);
  EXPECT_EQ(db.labels()[0].browser, "Chrome");
  EXPECT_EQ(db.labels()[2].browser, "Firefox");
  EXPECT_EQ(db.labels()[5].os, "iOS");
}

TEST(Sampling, RejectsBadCounts) {
  const auto profiles = builtin_profiles();
  std::vector<std::size_t> wrong_len{1, 2};
  EXPECT_THROW(sample_dataset(profiles, wrong_len, 1), DataError);
  EXPECT_THROW(sample_dataset(profiles, std::size_t{0}, 1), DataError);
}

// Ratio moments per engine class at n = 10,000 against the reference table.
TEST(Calibration, ChromiumProfilesMatchReferenceRatios) {
  for (const auto* name : {"chrome-windows", "edge-windows", "chrome-unix", "chrome-android"}) {
    const auto p = profile_named(name);
    const auto r = ratios_of(sample_dataset(std::span(&p, 1), 10000, 2024));
    const auto m1 = moments(r.ss1), m2 = moments(r.ss2);
    expect_within(m1.mean, 5.59, 0.15, std::string(name) + " SS1 mean");
    expect_within(m2.mean, 6.21, 0.15, std::string(name) + " SS2 mean");
    expect_within(m1.stddev, 1.26, 0.15, std::string(name) + " SS1 std");
    expect_within(m2.stddev, 1.40, 0.15, std::string(name) + " SS2 std");
  }
}

TEST(Calibration, FirefoxProfilesMatchReferenceRatios) {
  for (const auto* name : {"firefox-windows", "firefox-unix"}) {
    const auto p = profile_named(name);
    const auto r = ratios_of(sample_dataset(std::span(&p, 1), 10000, 2025));
    const auto m1 = moments(r.ss1), m2 = moments(r.ss2);
    expect_within(m1.mean, 1.67, 0.15, std::string(name) + " SS1 mean");
    expect_within(m2.mean, 1.98, 0.15, std::string(name) + " SS2 mean");
    expect_within(m1.stddev, 0.68, 0.15, std::string(name) + " SS1 std");
    expect_within(m2.stddev, 1.57, 0.15, std::string(name) + " SS2 std");
  }
}

TEST(Calibration, IosIsFlatAroundTwentyOneMs) {
  const auto p = profile_named("safari-ios");
  EXPECT_DOUBLE_EQ(p.setter_inflation.ss1, 1.0);
  EXPECT_DOUBLE_EQ(p.setter_inflation.ss2, 1.0);
  const auto db = sample_dataset(std::span(&p, 1), 10000, 77);
  expect_within(db.matrix().mean(), 21.0, 0.05, "iOS all-test mean");
  const auto r = ratios_of(db);
  expect_within(moments(r.ss1).mean, 1.0, 0.1, "iOS SS1 ratio");
}

TEST(Calibration, ClosedFormMoments) {
  // R = c Xs / Xg, both log-normal with one mean: E[R] = c (1 + cv_g^2),
  // Var[R] = E[R]^2 ((1 + cv_s^2)(1 + cv_g^2) - 1).
  const double cvg = 0.1421;
  for (RatioMoments target : {RatioMoments{5.59, 1.26}, RatioMoments{1.98, 1.57}, RatioMoments{1.67, 0.68}}) {
    const auto cal = calibrate_setter(target, cvg);
    const double mean = cal.inflation * (1.0 + cvg * cvg);
    const double cv2 = (1.0 + cal.setter_spread * cal.setter_spread) * (1.0 + cvg * cvg) - 1.0;
    EXPECT_NEAR(mean, target.mean, 1e-9 * target.mean);
    EXPECT_NEAR(std::sqrt(cv2) * mean, target.stddev, 1e-9 * target.stddev);
  }
  EXPECT_THROW(calibrate_setter({5.0, 0.1}, 0.5), DataError);
}

TEST(Counts, SplitByEngine) {
  const auto profiles = builtin_profiles();
  const auto counts = split_engine_counts(profiles, 87, 55);
  ASSERT_EQ(counts.size(), profiles.size());
  std::size_t chromium = 0, firefox = 0, rest = 0;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const auto& b = profiles[i].label.browser;
    if (is_chromium_browser(b))
      chromium += counts[i];
    else if (b == "Firefox")
      firefox += counts[i];
    else
      rest += counts[i];
  }
  EXPECT_EQ(chromium, 87u);
  EXPECT_EQ(firefox, 55u);
  EXPECT_EQ(rest, 0u);
}
