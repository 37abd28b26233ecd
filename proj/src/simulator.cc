#include "wasmfp/simulator.h"

#include <array>
#include <cmath>
#include <numeric>
#include <random>

#include "wasmfp/catalog.h"
#include "wasmfp/classifier.h"
#include "wasmfp/errors.h"

namespace wasmfp {

void ClassProfile::validate() const {
  if (per_test_mean.size() != kTestCount || per_test_spread.size() != kTestCount)
    throw DataError("profile " + name + " needs " + std::to_string(kTestCount) + " means and spreads");
  for (std::size_t i = 0; i < kTestCount; ++i) {
    if (!(per_test_mean[i] > 0.0) || !std::isfinite(per_test_mean[i]))
      throw DataError("profile " + name + " has a non-positive mean for test " + std::to_string(i + 1));
    if (!(per_test_spread[i] >= 0.0) || !std::isfinite(per_test_spread[i]))
      throw DataError("profile " + name + " has a negative spread for test " + std::to_string(i + 1));
  }
  if (!(setter_inflation.ss1 > 0.0) || !(setter_inflation.ss2 > 0.0))
    throw DataError("profile " + name + " has a non-positive setter inflation");
  if (!(device_spread >= 0.0) || !std::isfinite(device_spread))
    throw DataError("profile " + name + " has an invalid device spread");
}

namespace {

// log-space variance of a log-normal with coefficient of variation cv
double log_variance(double cv) {
  return std::log1p(cv * cv);
}

// Chrome+Edge and Firefox setter/getter ratio moments of the reference
// measurements: {SS1/SG0, SS2/SG0}.
constexpr RatioMoments kChromiumSs1{5.59, 1.26};
constexpr RatioMoments kChromiumSs2{6.21, 1.40};
constexpr RatioMoments kFirefoxSs1{1.67, 0.68};
constexpr RatioMoments kFirefoxSs2{1.98, 1.57};

constexpr double kGetterSpread = 0.1421;  // log-variance ~0.02
constexpr double kTestSpread = 0.10;
constexpr double kDeviceSpread = 0.20;

using Shape = std::array<double, kTestCount>;

// Relative per-test cost by engine family; the setter slots are overwritten
// with the scripted-getter-0 value.
constexpr Shape kBlinkShape = {1.30, 1.15, 0.80, 0.85, 0.90, 1.05, 0.95, 1.10, 1.00, 1.05,
                               1.00, 1.00, 1.20, 1.25, 1.15, 1.20, 0.90, 0.95, 0.70, 0.75};
constexpr Shape kGeckoShape = {0.90, 0.85, 0.95, 0.95, 1.00, 1.00, 1.05, 1.10, 1.00, 1.00,
                               1.00, 1.00, 1.10, 1.10, 1.05, 1.10, 0.95, 1.00, 0.90, 0.95};
constexpr Shape kWebKitShape = {1.10, 1.00, 0.90, 0.90, 0.95, 1.00, 1.00, 1.05, 1.00, 1.05,
                                1.00, 1.00, 1.15, 1.15, 1.05, 1.10, 0.90, 0.95, 0.85, 0.90};

enum class RatioClass { chromium, firefox, flat };

ClassProfile make_profile(std::string name, Label label, const Shape& shape, double baseline_ms,
                          RatioClass ratios) {
  ClassProfile p;
  p.name = std::move(name);
  p.label = std::move(label);
  p.per_test_mean.resize(kTestCount);
  p.per_test_spread.assign(kTestCount, kTestSpread);
  p.device_spread = kDeviceSpread;

  double non_setter_sum = 0.0;
  for (std::size_t i = 0; i < kTestCount; ++i) {
    if (i != kScriptedSetter1 && i != kScriptedSetter2)
      non_setter_sum += shape[i];
  }
  const double scale = baseline_ms * static_cast<double>(kTestCount - 2) / non_setter_sum;
  for (std::size_t i = 0; i < kTestCount; ++i)
    p.per_test_mean[i] = shape[i] * scale;
  p.per_test_mean[kScriptedSetter1] = p.per_test_mean[kScriptedGetter0];
  p.per_test_mean[kScriptedSetter2] = p.per_test_mean[kScriptedGetter0];

  if (ratios == RatioClass::flat)
    return p;

  const bool chromium = ratios == RatioClass::chromium;
  const auto ss1 = calibrate_setter(chromium ? kChromiumSs1 : kFirefoxSs1, kGetterSpread);
  const auto ss2 = calibrate_setter(chromium ? kChromiumSs2 : kFirefoxSs2, kGetterSpread);
  p.per_test_spread[kScriptedGetter0] = kGetterSpread;
  p.per_test_spread[kScriptedSetter1] = ss1.setter_spread;
  p.per_test_spread[kScriptedSetter2] = ss2.setter_spread;
  p.setter_inflation = {ss1.inflation, ss2.inflation};
  return p;
}

// Log-normal draw with arithmetic mean `mean` and coefficient of variation `cv`.
double lognormal(double mean, double cv, double z) {
  const double var = log_variance(cv);
  return mean * std::exp(-0.5 * var + std::sqrt(var) * z);
}

}  // namespace

SetterCalibration calibrate_setter(RatioMoments target, double getter_spread) {
  if (!(target.mean > 0.0) || !(target.stddev > 0.0) || !(getter_spread > 0.0))
    throw DataError("ratio calibration needs positive mean, stddev and getter spread");
  // R = c * Xs / Xg with Xs, Xg log-normal sharing one mean:
  //   E[R] = c * exp(vg),  CV(R)^2 = exp(vs + vg) - 1
  const double vg = log_variance(getter_spread);
  const double total = log_variance(target.stddev / target.mean);
  const double vs = total - vg;
  if (!(vs > 0.0))
    throw DataError("target ratio spread is smaller than the getter spread allows");
  return {target.mean / std::exp(vg), std::sqrt(std::expm1(vs))};
}

std::vector<ClassProfile> builtin_profiles() {
  return {
      make_profile("chrome-windows", {"Chrome", "Windows", "desktop"}, kBlinkShape, 19.54, RatioClass::chromium),
      make_profile("edge-windows", {"Edge", "Windows", "desktop"}, kBlinkShape, 20.30, RatioClass::chromium),
      make_profile("firefox-windows", {"Firefox", "Windows", "desktop"}, kGeckoShape, 18.20, RatioClass::firefox),
      make_profile("chrome-unix", {"Chrome", "Unix", "desktop"}, kBlinkShape, 22.80, RatioClass::chromium),
      make_profile("firefox-unix", {"Firefox", "Unix", "desktop"}, kGeckoShape, 19.60, RatioClass::firefox),
      make_profile("safari-macos", {"Safari", "macOS", "desktop"}, kWebKitShape, 17.40, RatioClass::firefox),
      make_profile("chrome-android", {"Chrome", "Android", "smartphone"}, kBlinkShape, 36.50,
                   RatioClass::chromium),
      make_profile("safari-ios", {"Safari", "iOS", "smartphone"}, kWebKitShape, 21.00, RatioClass::flat),
  };
}

FingerprintDatabase sample_dataset(std::span<const ClassProfile> profiles, std::span<const std::size_t> counts,
                                   std::uint64_t seed) {
  if (profiles.empty())
    throw DataError("at least one profile is required");
  if (counts.size() != profiles.size())
    throw DataError("need one sample count per profile");
  const auto total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  if (total == 0)
    throw DataError("sample counts must not all be zero");

  Eigen::MatrixXd matrix(static_cast<Eigen::Index>(kTestCount), static_cast<Eigen::Index>(total));
  std::vector<Label> labels;
  labels.reserve(total);
  Eigen::Index column = 0;

  for (std::size_t p = 0; p < profiles.size(); ++p) {
    const auto& profile = profiles[p];
    profile.validate();
    // Independent, reproducible substream per profile.
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(p)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);

    for (std::size_t s = 0; s < counts[p]; ++s) {
      const double device = lognormal(1.0, profile.device_spread, normal(rng));
      for (std::size_t t = 0; t < kTestCount; ++t) {
        double value = device * lognormal(profile.per_test_mean[t], profile.per_test_spread[t], normal(rng));
        if (t == kScriptedSetter1)
          value *= profile.setter_inflation.ss1;
        else if (t == kScriptedSetter2)
          value *= profile.setter_inflation.ss2;
        matrix(static_cast<Eigen::Index>(t), column) = value;
      }
      labels.push_back(profile.label);
      ++column;
    }
  }
  return FingerprintDatabase(std::move(matrix), std::move(labels), test_names());
}

FingerprintDatabase sample_dataset(std::span<const ClassProfile> profiles, std::size_t count_per_profile,
                                   std::uint64_t seed) {
  std::vector<std::size_t> counts(profiles.size(), count_per_profile);
  return sample_dataset(profiles, counts, seed);
}

std::vector<std::size_t> split_engine_counts(std::span<const ClassProfile> profiles, std::size_t chromium_total,
                                             std::size_t firefox_total) {
  std::vector<std::size_t> chromium_idx, firefox_idx;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const auto& browser = profiles[i].label.browser;
    if (is_chromium_browser(browser))
      chromium_idx.push_back(i);
    else if (browser.find("Firefox") != std::string::npos)
      firefox_idx.push_back(i);
  }
  if ((chromium_total > 0 && chromium_idx.empty()) || (firefox_total > 0 && firefox_idx.empty()))
    throw DataError("profile selection lacks a Chromium or Firefox profile for the requested counts");

  std::vector<std::size_t> counts(profiles.size(), 0);
  auto spread = [&](const std::vector<std::size_t>& idx, std::size_t total) {
    if (idx.empty())
      return;
    const auto base = total / idx.size();
    const auto extra = total % idx.size();
    for (std::size_t k = 0; k < idx.size(); ++k)
      counts[idx[k]] = base + (k < extra ? 1 : 0);
  };
  spread(chromium_idx, chromium_total);
  spread(firefox_idx, firefox_total);
  return counts;
}

Json to_json(const ClassProfile& profile) {
  return {{"name", profile.name},
          {"label", to_json(profile.label)},
          {"per_test_mean", profile.per_test_mean},
          {"per_test_spread", profile.per_test_spread},
          {"setter_inflation", {{"ss1", profile.setter_inflation.ss1}, {"ss2", profile.setter_inflation.ss2}}},
          {"device_spread", profile.device_spread}};
}

}  // namespace wasmfp
