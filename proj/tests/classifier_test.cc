#include <gtest/gtest.h>

#include <random>

#include "wasmfp/catalog.h"
#include "wasmfp/classifier.h"
#include "wasmfp/errors.h"

using namespace wasmfp;

namespace {

FingerprintVector timings(double sg0, double ss1, double ss2, double other = 20.0) {
  std::vector<double> v(kTestCount, other);
  v[kScriptedGetter0] = sg0;
  v[kScriptedSetter1] = ss1;
  v[kScriptedSetter2] = ss2;
  return FingerprintVector(v);
}

LabeledRatios sample(double ss1, double ss2, EngineClass label) {
  return {SetterRatios(ss1, ss2), label};
}

}  // namespace

TEST(Ratios, BareMetalWindowsChromeMeans) {
  const auto r = compute_ratios(152.21, 161.14, 19.54);
  EXPECT_NEAR(r.ss1_over_sg0, 7.79, 0.005);
  EXPECT_NEAR(r.ss2_over_sg0, 8.25, 0.005);
}

TEST(Ratios, EqualTimingsGiveOne) {
  const auto r = compute_ratios(timings(5, 5, 5));
  EXPECT_DOUBLE_EQ(r.ss1_over_sg0, 1.0);
  EXPECT_DOUBLE_EQ(r.ss2_over_sg0, 1.0);
}

TEST(Ratios, ZeroGetterIsAnError) {
  EXPECT_THROW(compute_ratios(timings(0, 5, 5)), DataError);
  EXPECT_THROW(compute_ratios(3, 4, 0), DataError);
}

TEST(Ratios, MissingOrTruncatedEntries) {
  EXPECT_THROW(compute_ratios(FingerprintVector(std::vector<double>(5, 1.0))), DataError);
  std::unordered_map<std::string, std::size_t> positions{{"scripted-getter-0", 0}, {"scripted-setter-1", 1}};
  EXPECT_THROW(compute_ratios(FingerprintVector({1.0, 2.0, 3.0}), positions), DataError);
}

TEST(Ratios, NamedPositions) {
  std::unordered_map<std::string, std::size_t> positions{
      {"scripted-getter-0", 2}, {"scripted-setter-1", 0}, {"scripted-setter-2", 1}};
  const auto r = compute_ratios(FingerprintVector({10.0, 12.0, 2.0}), positions);
  EXPECT_DOUBLE_EQ(r.ss1_over_sg0, 5.0);
  EXPECT_DOUBLE_EQ(r.ss2_over_sg0, 6.0);
}

TEST(IsChromium, ReferenceAnchors) {
  const ClassifierConfig cfg(3.05, 3.10);
  EXPECT_TRUE(is_chromium({5.59, 6.21}, cfg).is_chromium);
  EXPECT_FALSE(is_chromium({1.67, 1.98}, cfg).is_chromium);
  EXPECT_FALSE(is_chromium({2.82, 3.10}, cfg).is_chromium);
  EXPECT_TRUE(is_chromium({4.31, 12.30}, cfg).is_chromium);
}

TEST(IsChromium, BoundaryInclusive) {
  EXPECT_TRUE(is_chromium({3.05, 3.10}).is_chromium);
  EXPECT_FALSE(is_chromium({3.05, 3.0999999}).is_chromium);
}

TEST(IsChromium, AlternativeSs2Threshold) {
  const ClassifierConfig strict(3.05, ClassifierConfig::kChromiumMinimumSs2);
  EXPECT_FALSE(is_chromium({3.2, 3.2}, strict).is_chromium);
  EXPECT_TRUE(is_chromium({3.2, 3.2}).is_chromium);
}

TEST(Classify, FromTimingVector) {
  EXPECT_TRUE(classify(timings(20.0, 111.8, 124.2)).is_chromium);
  EXPECT_FALSE(classify(timings(20.0, 33.4, 39.6)).is_chromium);
}

TEST(Config, RejectsNonPositive) {
  EXPECT_THROW(ClassifierConfig(0.0, 3.1), DataError);
  EXPECT_THROW(ClassifierConfig(3.05, -1.0), DataError);
  EXPECT_THROW(SetterRatios(0.0, 1.0), DataError);
}

TEST(Evaluate, OneFirefoxAboveThresholds) {
  std::vector<LabeledRatios> data;
  for (int i = 0; i < 87; ++i)
    data.push_back(sample(3.05 + 0.05 * i, 3.38 + 0.04 * i, EngineClass::chromium));
  for (int i = 0; i < 54; ++i)
    data.push_back(sample(1.0 + 0.03 * i, 1.2 + 0.03 * i, EngineClass::other));
  data.push_back(sample(4.31, 12.30, EngineClass::other));
  const auto e = evaluate(data, ClassifierConfig{});
  EXPECT_EQ(e.tp, 87u);
  EXPECT_EQ(e.fp, 1u);
  EXPECT_EQ(e.tn, 54u);
  EXPECT_EQ(e.fn, 0u);
  EXPECT_DOUBLE_EQ(e.accuracy(), 141.0 / 142.0);
  EXPECT_NEAR(e.accuracy(), 0.9930, 5e-5);
  EXPECT_DOUBLE_EQ(e.false_positive_rate(), 1.0 / 55.0);
  EXPECT_DOUBLE_EQ(e.false_negative_rate(), 0.0);
}

TEST(Evaluate, NoChromiumAllBelow) {
  std::vector<LabeledRatios> data{sample(1, 1, EngineClass::other), sample(2, 2, EngineClass::other)};
  const auto e = evaluate(data, ClassifierConfig{});
  EXPECT_DOUBLE_EQ(e.accuracy(), 1.0);
  EXPECT_DOUBLE_EQ(e.false_positive_rate(), 0.0);
}

TEST(Evaluate, RandomMatchesTally) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.5, 8.0);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<LabeledRatios> data;
    std::size_t tally[2][2] = {};  // [actual chromium][predicted chromium]
    for (int i = 0; i < 300; ++i) {
      const double a = u(rng), b = u(rng);
      const bool chromium = coin(rng);
      data.push_back(sample(a, b, chromium ? EngineClass::chromium : EngineClass::other));
      ++tally[chromium][a >= 3.05 && b >= 3.10];
    }
    const auto e = evaluate(data, ClassifierConfig{});
    EXPECT_EQ(e.tp, tally[1][1]);
    EXPECT_EQ(e.fn, tally[1][0]);
    EXPECT_EQ(e.fp, tally[0][1]);
    EXPECT_EQ(e.tn, tally[0][0]);
  }
}

TEST(Fit, ChromiumMinimum) {
  std::vector<LabeledRatios> data{sample(3.05, 4.0, EngineClass::chromium), sample(6.0, 3.38, EngineClass::chromium),
                                  sample(9.0, 9.0, EngineClass::chromium), sample(1.67, 1.98, EngineClass::other)};
  const auto report = fit_thresholds(data);
  EXPECT_DOUBLE_EQ(report.config.ss1_threshold, 3.05);
  EXPECT_DOUBLE_EQ(report.config.ss2_threshold, 3.38);
  EXPECT_EQ(report.chromium_count, 3u);
  EXPECT_EQ(report.other_count, 1u);
  EXPECT_DOUBLE_EQ(report.evaluation.accuracy(), 1.0);
}

TEST(Fit, SingleSamplePerClass) {
  std::vector<LabeledRatios> data{sample(5, 5, EngineClass::chromium), sample(1, 1, EngineClass::other)};
  for (auto mode : {FitMode::chromium_minimum, FitMode::grid_accuracy}) {
    const auto report = fit_thresholds(data, mode);
    EXPECT_DOUBLE_EQ(report.evaluation.accuracy(), 1.0);
  }
  const auto report = fit_thresholds(data);
  EXPECT_DOUBLE_EQ(report.config.ss1_threshold, 5.0);
  EXPECT_DOUBLE_EQ(report.config.ss2_threshold, 5.0);
}

TEST(Fit, GridBeatsMinimumWhenAChromiumOutlierExists) {
  std::vector<LabeledRatios> data;
  for (int i = 0; i < 20; ++i)
    data.push_back(sample(5.0 + i * 0.1, 6.0 + i * 0.1, EngineClass::chromium));
  data.push_back(sample(1.1, 1.1, EngineClass::chromium));  // outlier
  for (int i = 0; i < 20; ++i)
    data.push_back(sample(1.5 + i * 0.05, 1.8 + i * 0.05, EngineClass::other));
  const auto min_report = fit_thresholds(data, FitMode::chromium_minimum);
  const auto grid_report = fit_thresholds(data, FitMode::grid_accuracy);
  EXPECT_GT(grid_report.evaluation.accuracy(), min_report.evaluation.accuracy());
  EXPECT_DOUBLE_EQ(grid_report.evaluation.accuracy(), 40.0 / 41.0);
}

TEST(Fit, EmptyClassIsAnError) {
  std::vector<LabeledRatios> only_other{sample(1, 1, EngineClass::other)};
  std::vector<LabeledRatios> only_chromium{sample(5, 5, EngineClass::chromium)};
  EXPECT_THROW(fit_thresholds(only_other), DataError);
  EXPECT_THROW(fit_thresholds(only_chromium), DataError);
}

TEST(BrowserNames, ChromiumFamily) {
  EXPECT_TRUE(is_chromium_browser("Chrome"));
  EXPECT_TRUE(is_chromium_browser("Microsoft Edge"));
  EXPECT_FALSE(is_chromium_browser("Firefox"));
  EXPECT_FALSE(is_chromium_browser("Safari"));
}

TEST(Json, VerdictRoundTrip) {
  const auto v = is_chromium({5.59, 6.21});
  const auto back = verdict_from_json(to_json(v));
  EXPECT_EQ(back.is_chromium, v.is_chromium);
  EXPECT_DOUBLE_EQ(back.ratios.ss1_over_sg0, 5.59);
  EXPECT_DOUBLE_EQ(back.config.ss2_threshold, 3.10);
}
