#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "wasmfp/fingerprint.h"

namespace wasmfp {

/// Scripted-setter timings normalised by the scripted-getter-0 timing.
struct SetterRatios {
  double ss1_over_sg0 = 0.0;
  double ss2_over_sg0 = 0.0;

  SetterRatios() = default;
  SetterRatios(double ss1, double ss2);  // validates: finite and > 0
};

struct ClassifierConfig {
  static constexpr double kDefaultSs1Threshold = 3.05;
  static constexpr double kDefaultSs2Threshold = 3.10;
  // Smallest scripted-setter-2 ratio seen among Chrome and Edge samples in
  // the reference measurements. Accepted as an alternative SS2 threshold.
  static constexpr double kChromiumMinimumSs2 = 3.38;

  double ss1_threshold = kDefaultSs1Threshold;
  double ss2_threshold = kDefaultSs2Threshold;

  ClassifierConfig() = default;
  ClassifierConfig(double ss1, double ss2);  // validates: both > 0
};

struct ChromiumVerdict {
  SetterRatios ratios;
  ClassifierConfig config;
  bool is_chromium = false;
};

/// Ratios from a raw timing vector. `positions` maps test names to vector
/// positions; the three scripted accessor tests must be present. Throws
/// DataError when an entry is missing or the getter timing is not positive.
SetterRatios compute_ratios(const FingerprintVector& fp,
                            const std::unordered_map<std::string, std::size_t>& positions);
SetterRatios compute_ratios(const FingerprintVector& fp);  // catalog order
SetterRatios compute_ratios(double ss1_ms, double ss2_ms, double sg0_ms);

/// Both ratios must reach their thresholds (inclusive).
ChromiumVerdict is_chromium(const SetterRatios& ratios, const ClassifierConfig& config = {});
ChromiumVerdict classify(const FingerprintVector& fp, const ClassifierConfig& config = {});

enum class EngineClass { chromium, other };

struct LabeledRatios {
  SetterRatios ratios;
  EngineClass label = EngineClass::other;
};

struct Evaluation {
  std::size_t tp = 0;  // chromium classified chromium
  std::size_t fp = 0;  // other classified chromium
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  double accuracy() const;
  double false_positive_rate() const;  // fp / (fp + tn); 0 with no negatives
  double false_negative_rate() const;  // fn / (fn + tp); 0 with no positives
};

Evaluation evaluate(std::span<const LabeledRatios> dataset, const ClassifierConfig& config);

enum class FitMode {
  chromium_minimum,  // per-ratio minimum over the chromium class
  grid_accuracy,     // exhaustive search over observed ratio values
};

struct FitReport {
  ClassifierConfig config;
  std::size_t chromium_count = 0;
  std::size_t other_count = 0;
  Evaluation evaluation;
};

/// Throws DataError unless both classes have at least one sample.
FitReport fit_thresholds(std::span<const LabeledRatios> dataset, FitMode mode = FitMode::chromium_minimum);

/// True for browsers built on the Chromium engine (Chrome, Edge, Opera, ...).
bool is_chromium_browser(std::string_view browser);

/// Labeled ratios from a fingerprint database, labeling columns by browser.
std::vector<LabeledRatios> labeled_ratios(const FingerprintDatabase& db);

Json to_json(const SetterRatios& r);
Json to_json(const ClassifierConfig& c);
Json to_json(const ChromiumVerdict& v);
Json to_json(const Evaluation& e);
Json to_json(const FitReport& r);
ChromiumVerdict verdict_from_json(const Json& j);

}  // namespace wasmfp
