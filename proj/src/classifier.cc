#include "wasmfp/classifier.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>

#include "wasmfp/catalog.h"
#include "wasmfp/errors.h"

namespace wasmfp {

SetterRatios::SetterRatios(double ss1, double ss2) : ss1_over_sg0(ss1), ss2_over_sg0(ss2) {
  if (!std::isfinite(ss1) || !std::isfinite(ss2) || ss1 <= 0.0 || ss2 <= 0.0)
    throw DataError("setter ratios must be finite and positive");
}

ClassifierConfig::ClassifierConfig(double ss1, double ss2) : ss1_threshold(ss1), ss2_threshold(ss2) {
  if (!std::isfinite(ss1) || !std::isfinite(ss2) || ss1 <= 0.0 || ss2 <= 0.0)
    throw DataError("classifier thresholds must be finite and positive");
}

SetterRatios compute_ratios(double ss1_ms, double ss2_ms, double sg0_ms) {
  if (!(sg0_ms > 0.0) || !std::isfinite(sg0_ms))
    throw DataError("scripted-getter-0 timing must be positive (corrupted or truncated probe run?)");
  return SetterRatios(ss1_ms / sg0_ms, ss2_ms / sg0_ms);
}

SetterRatios compute_ratios(const FingerprintVector& fp,
                            const std::unordered_map<std::string, std::size_t>& positions) {
  auto lookup = [&](std::size_t catalog_pos) {
    const auto& name = test_names()[catalog_pos];
    auto it = positions.find(name);
    if (it == positions.end() || it->second >= fp.size())
      throw DataError("fingerprint has no entry for " + name);
    return fp[it->second];
  };
  return compute_ratios(lookup(kScriptedSetter1), lookup(kScriptedSetter2), lookup(kScriptedGetter0));
}

SetterRatios compute_ratios(const FingerprintVector& fp) {
  static const auto positions = test_index_map();
  return compute_ratios(fp, positions);
}

ChromiumVerdict is_chromium(const SetterRatios& ratios, const ClassifierConfig& config) {
  const bool chromium =
      ratios.ss1_over_sg0 >= config.ss1_threshold && ratios.ss2_over_sg0 >= config.ss2_threshold;
  return {ratios, config, chromium};
}

ChromiumVerdict classify(const FingerprintVector& fp, const ClassifierConfig& config) {
  return is_chromium(compute_ratios(fp), config);
}

double Evaluation::accuracy() const {
  const auto n = total();
  return n == 0 ? 0.0 : static_cast<double>(tp + tn) / static_cast<double>(n);
}

double Evaluation::false_positive_rate() const {
  return fp + tn == 0 ? 0.0 : static_cast<double>(fp) / static_cast<double>(fp + tn);
}

double Evaluation::false_negative_rate() const {
  return fn + tp == 0 ? 0.0 : static_cast<double>(fn) / static_cast<double>(fn + tp);
}

Evaluation evaluate(std::span<const LabeledRatios> dataset, const ClassifierConfig& config) {
  Evaluation e;
  for (const auto& sample : dataset) {
    const bool predicted = is_chromium(sample.ratios, config).is_chromium;
    if (sample.label == EngineClass::chromium)
      ++(predicted ? e.tp : e.fn);
    else
      ++(predicted ? e.fp : e.tn);
  }
  return e;
}

namespace {

ClassifierConfig grid_search(std::span<const LabeledRatios> dataset) {
  std::vector<double> ss1_candidates, ss2_candidates;
  for (const auto& s : dataset) {
    ss1_candidates.push_back(s.ratios.ss1_over_sg0);
    ss2_candidates.push_back(s.ratios.ss2_over_sg0);
  }
  for (auto* c : {&ss1_candidates, &ss2_candidates}) {
    std::sort(c->begin(), c->end());
    c->erase(std::unique(c->begin(), c->end()), c->end());
  }

  std::vector<const LabeledRatios*> by_ss2;
  for (const auto& s : dataset)
    by_ss2.push_back(&s);
  std::sort(by_ss2.begin(), by_ss2.end(),
            [](auto* a, auto* b) { return a->ratios.ss2_over_sg0 < b->ratios.ss2_over_sg0; });

  const auto others_total = static_cast<std::size_t>(std::count_if(
      dataset.begin(), dataset.end(), [](const auto& s) { return s.label == EngineClass::other; }));

  std::size_t best_correct = 0;
  ClassifierConfig best(ss1_candidates.front(), ss2_candidates.front());
  std::vector<const LabeledRatios*> passing;
  for (double t1 : ss1_candidates) {
    passing.clear();
    std::size_t pos_chromium = 0, pos_other = 0;
    for (auto* s : by_ss2) {
      if (s->ratios.ss1_over_sg0 >= t1) {
        passing.push_back(s);
        ++(s->label == EngineClass::chromium ? pos_chromium : pos_other);
      }
    }
    // Sweep t2 upward; samples below t2 drop out of the positive set.
    std::size_t cursor = 0;
    for (double t2 : ss2_candidates) {
      while (cursor < passing.size() && passing[cursor]->ratios.ss2_over_sg0 < t2) {
        --(passing[cursor]->label == EngineClass::chromium ? pos_chromium : pos_other);
        ++cursor;
      }
      const std::size_t correct = pos_chromium + (others_total - pos_other);
      if (correct > best_correct) {
        best_correct = correct;
        best = ClassifierConfig(t1, t2);
      }
    }
  }
  return best;
}

}  // namespace

FitReport fit_thresholds(std::span<const LabeledRatios> dataset, FitMode mode) {
  FitReport report;
  for (const auto& s : dataset)
    ++(s.label == EngineClass::chromium ? report.chromium_count : report.other_count);
  if (report.chromium_count == 0 || report.other_count == 0)
    throw DataError("threshold fitting needs at least one chromium and one other sample");

  if (mode == FitMode::chromium_minimum) {
    double ss1 = std::numeric_limits<double>::infinity();
    double ss2 = std::numeric_limits<double>::infinity();
    for (const auto& s : dataset) {
      if (s.label != EngineClass::chromium)
        continue;
      ss1 = std::min(ss1, s.ratios.ss1_over_sg0);
      ss2 = std::min(ss2, s.ratios.ss2_over_sg0);
    }
    report.config = ClassifierConfig(ss1, ss2);
  } else {
    report.config = grid_search(dataset);
  }
  report.evaluation = evaluate(dataset, report.config);
  return report;
}

bool is_chromium_browser(std::string_view browser) {
  std::string lower(browser);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (const char* family : {"chrome", "chromium", "edge", "opera", "brave", "vivaldi", "samsung"}) {
    if (lower.find(family) != std::string::npos)
      return true;
  }
  return false;
}

std::vector<LabeledRatios> labeled_ratios(const FingerprintDatabase& db) {
  std::unordered_map<std::string, std::size_t> positions;
  for (std::size_t i = 0; i < db.tests().size(); ++i)
    positions.emplace(db.tests()[i], i);
  std::vector<LabeledRatios> out;
  out.reserve(static_cast<std::size_t>(db.size()));
  for (Eigen::Index c = 0; c < db.size(); ++c) {
    const auto& label = db.labels()[static_cast<std::size_t>(c)];
    out.push_back({compute_ratios(db.column(c), positions),
                   is_chromium_browser(label.browser) ? EngineClass::chromium : EngineClass::other});
  }
  return out;
}

Json to_json(const SetterRatios& r) {
  return {{"ss1_over_sg0", r.ss1_over_sg0}, {"ss2_over_sg0", r.ss2_over_sg0}};
}

Json to_json(const ClassifierConfig& c) {
  return {{"ss1_threshold", c.ss1_threshold}, {"ss2_threshold", c.ss2_threshold}};
}

Json to_json(const ChromiumVerdict& v) {
  return {{"is_chromium", v.is_chromium}, {"ratios", to_json(v.ratios)}, {"config", to_json(v.config)}};
}

Json to_json(const Evaluation& e) {
  return {{"tp", e.tp},
          {"fp", e.fp},
          {"tn", e.tn},
          {"fn", e.fn},
          {"total", e.total()},
          {"accuracy", e.accuracy()},
          {"fpr", e.false_positive_rate()},
          {"fnr", e.false_negative_rate()}};
}

Json to_json(const FitReport& r) {
  return {{"config", to_json(r.config)},
          {"report",
           {{"chromium_count", r.chromium_count},
            {"other_count", r.other_count},
            {"confusion", to_json(r.evaluation)}}}};
}

ChromiumVerdict verdict_from_json(const Json& j) {
  try {
    const auto& r = j.at("ratios");
    const auto& c = j.at("config");
    return {SetterRatios(r.at("ss1_over_sg0").get<double>(), r.at("ss2_over_sg0").get<double>()),
            ClassifierConfig(c.at("ss1_threshold").get<double>(), c.at("ss2_threshold").get<double>()),
            j.at("is_chromium").get<bool>()};
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed verdict JSON: ") + e.what());
  }
}

}  // namespace wasmfp
