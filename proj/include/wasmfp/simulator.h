#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wasmfp/fingerprint.h"

namespace wasmfp {

struct SetterInflation {
  double ss1 = 1.0;
  double ss2 = 1.0;
};

/// Timing model for one browser/OS/device class. Each test's timing is
/// log-normal with the given arithmetic mean (ms) and coefficient of
/// variation (`per_test_spread`); one extra log-normal speed factor with
/// mean 1 and coefficient of variation `device_spread` is drawn per sampled
/// device and multiplies every test. Scripted-setter tests are then scaled by
/// `setter_inflation`.
struct ClassProfile {
  std::string name;
  Label label;
  std::vector<double> per_test_mean;
  std::vector<double> per_test_spread;
  SetterInflation setter_inflation;
  double device_spread = 0.0;

  void validate() const;  // throws DataError
};

/// Target moments of a setter/getter ratio distribution.
struct RatioMoments {
  double mean = 0.0;
  double stddev = 0.0;
};

struct SetterCalibration {
  double inflation = 1.0;
  double setter_spread = 0.0;
};

/// Chooses the setter inflation and setter spread so that
/// inflation * X_setter / X_getter has the requested mean and standard
/// deviation, given the getter's coefficient of variation. Setter and getter
/// share the same base mean. Throws DataError when the target ratio is less
/// dispersed than the getter alone allows.
SetterCalibration calibrate_setter(RatioMoments target, double getter_spread);

/// Eight shipped profiles: Chrome, Edge and Firefox on Windows, Chrome and
/// Firefox on Unix, Safari on macOS, Chrome on Android, Safari on iOS.
std::vector<ClassProfile> builtin_profiles();

/// Columns ordered by profile, then by sample. Same inputs, same output.
FingerprintDatabase sample_dataset(std::span<const ClassProfile> profiles, std::span<const std::size_t> counts,
                                   std::uint64_t seed);
FingerprintDatabase sample_dataset(std::span<const ClassProfile> profiles, std::size_t count_per_profile,
                                   std::uint64_t seed);

/// Spreads `chromium_total` samples over the Chromium-engine profiles and
/// `firefox_total` over the Firefox profiles (earlier profiles take any
/// remainder). All other profiles get zero.
std::vector<std::size_t> split_engine_counts(std::span<const ClassProfile> profiles, std::size_t chromium_total,
                                             std::size_t firefox_total);

Json to_json(const ClassProfile& profile);

}  // namespace wasmfp
