#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace wasmfp {

enum class ValType : std::uint8_t {
  i32 = 0x7F,
  i64 = 0x7E,
  f32 = 0x7D,
  f64 = 0x7C,
};

std::string_view to_string(ValType type);

struct FunctionSignature {
  std::vector<ValType> params;
  std::vector<ValType> results;

  bool operator==(const FunctionSignature&) const = default;

  /// Renders as "(i32, i32) -> i32"; an empty result list renders as "()".
  std::string to_string() const;
};

struct ImportSpec {
  std::string module;
  std::string name;
  FunctionSignature signature;
};

/// Static definition of one timing test: what the probe harness runs and
/// which wasm entry points it expects to find.
struct TimingTestDescriptor {
  int id = 0;
  std::string name;
  std::string description;
  std::vector<std::string> required_exports;
  std::vector<ImportSpec> required_imports;
  std::uint32_t default_iterations = 0;
};

inline constexpr std::size_t kTestCount = 20;
inline constexpr std::uint32_t kDefaultIterations = 100'000;

// Catalog positions (zero-based) of the tests the engine classifier reads.
inline constexpr std::size_t kScriptedGetter0 = 8;
inline constexpr std::size_t kScriptedSetter1 = 10;
inline constexpr std::size_t kScriptedSetter2 = 11;

/// The twenty timing tests in canonical order. Identical on every call for a
/// given iteration count.
std::vector<TimingTestDescriptor> catalog(std::uint32_t iterations = kDefaultIterations);

/// Canonical test names in catalog order.
const std::vector<std::string>& test_names();

/// name -> zero-based catalog position.
std::unordered_map<std::string, std::size_t> test_index_map();

std::optional<std::size_t> find_test(std::string_view name);

}  // namespace wasmfp
