#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wasmfp/wasm_gen.h"

namespace wasmfp {

struct ValidationDefect {
  std::size_t offset = 0;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationDefect> defects;
  std::vector<std::string> exports;  // names found in the export section

  bool ok() const { return defects.empty(); }
  bool has(std::string_view message_prefix) const;
  std::string summary() const;
};

// Structural check only: preamble, section order and sizes, LEB128
// encodings, type/import/function/global/export/code section contents and
// index ranges. Function bodies are not type-checked. Never throws on
// malformed input.
ValidationReport validate_bytes(std::span<const std::uint8_t> bytes,
                                std::span<const std::string> expected_exports = {});

ValidationReport validate_module(const WasmModuleBlob& blob);

}  // namespace wasmfp
