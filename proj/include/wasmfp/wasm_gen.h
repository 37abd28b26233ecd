#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wasmfp/catalog.h"

namespace wasmfp {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::uint8_t kWasmPreamble[8] = {0x00, 0x61, 0x73, 0x6D, 0x01, 0x00, 0x00, 0x00};

struct WasmModuleBlob {
  int test_id = 0;
  Bytes bytes;
  std::vector<std::string> exports;
};

void append_uleb128(Bytes& out, std::uint64_t value);
void append_sleb128(Bytes& out, std::int64_t value);

/// Minimal MVP module assembler. Function bodies are raw instruction bytes
/// without the trailing `end`; locals are given as (count, type) runs.
class ModuleBuilder {
 public:
  struct LocalRun {
    std::uint32_t count;
    ValType type;
  };

  std::uint32_t add_type(const FunctionSignature& sig);
  std::uint32_t add_import(const ImportSpec& import);
  std::uint32_t add_function(const FunctionSignature& sig, std::vector<LocalRun> locals, Bytes body);
  std::uint32_t add_global(ValType type, bool mutable_, std::int32_t init);
  void add_export(const std::string& name, std::uint32_t function_index);

  Bytes finish() const;
  const std::vector<std::string>& export_names() const { return export_names_; }

 private:
  struct Function {
    std::uint32_t type_index;
    std::vector<LocalRun> locals;
    Bytes body;
  };
  struct Global {
    ValType type;
    bool mutable_;
    std::int32_t init;
  };

  std::vector<FunctionSignature> types_;
  std::vector<std::pair<ImportSpec, std::uint32_t>> imports_;
  std::vector<Function> functions_;
  std::vector<Global> globals_;
  std::vector<std::pair<std::string, std::uint32_t>> exports_;
  std::vector<std::string> export_names_;
};

/// Builds the module backing timing test `test_id` (1..20). Output is
/// byte-identical across calls. Throws std::out_of_range for other ids.
WasmModuleBlob emit_module(int test_id);

}  // namespace wasmfp
