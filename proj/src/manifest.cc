#include "wasmfp/manifest.h"

#include <cstdio>

#include "wasmfp/wasm_gen.h"

namespace wasmfp {

std::string wasm_file_name(int test_id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "test-%02d.wasm", test_id);
  return buf;
}

Json wasm_manifest(std::uint32_t iterations) {
  Json tests = Json::array();
  for (const auto& d : catalog(iterations)) {
    Json imports = Json::array();
    for (const auto& imp : d.required_imports)
      imports.push_back({{"module", imp.module}, {"name", imp.name}, {"signature", imp.signature.to_string()}});
    tests.push_back({{"id", d.id},
                     {"name", d.name},
                     {"file", wasm_file_name(d.id)},
                     {"url", "/wasm/" + std::to_string(d.id)},
                     {"exports", emit_module(d.id).exports},
                     {"imports", std::move(imports)},
                     {"default_iterations", d.default_iterations}});
  }
  return {{"tests", std::move(tests)}};
}

}  // namespace wasmfp
