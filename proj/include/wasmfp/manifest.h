#pragma once

#include <cstdint>
#include <string>

#include "wasmfp/catalog.h"
#include "wasmfp/fingerprint.h"

namespace wasmfp {

/// "test-01.wasm" ... "test-20.wasm"
std::string wasm_file_name(int test_id);

/// {"tests":[{"id","name","file","url","exports","imports","default_iterations"}...]}
/// shared by `gen-wasm` output and the service's /manifest.json.
Json wasm_manifest(std::uint32_t iterations = kDefaultIterations);

}  // namespace wasmfp
