#include "wasmfp/catalog.h"

#include <algorithm>

namespace wasmfp {

std::string_view to_string(ValType type) {
  switch (type) {
    case ValType::i32:
      return "i32";
    case ValType::i64:
      return "i64";
    case ValType::f32:
      return "f32";
    case ValType::f64:
      return "f64";
  }
  return "?";
}

std::string FunctionSignature::to_string() const {
  auto join = [](const std::vector<ValType>& types) {
    std::string out = "(";
    for (std::size_t i = 0; i < types.size(); ++i) {
      if (i != 0)
        out += ", ";
      out += wasmfp::to_string(types[i]);
    }
    return out + ")";
  };
  if (results.size() == 1)
    return join(params) + " -> " + std::string(wasmfp::to_string(results[0]));
  return join(params) + " -> " + join(results);
}

namespace {

using V = ValType;

struct Row {
  const char* name;
  const char* description;
  std::vector<std::string> exports;
  std::vector<ImportSpec> imports;
};

const std::vector<Row>& rows() {
  static const std::vector<Row> table = {
      {"math-builtin", "wasm loop calling the imported Math.cos",
       {"callCosInLoop"},
       {{"js", "cos", {{V::f64}, {V::f64}}}}},
      {"wasm-to-js", "wasm loop calling an imported two-argument JS function",
       {"callAddInLoop"},
       {{"js", "add", {{V::i32, V::i32}, {V::i32}}}}},
      {"call-known-0", "monomorphic call of a zero-arity export, 0 args", {"call0"}, {}},
      {"call-known-1", "monomorphic call of a one-arity export, 1 arg", {"call1"}, {}},
      {"call-known-2", "monomorphic call of a two-arity export, 2 args", {"call2"}, {}},
      {"call-known-2-r", "monomorphic call of a two-arity export, 1 arg", {"call2"}, {}},
      {"call-generic-2", "call site alternating JS and wasm callees, 2 args", {"call2"}, {}},
      {"call-generic-2-r", "call site alternating JS and wasm callees, 1 arg", {"call2"}, {}},
      {"scripted-getter-0", "accessor getter backed by a zero-arity export", {"get_global_zero"}, {}},
      {"scripted-getter-1", "accessor getter backed by a one-arity export", {"get_global_one"}, {}},
      {"scripted-setter-1", "accessor setter backed by a one-arity export", {"set_global_one"}, {}},
      {"scripted-setter-2", "accessor setter backed by a two-arity export", {"set_global_two"}, {}},
      {"F.p.apply-array", "Function.prototype.apply with an array, full arity", {"call2"}, {}},
      {"F.p.apply-array-r", "Function.prototype.apply with an array, one arg short", {"call2"}, {}},
      {"F.p.apply-args", "Function.prototype.apply with arguments, full arity", {"call2"}, {}},
      {"F.p.apply-args-r", "Function.prototype.apply with arguments, one arg short", {"call2"}, {}},
      {"F.p.call", "Function.prototype.call, full arity", {"call2"}, {}},
      {"F.p.call-r", "Function.prototype.call, one arg short", {"call2"}, {}},
      {"if-add-wasm", "export computing a+b when a+1 is non-zero", {"if_add"}, {}},
      {"if-add-js", "non-inlined JS function computing a+b when a+1 is non-zero", {}, {}},
  };
  return table;
}

}  // namespace

std::vector<TimingTestDescriptor> catalog(std::uint32_t iterations) {
  std::vector<TimingTestDescriptor> out;
  out.reserve(kTestCount);
  int id = 1;
  for (const auto& row : rows()) {
    out.push_back({id++, row.name, row.description, row.exports, row.imports, iterations});
  }
  return out;
}

const std::vector<std::string>& test_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& row : rows())
      n.emplace_back(row.name);
    return n;
  }();
  return names;
}

std::unordered_map<std::string, std::size_t> test_index_map() {
  std::unordered_map<std::string, std::size_t> map;
  const auto& names = test_names();
  for (std::size_t i = 0; i < names.size(); ++i)
    map.emplace(names[i], i);
  return map;
}

std::optional<std::size_t> find_test(std::string_view name) {
  const auto& names = test_names();
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end())
    return std::nullopt;
  return static_cast<std::size_t>(it - names.begin());
}

}  // namespace wasmfp
