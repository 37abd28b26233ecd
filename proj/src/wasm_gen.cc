#include "wasmfp/wasm_gen.h"

#include <algorithm>
#include <bit>
#include <cstring>
#include <stdexcept>

namespace wasmfp {

namespace {

namespace op {
constexpr std::uint8_t loop = 0x03;
constexpr std::uint8_t if_ = 0x04;
constexpr std::uint8_t else_ = 0x05;
constexpr std::uint8_t end = 0x0B;
constexpr std::uint8_t br_if = 0x0D;
constexpr std::uint8_t call = 0x10;
constexpr std::uint8_t local_get = 0x20;
constexpr std::uint8_t local_set = 0x21;
constexpr std::uint8_t global_get = 0x23;
constexpr std::uint8_t global_set = 0x24;
constexpr std::uint8_t i32_const = 0x41;
constexpr std::uint8_t f64_const = 0x44;
constexpr std::uint8_t i32_lt_s = 0x48;
constexpr std::uint8_t i32_add = 0x6A;
constexpr std::uint8_t block_empty = 0x40;
}  // namespace op

enum SectionId : std::uint8_t {
  kTypeSection = 1,
  kImportSection = 2,
  kFunctionSection = 3,
  kGlobalSection = 6,
  kExportSection = 7,
  kCodeSection = 10,
};

constexpr std::uint8_t kFuncTypeTag = 0x60;
constexpr std::uint8_t kExternFunc = 0x00;

void append_name(Bytes& out, const std::string& name) {
  append_uleb128(out, name.size());
  out.insert(out.end(), name.begin(), name.end());
}

void append_section(Bytes& out, std::uint8_t id, const Bytes& payload) {
  out.push_back(id);
  append_uleb128(out, payload.size());
  out.insert(out.end(), payload.begin(), payload.end());
}

void append_f64(Bytes& out, double value) {
  auto bits = std::bit_cast<std::uint64_t>(value);
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

// Small instruction-stream helper so module bodies read like WAT.
class Code {
 public:
  Code& local_get(std::uint32_t i) { return with_index(op::local_get, i); }
  Code& local_set(std::uint32_t i) { return with_index(op::local_set, i); }
  Code& global_get(std::uint32_t i) { return with_index(op::global_get, i); }
  Code& global_set(std::uint32_t i) { return with_index(op::global_set, i); }
  Code& call(std::uint32_t f) { return with_index(op::call, f); }
  Code& br_if(std::uint32_t depth) { return with_index(op::br_if, depth); }
  Code& i32_const(std::int32_t v) {
    bytes_.push_back(op::i32_const);
    append_sleb128(bytes_, v);
    return *this;
  }
  Code& f64_const(double v) {
    bytes_.push_back(op::f64_const);
    append_f64(bytes_, v);
    return *this;
  }
  Code& raw(std::uint8_t b) {
    bytes_.push_back(b);
    return *this;
  }
  Code& loop() { return raw(op::loop).raw(op::block_empty); }
  Code& if_(ValType result) { return raw(op::if_).raw(static_cast<std::uint8_t>(result)); }

  Bytes take() { return std::move(bytes_); }

 private:
  Code& with_index(std::uint8_t opcode, std::uint32_t index) {
    bytes_.push_back(opcode);
    append_uleb128(bytes_, index);
    return *this;
  }
  Bytes bytes_;
};

using V = ValType;

const FunctionSignature kArity0{{}, {V::i32}};
const FunctionSignature kArity1{{V::i32}, {V::i32}};
const FunctionSignature kArity2{{V::i32, V::i32}, {V::i32}};

void build_cos_loop(ModuleBuilder& m, const ImportSpec& cos) {
  auto cos_index = m.add_import(cos);
  // (param $iterations i32) (param $angle f64) (local $i i32) (local $result f64)
  // do { result = cos(angle); ++i } while (i < iterations)
  auto body = Code()
                  .i32_const(0).local_set(2)
                  .f64_const(0.0).local_set(3)
                  .loop()
                    .local_get(1).call(cos_index).local_set(3)
                    .local_get(2).i32_const(1).raw(op::i32_add).local_set(2)
                    .local_get(2).local_get(0).raw(op::i32_lt_s).br_if(0)
                  .raw(op::end)
                  .local_get(3)
                  .take();
  auto f = m.add_function({{V::i32, V::f64}, {V::f64}}, {{1, V::i32}, {1, V::f64}}, std::move(body));
  m.add_export("callCosInLoop", f);
}

void build_js_call_loop(ModuleBuilder& m, const ImportSpec& add) {
  auto add_index = m.add_import(add);
  // (param $iterations i32) (local $i i32) (local $acc i32)
  // do { acc = add(i, acc); ++i } while (i < iterations)
  auto body = Code()
                  .loop()
                    .local_get(1).local_get(2).call(add_index).local_set(2)
                    .local_get(1).i32_const(1).raw(op::i32_add).local_set(1)
                    .local_get(1).local_get(0).raw(op::i32_lt_s).br_if(0)
                  .raw(op::end)
                  .local_get(2)
                  .take();
  auto f = m.add_function({{V::i32}, {V::i32}}, {{2, V::i32}}, std::move(body));
  m.add_export("callAddInLoop", f);
}

void build_identity_call(ModuleBuilder& m, int arity, const std::string& name) {
  Bytes body;
  FunctionSignature sig;
  switch (arity) {
    case 0:
      sig = kArity0;
      body = Code().i32_const(0).take();
      break;
    case 1:
      sig = kArity1;
      body = Code().local_get(0).take();
      break;
    default:
      sig = kArity2;
      body = Code().local_get(0).local_get(1).raw(op::i32_add).take();
      break;
  }
  m.add_export(name, m.add_function(sig, {}, std::move(body)));
}

void build_accessor(ModuleBuilder& m, const std::string& name) {
  auto g = m.add_global(V::i32, true, 0);
  if (name == "get_global_zero") {
    m.add_export(name, m.add_function(kArity0, {}, Code().global_get(g).take()));
  } else if (name == "get_global_one") {
    m.add_export(name, m.add_function(kArity1, {}, Code().global_get(g).take()));
  } else if (name == "set_global_one") {
    m.add_export(name, m.add_function({{V::i32}, {}}, {}, Code().local_get(0).global_set(g).take()));
  } else {
    auto body = Code().local_get(0).local_get(1).raw(op::i32_add).global_set(g).take();
    m.add_export(name, m.add_function({{V::i32, V::i32}, {}}, {}, std::move(body)));
  }
}

void build_if_add(ModuleBuilder& m) {
  // if (a + 1 != 0) return a + b; else return 0
  auto body = Code()
                  .local_get(0).i32_const(1).raw(op::i32_add)
                  .if_(V::i32)
                    .local_get(0).local_get(1).raw(op::i32_add)
                  .raw(op::else_)
                    .i32_const(0)
                  .raw(op::end)
                  .take();
  m.add_export("if_add", m.add_function(kArity2, {}, std::move(body)));
}

}  // namespace

void append_uleb128(Bytes& out, std::uint64_t value) {
  do {
    std::uint8_t byte = value & 0x7F;
    value >>= 7;
    if (value != 0)
      byte |= 0x80;
    out.push_back(byte);
  } while (value != 0);
}

void append_sleb128(Bytes& out, std::int64_t value) {
  bool more = true;
  while (more) {
    std::uint8_t byte = value & 0x7F;
    value >>= 7;  // arithmetic shift
    bool sign_bit = (byte & 0x40) != 0;
    if ((value == 0 && !sign_bit) || (value == -1 && sign_bit))
      more = false;
    else
      byte |= 0x80;
    out.push_back(byte);
  }
}

std::uint32_t ModuleBuilder::add_type(const FunctionSignature& sig) {
  auto it = std::find(types_.begin(), types_.end(), sig);
  if (it != types_.end())
    return static_cast<std::uint32_t>(it - types_.begin());
  types_.push_back(sig);
  return static_cast<std::uint32_t>(types_.size() - 1);
}

std::uint32_t ModuleBuilder::add_import(const ImportSpec& import) {
  if (!functions_.empty())
    throw std::logic_error("imports must be added before defined functions");
  imports_.emplace_back(import, add_type(import.signature));
  return static_cast<std::uint32_t>(imports_.size() - 1);
}

std::uint32_t ModuleBuilder::add_function(const FunctionSignature& sig, std::vector<LocalRun> locals,
                                          Bytes body) {
  functions_.push_back({add_type(sig), std::move(locals), std::move(body)});
  return static_cast<std::uint32_t>(imports_.size() + functions_.size() - 1);
}

std::uint32_t ModuleBuilder::add_global(ValType type, bool mutable_, std::int32_t init) {
  globals_.push_back({type, mutable_, init});
  return static_cast<std::uint32_t>(globals_.size() - 1);
}

void ModuleBuilder::add_export(const std::string& name, std::uint32_t function_index) {
  exports_.emplace_back(name, function_index);
  export_names_.push_back(name);
}

Bytes ModuleBuilder::finish() const {
  Bytes out(std::begin(kWasmPreamble), std::end(kWasmPreamble));

  if (!types_.empty()) {
    Bytes s;
    append_uleb128(s, types_.size());
    for (const auto& t : types_) {
      s.push_back(kFuncTypeTag);
      append_uleb128(s, t.params.size());
      for (auto p : t.params)
        s.push_back(static_cast<std::uint8_t>(p));
      append_uleb128(s, t.results.size());
      for (auto r : t.results)
        s.push_back(static_cast<std::uint8_t>(r));
    }
    append_section(out, kTypeSection, s);
  }

  if (!imports_.empty()) {
    Bytes s;
    append_uleb128(s, imports_.size());
    for (const auto& [imp, type_index] : imports_) {
      append_name(s, imp.module);
      append_name(s, imp.name);
      s.push_back(kExternFunc);
      append_uleb128(s, type_index);
    }
    append_section(out, kImportSection, s);
  }

  if (!functions_.empty()) {
    Bytes s;
    append_uleb128(s, functions_.size());
    for (const auto& f : functions_)
      append_uleb128(s, f.type_index);
    append_section(out, kFunctionSection, s);
  }

  if (!globals_.empty()) {
    Bytes s;
    append_uleb128(s, globals_.size());
    for (const auto& g : globals_) {
      s.push_back(static_cast<std::uint8_t>(g.type));
      s.push_back(g.mutable_ ? 0x01 : 0x00);
      s.push_back(op::i32_const);
      append_sleb128(s, g.init);
      s.push_back(op::end);
    }
    append_section(out, kGlobalSection, s);
  }

  if (!exports_.empty()) {
    Bytes s;
    append_uleb128(s, exports_.size());
    for (const auto& [name, index] : exports_) {
      append_name(s, name);
      s.push_back(kExternFunc);
      append_uleb128(s, index);
    }
    append_section(out, kExportSection, s);
  }

  if (!functions_.empty()) {
    Bytes s;
    append_uleb128(s, functions_.size());
    for (const auto& f : functions_) {
      Bytes entry;
      append_uleb128(entry, f.locals.size());
      for (const auto& run : f.locals) {
        append_uleb128(entry, run.count);
        entry.push_back(static_cast<std::uint8_t>(run.type));
      }
      entry.insert(entry.end(), f.body.begin(), f.body.end());
      entry.push_back(op::end);
      append_uleb128(s, entry.size());
      s.insert(s.end(), entry.begin(), entry.end());
    }
    append_section(out, kCodeSection, s);
  }

  return out;
}

WasmModuleBlob emit_module(int test_id) {
  if (test_id < 1 || test_id > static_cast<int>(kTestCount))
    throw std::out_of_range("test id " + std::to_string(test_id) + " outside 1.." +
                            std::to_string(kTestCount));

  const auto desc = catalog()[static_cast<std::size_t>(test_id - 1)];
  ModuleBuilder m;
  switch (test_id) {
    case 1:
      build_cos_loop(m, desc.required_imports.at(0));
      break;
    case 2:
      build_js_call_loop(m, desc.required_imports.at(0));
      break;
    case 3:
      build_identity_call(m, 0, desc.required_exports.at(0));
      break;
    case 4:
      build_identity_call(m, 1, desc.required_exports.at(0));
      break;
    case 9:
    case 10:
    case 11:
    case 12:
      build_accessor(m, desc.required_exports.at(0));
      break;
    case 19:
      build_if_add(m);
      break;
    case 20:
      // if-add-js runs entirely in the harness; the preamble alone is a valid module.
      break;
    default:
      build_identity_call(m, 2, desc.required_exports.at(0));
      break;
  }
  return {test_id, m.finish(), m.export_names()};
}

}  // namespace wasmfp
