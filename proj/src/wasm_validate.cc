#include "wasmfp/wasm_validate.h"

#include <algorithm>
#include <array>
#include <cstring>
#include <optional>
#include <set>

namespace wasmfp {

bool ValidationReport::has(std::string_view message_prefix) const {
  return std::any_of(defects.begin(), defects.end(), [&](const ValidationDefect& d) {
    return std::string_view(d.message).substr(0, message_prefix.size()) == message_prefix;
  });
}

std::string ValidationReport::summary() const {
  if (ok())
    return "ok";
  std::string out;
  for (const auto& d : defects) {
    if (!out.empty())
      out += "; ";
    out += d.message + " @" + std::to_string(d.offset);
  }
  return out;
}

namespace {

// Thrown inside the decoder only; converted to a defect at the boundary.
struct DecodeError {
  std::size_t offset;
  std::string message;
};

class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, std::size_t base, std::string overrun_message)
      : bytes_(bytes), base_(base), overrun_(std::move(overrun_message)) {}

  bool at_end() const { return pos_ == bytes_.size(); }
  std::size_t offset() const { return base_ + pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  std::uint8_t u8() {
    if (pos_ >= bytes_.size())
      fail(overrun_);
    return bytes_[pos_++];
  }

  std::uint32_t u32() {
    std::uint64_t result = 0;
    const auto start = offset();
    for (int shift = 0; shift < 35; shift += 7) {
      auto b = u8();
      if (shift == 28 && (b & 0x70) != 0)
        throw DecodeError{start, "malformed LEB128: u32 overflow"};
      result |= static_cast<std::uint64_t>(b & 0x7F) << shift;
      if ((b & 0x80) == 0)
        return static_cast<std::uint32_t>(result);
    }
    throw DecodeError{start, "malformed LEB128: u32 longer than 5 bytes"};
  }

  void skip_sleb(int bits) {
    const auto start = offset();
    const int max_bytes = (bits + 6) / 7;
    for (int i = 0; i < max_bytes; ++i) {
      if ((u8() & 0x80) == 0)
        return;
    }
    throw DecodeError{start, "malformed LEB128: s" + std::to_string(bits) + " too long"};
  }

  std::span<const std::uint8_t> take(std::size_t n) {
    if (n > remaining())
      fail(overrun_);
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  std::string name() {
    auto n = u32();
    auto raw = take(n);
    return std::string(raw.begin(), raw.end());
  }

  [[noreturn]] void fail(const std::string& message) const { throw DecodeError{offset(), message}; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t base_;
  std::size_t pos_ = 0;
  std::string overrun_;
};

bool is_valtype(std::uint8_t b) {
  // numeric types plus v128 and the two reference types
  return (b >= 0x7C && b <= 0x7F) || b == 0x7B || b == 0x70 || b == 0x6F;
}

// Position of each known section id in the mandated order. Custom (0) may
// appear anywhere and is not ranked.
std::optional<int> section_rank(std::uint8_t id) {
  static constexpr std::array<int, 13> rank = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 11, 12, 10};
  if (id == 0 || id >= rank.size())
    return std::nullopt;
  return rank[id];
}

class Decoder {
 public:
  explicit Decoder(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void run(ValidationReport& report) {
    report_ = &report;
    try {
      preamble();
      sections();
    } catch (const DecodeError& e) {
      defect(e.offset, e.message);
      return;
    }
    cross_checks();
  }

 private:
  void defect(std::size_t offset, std::string message) {
    report_->defects.push_back({offset, std::move(message)});
  }

  void preamble() {
    static constexpr std::uint8_t magic[4] = {0x00, 0x61, 0x73, 0x6D};
    static constexpr std::uint8_t version[4] = {0x01, 0x00, 0x00, 0x00};
    if (bytes_.size() < 4)
      throw DecodeError{bytes_.size(), "unexpected end: missing magic"};
    if (std::memcmp(bytes_.data(), magic, 4) != 0)
      throw DecodeError{0, "bad magic"};
    if (bytes_.size() < 8)
      throw DecodeError{bytes_.size(), "unexpected end: missing version"};
    if (std::memcmp(bytes_.data() + 4, version, 4) != 0)
      throw DecodeError{4, "bad version"};
  }

  void sections() {
    Reader top(bytes_.subspan(8), 8, "unexpected end");
    int last_rank = 0;
    std::set<std::uint8_t> seen;
    while (!top.at_end()) {
      const auto header_offset = top.offset();
      const auto id = top.u8();
      const auto size = top.u32();
      if (size > top.remaining())
        throw DecodeError{header_offset, "unexpected end: section " + std::to_string(id) + " declares " +
                                             std::to_string(size) + " bytes, " +
                                             std::to_string(top.remaining()) + " available"};
      const auto payload_offset = top.offset();
      Reader section(top.take(size), payload_offset,
                     "section size mismatch: section " + std::to_string(id) + " overruns its length");

      if (id != 0) {
        auto rank = section_rank(id);
        if (!rank)
          throw DecodeError{header_offset, "unknown section id " + std::to_string(id)};
        if (seen.count(id))
          throw DecodeError{header_offset, "duplicate section " + std::to_string(id)};
        if (*rank < last_rank)
          throw DecodeError{header_offset, "section out of order: " + std::to_string(id)};
        last_rank = *rank;
        seen.insert(id);
      }

      switch (id) {
        case 0:
          section.name();
          section.take(section.remaining());
          break;
        case 1:
          type_section(section);
          break;
        case 2:
          import_section(section);
          break;
        case 3:
          function_section(section);
          break;
        case 4:
          table_section(section);
          break;
        case 5:
          memory_section(section);
          break;
        case 6:
          global_section(section);
          break;
        case 7:
          export_section(section);
          break;
        case 10:
          code_section(section);
          break;
        default:
          // start, element, data, datacount: outside what the generator emits
          section.take(section.remaining());
          break;
      }
      if (!section.at_end())
        throw DecodeError{section.offset(), "section size mismatch: " + std::to_string(section.remaining()) +
                                                " trailing bytes in section " + std::to_string(id)};
    }
  }

  void type_section(Reader& r) {
    auto count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
      if (r.u8() != 0x60)
        r.fail("bad function type tag");
      for (int vec = 0; vec < 2; ++vec) {
        auto n = r.u32();
        for (std::uint32_t k = 0; k < n; ++k) {
          if (!is_valtype(r.u8()))
            r.fail("unknown value type");
        }
      }
      ++type_count_;
    }
  }

  void limits(Reader& r) {
    auto flag = r.u8();
    if (flag > 1)
      r.fail("bad limits flag");
    auto min = r.u32();
    if (flag == 1 && r.u32() < min)
      r.fail("limits maximum below minimum");
  }

  void table_type(Reader& r) {
    auto ref = r.u8();
    if (ref != 0x70 && ref != 0x6F)
      r.fail("bad table element type");
    limits(r);
  }

  void global_type(Reader& r) {
    if (!is_valtype(r.u8()))
      r.fail("unknown value type");
    if (r.u8() > 1)
      r.fail("bad global mutability");
  }

  void import_section(Reader& r) {
    auto count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
      r.name();
      r.name();
      const auto at = r.offset();
      switch (r.u8()) {
        case 0: {
          auto type_index = r.u32();
          if (type_index >= type_count_)
            defect(at, "type index out of range: " + std::to_string(type_index));
          ++func_count_;
          break;
        }
        case 1:
          table_type(r);
          ++table_count_;
          break;
        case 2:
          limits(r);
          ++memory_count_;
          break;
        case 3:
          global_type(r);
          ++global_count_;
          break;
        default:
          r.fail("bad import kind");
      }
    }
  }

  void function_section(Reader& r) {
    auto count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
      const auto at = r.offset();
      auto type_index = r.u32();
      if (type_index >= type_count_)
        defect(at, "type index out of range: " + std::to_string(type_index));
    }
    declared_functions_ = count;
    func_count_ += count;
  }

  void table_section(Reader& r) {
    auto count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i)
      table_type(r);
    table_count_ += count;
  }

  void memory_section(Reader& r) {
    auto count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i)
      limits(r);
    memory_count_ += count;
  }

  void const_expr(Reader& r) {
    switch (r.u8()) {
      case 0x41:
        r.skip_sleb(32);
        break;
      case 0x42:
        r.skip_sleb(64);
        break;
      case 0x43:
        r.take(4);
        break;
      case 0x44:
        r.take(8);
        break;
      case 0x23:
      case 0xD2:
        r.u32();
        break;
      case 0xD0:
        r.u8();
        break;
      default:
        r.fail("unsupported constant expression");
    }
    if (r.u8() != 0x0B)
      r.fail("constant expression missing end");
  }

  void global_section(Reader& r) {
    auto count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
      global_type(r);
      const_expr(r);
    }
    global_count_ += count;
  }

  void export_section(Reader& r) {
    auto count = r.u32();
    std::set<std::string> names;
    for (std::uint32_t i = 0; i < count; ++i) {
      const auto at = r.offset();
      auto name = r.name();
      auto kind = r.u8();
      auto index = r.u32();
      std::uint32_t limit = 0;
      switch (kind) {
        case 0:
          limit = func_count_;
          break;
        case 1:
          limit = table_count_;
          break;
        case 2:
          limit = memory_count_;
          break;
        case 3:
          limit = global_count_;
          break;
        default:
          r.fail("bad export kind");
      }
      if (index >= limit)
        defect(at, "export index out of range: '" + name + "'");
      if (!names.insert(name).second)
        defect(at, "duplicate export name '" + name + "'");
      report_->exports.push_back(std::move(name));
    }
  }

  void code_section(Reader& r) {
    auto count = r.u32();
    code_entries_ = count;
    for (std::uint32_t i = 0; i < count; ++i) {
      auto size = r.u32();
      const auto body_offset = r.offset();
      Reader body(r.take(size), body_offset, "unexpected end: function body overruns its length");
      auto runs = body.u32();
      std::uint64_t total_locals = 0;
      for (std::uint32_t k = 0; k < runs; ++k) {
        total_locals += body.u32();
        if (!is_valtype(body.u8()))
          body.fail("unknown value type");
      }
      if (total_locals > 0xFFFFFFFFull)
        body.fail("too many locals");
      auto rest = body.take(body.remaining());
      if (rest.empty() || rest.back() != 0x0B)
        defect(body_offset, "function body missing end");
    }
  }

  void cross_checks() {
    if (declared_functions_ != code_entries_)
      defect(bytes_.size(), "function/code count mismatch: " + std::to_string(declared_functions_) +
                                " declared, " + std::to_string(code_entries_) + " bodies");
  }

  std::span<const std::uint8_t> bytes_;
  ValidationReport* report_ = nullptr;
  std::uint32_t type_count_ = 0;
  std::uint32_t func_count_ = 0;
  std::uint32_t table_count_ = 0;
  std::uint32_t memory_count_ = 0;
  std::uint32_t global_count_ = 0;
  std::uint32_t declared_functions_ = 0;
  std::uint32_t code_entries_ = 0;
};

}  // namespace

ValidationReport validate_bytes(std::span<const std::uint8_t> bytes,
                                std::span<const std::string> expected_exports) {
  ValidationReport report;
  Decoder(bytes).run(report);
  for (const auto& name : expected_exports) {
    if (std::find(report.exports.begin(), report.exports.end(), name) == report.exports.end())
      report.defects.push_back({bytes.size(), "missing export '" + name + "'"});
  }
  return report;
}

ValidationReport validate_module(const WasmModuleBlob& blob) {
  return validate_bytes(blob.bytes, blob.exports);
}

}  // namespace wasmfp
