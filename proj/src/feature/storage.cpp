#include "iatforge/feature/storage.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <sstream>

#include "iatforge/error.hpp"

namespace iatforge::feature::storage {

namespace {

constexpr char kRegistryHeader[] = "IATREG";
constexpr std::uint64_t kMaxCombinationPayloadBytes = std::uint64_t{1} << 30;

std::string escape_name(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    switch (c) {
      case '%': out += "%25"; break;
      case '\n': out += "%0A"; break;
      case '\r': out += "%0D"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string unescape_name(const std::string& escaped) {
  std::string out;
  out.reserve(escaped.size());
  for (std::size_t i = 0; i < escaped.size(); ++i) {
    if (escaped[i] == '%' && i + 2 < escaped.size()) {
      std::string hex = escaped.substr(i + 1, 2);
      if (hex == "25") { out.push_back('%'); i += 2; continue; }
      if (hex == "0A") { out.push_back('\n'); i += 2; continue; }
      if (hex == "0D") { out.push_back('\r'); i += 2; continue; }
    }
    out.push_back(escaped[i]);
  }
  return out;
}

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void raw(std::span<const std::uint8_t> data) { bytes_.insert(bytes_.end(), data.begin(), data.end()); }
  void magic(const char (&m)[5]) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(m[i]));
  }
  void crc() {
    std::uint32_t sum = static_cast<std::uint32_t>(::crc32(0, bytes_.data(), static_cast<uInt>(bytes_.size())));
    u32(sum);
  }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8() {
    need(1);
    return bytes_[at_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[at_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[at_++]) << (8 * i);
    return v;
  }
  std::span<const std::uint8_t> raw(std::uint64_t n) {
    need(n);
    auto out = bytes_.subspan(at_, static_cast<std::size_t>(n));
    at_ += static_cast<std::size_t>(n);
    return out;
  }
  void expect_magic(const char (&m)[5]) {
    if (bytes_.size() < 4 || std::memcmp(bytes_.data(), m, 4) != 0) {
      raise(Errc::bad_magic, std::string("expected magic ") + m);
    }
    at_ = 4;
  }
  /// Validates the trailing CRC32 over everything before it.
  void check_crc_and_finish() {
    std::size_t payload_end = at_;
    std::uint32_t stored = u32();
    if (at_ != bytes_.size()) raise(Errc::corrupt_payload, "trailing bytes after checksum");
    std::uint32_t computed =
        static_cast<std::uint32_t>(::crc32(0, bytes_.data(), static_cast<uInt>(payload_end)));
    if (stored != computed) raise(Errc::corrupt_payload, "checksum mismatch");
  }

 private:
  void need(std::uint64_t n) {
    if (at_ > bytes_.size() || n > bytes_.size() - at_) raise(Errc::corrupt_payload, "file truncated");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t at_ = 0;
};

std::vector<std::uint8_t> positions_to_bytes(std::span<const std::uint64_t> positions) {
  if (positions.empty()) return {};
  std::uint64_t byte_len = positions.back() / 8 + 1;
  if (byte_len > kMaxCombinationPayloadBytes) {
    raise(Errc::capacity_exhausted, "combination union payload exceeds " +
                                        std::to_string(kMaxCombinationPayloadBytes) + " bytes");
  }
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(byte_len), 0);
  for (std::uint64_t pos : positions) {
    bytes[static_cast<std::size_t>(pos / 8)] |= static_cast<std::uint8_t>(1u << (pos % 8));
  }
  return bytes;
}

std::vector<std::uint64_t> bytes_to_positions(std::span<const std::uint8_t> bytes) {
  std::vector<std::uint64_t> positions;
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    std::uint8_t b = bytes[i];
    for (int bit = 0; bit < 8; ++bit) {
      if (b & (1u << bit)) positions.push_back(i * 8 + static_cast<std::uint64_t>(bit));
    }
  }
  return positions;
}

}  // namespace

std::string registry_text(const PairRegistry& registry) {
  std::ostringstream out;
  out << kRegistryHeader << " 1\n";
  for (std::uint64_t d = 0; d < registry.dll_count(); ++d) {
    out << "D " << d << ' ' << escape_name(registry.dll_name(d)) << '\n';
  }
  for (std::uint64_t d = 0; d < registry.dll_count(); ++d) {
    const auto& keys = registry.function_keys(d);
    for (std::uint64_t f = 0; f < keys.size(); ++f) {
      out << "F " << d << ' ' << f << ' ' << escape_name(keys[f]) << '\n';
    }
  }
  return out.str();
}

PairRegistry registry_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) raise(Errc::bad_magic, "empty registry file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.rfind(kRegistryHeader, 0) != 0) raise(Errc::bad_magic, "registry header missing");
  if (line != std::string(kRegistryHeader) + " 1") raise(Errc::unsupported_version, line);

  std::vector<std::string> dll_names;
  std::vector<std::vector<std::string>> func_keys;
  bool seen_f = false;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = " at line " + std::to_string(line_no);

    if (line[0] == 'D') {
      if (seen_f) raise(Errc::corrupt_payload, "D line after F lines" + where);
      std::size_t sp = line.find(' ', 2);
      if (line.size() < 3 || line[1] != ' ' || sp == std::string::npos) {
        raise(Errc::corrupt_payload, "malformed D line" + where);
      }
      std::uint64_t id = 0;
      try {
        id = std::stoull(line.substr(2, sp - 2));
      } catch (const std::exception&) {
        raise(Errc::corrupt_payload, "bad dll id" + where);
      }
      if (id != dll_names.size()) raise(Errc::corrupt_payload, "dll ids not dense" + where);
      dll_names.push_back(unescape_name(line.substr(sp + 1)));
      func_keys.emplace_back();
    } else if (line[0] == 'F') {
      seen_f = true;
      std::size_t sp1 = line.find(' ', 2);
      std::size_t sp2 = sp1 == std::string::npos ? std::string::npos : line.find(' ', sp1 + 1);
      if (line.size() < 3 || line[1] != ' ' || sp2 == std::string::npos) {
        raise(Errc::corrupt_payload, "malformed F line" + where);
      }
      std::uint64_t dll_id = 0, func_id = 0;
      try {
        dll_id = std::stoull(line.substr(2, sp1 - 2));
        func_id = std::stoull(line.substr(sp1 + 1, sp2 - sp1 - 1));
      } catch (const std::exception&) {
        raise(Errc::corrupt_payload, "bad ids" + where);
      }
      if (dll_id >= dll_names.size()) raise(Errc::corrupt_payload, "unknown dll id" + where);
      if (func_id != func_keys[dll_id].size()) raise(Errc::corrupt_payload, "function ids not dense" + where);
      func_keys[dll_id].push_back(unescape_name(line.substr(sp2 + 1)));
    } else {
      raise(Errc::corrupt_payload, "unknown line tag" + where);
    }
  }
  return PairRegistry::restore(std::move(dll_names), std::move(func_keys));
}

void save_registry(const std::filesystem::path& path, const PairRegistry& registry) {
  std::string text = registry_text(registry);
  std::vector<std::uint8_t> bytes(text.begin(), text.end());
  write_file(path, bytes);
}

PairRegistry load_registry(const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes = read_file(path);
  return registry_from_text(std::string(bytes.begin(), bytes.end()));
}

std::vector<std::uint8_t> vector_bytes(const TableVector& vector) {
  Writer w;
  w.magic("IATV");
  w.u8(0x01);
  w.u8(static_cast<std::uint8_t>(vector.kind));
  w.u64(vector.registry_version);
  w.u64(vector.ids.size());
  for (std::uint64_t id : vector.ids) w.u64(id);
  w.crc();
  return w.take();
}

TableVector vector_from_bytes(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  r.expect_magic("IATV");
  if (std::uint8_t fmt = r.u8(); fmt != 0x01) {
    raise(Errc::unsupported_version, "vector format byte " + std::to_string(fmt));
  }
  std::uint8_t kind = r.u8();
  if (kind != 0x01 && kind != 0x02) raise(Errc::corrupt_payload, "unknown vector kind");

  TableVector out;
  out.kind = static_cast<TableKind>(kind);
  out.registry_version = r.u64();
  std::uint64_t count = r.u64();
  out.ids.reserve(static_cast<std::size_t>(count));
  std::uint64_t previous = 0;
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint64_t id = r.u64();
    if (i > 0 && id <= previous) raise(Errc::corrupt_payload, "ids not strictly ascending");
    out.ids.push_back(id);
    previous = id;
  }
  r.check_crc_and_finish();
  return out;
}

void save_vector(const std::filesystem::path& path, const TableVector& vector) {
  write_file(path, vector_bytes(vector));
}

TableVector load_vector(const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes = read_file(path);
  return vector_from_bytes(bytes);
}

namespace {

std::vector<std::uint8_t> base_bytes(BaseRole role, std::uint64_t universe_size,
                                     std::span<const std::vector<std::uint8_t>> payloads) {
  Writer w;
  w.magic("IATB");
  w.u8(0x01);
  w.u8(static_cast<std::uint8_t>(role));
  w.u64(universe_size);
  w.u64(payloads.size());
  for (const auto& payload : payloads) {
    w.u64(payload.size());
    w.raw(payload);
  }
  w.crc();
  return w.take();
}

}  // namespace

std::vector<std::uint8_t> bitvector_base_bytes(BaseRole role, std::uint64_t universe_size,
                                               std::span<const Bitset> vectors) {
  if (role != BaseRole::malware_set && role != BaseRole::benign_set && role != BaseRole::blacklist) {
    raise(Errc::invalid_config, "role is not a function-universe role");
  }
  std::vector<std::vector<std::uint8_t>> payloads;
  payloads.reserve(vectors.size());
  for (const Bitset& v : vectors) {
    if (v.size() != universe_size) raise(Errc::length_mismatch, "vector length differs from universe");
    payloads.push_back(v.to_bytes());
  }
  return base_bytes(role, universe_size, payloads);
}

std::vector<std::uint8_t> combination_union_bytes(BaseRole role, const CombinationVector& combo) {
  if (role != BaseRole::binomial_union && role != BaseRole::trinomial_union) {
    raise(Errc::invalid_config, "role is not a combination-union role");
  }
  int expected_order = role == BaseRole::binomial_union ? 2 : 3;
  if (combo.order != expected_order) raise(Errc::length_mismatch, "union order does not match role");
  std::vector<std::vector<std::uint8_t>> payloads;
  payloads.push_back(positions_to_bytes(combo.positions));
  return base_bytes(role, combo.universe_size, payloads);
}

LoadedBase base_from_bytes(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  r.expect_magic("IATB");
  if (std::uint8_t fmt = r.u8(); fmt != 0x01) {
    raise(Errc::unsupported_version, "base format byte " + std::to_string(fmt));
  }
  std::uint8_t role_byte = r.u8();
  LoadedBase out;
  switch (role_byte) {
    case 0x01: case 0x02: case 0x03: case 0x12: case 0x13:
      out.role = static_cast<BaseRole>(role_byte);
      break;
    default:
      raise(Errc::corrupt_payload, "unknown role byte " + std::to_string(role_byte));
  }
  out.universe_size = r.u64();
  std::uint64_t count = r.u64();

  bool is_union = out.role == BaseRole::binomial_union || out.role == BaseRole::trinomial_union;
  if (is_union) {
    if (count != 1) raise(Errc::corrupt_payload, "union role must hold exactly one vector");
    out.combination.order = out.role == BaseRole::binomial_union ? 2 : 3;
    out.combination.universe_size = out.universe_size;
    std::uint64_t len = r.u64();
    out.combination.positions = bytes_to_positions(r.raw(len));
    if (!out.combination.positions.empty() &&
        out.combination.positions.back() >= out.combination.bit_length()) {
      raise(Errc::corrupt_payload, "combination bit beyond C(n,k)");
    }
  } else {
    std::uint64_t expected_len = (out.universe_size + 7) / 8;
    for (std::uint64_t i = 0; i < count; ++i) {
      std::uint64_t len = r.u64();
      if (len != expected_len) raise(Errc::corrupt_payload, "vector byte length differs from universe");
      out.vectors.push_back(Bitset::from_bytes(out.universe_size, r.raw(len)));
    }
  }
  r.check_crc_and_finish();
  return out;
}

void save_base(const std::filesystem::path& path, BaseRole role, std::uint64_t universe_size,
               std::span<const Bitset> vectors) {
  write_file(path, bitvector_base_bytes(role, universe_size, vectors));
}

void save_combination_union(const std::filesystem::path& path, BaseRole role, const CombinationVector& combo) {
  write_file(path, combination_union_bytes(role, combo));
}

LoadedBase load_base(const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes = read_file(path);
  return base_from_bytes(bytes);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::io_error, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) raise(Errc::io_error, "read failed for " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(Errc::io_error, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) raise(Errc::io_error, "write failed for " + path.string());
}

}  // namespace iatforge::feature::storage
