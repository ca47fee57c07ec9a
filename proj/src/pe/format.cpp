#include "iatforge/pe/format.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "iatforge/error.hpp"

namespace iatforge::pe {

namespace {

constexpr std::uint32_t kPeSignatureOffsetField = 0x3C;
constexpr std::uint16_t kDosMagic = 0x5A4D;       // "MZ"
constexpr std::uint32_t kPeMagic = 0x00004550;    // "PE\0\0"
constexpr std::uint16_t kMagicPe32 = 0x10B;
constexpr std::uint16_t kMagicPe32Plus = 0x20B;
constexpr std::uint16_t kFileDllFlag = 0x2000;    // IMAGE_FILE_DLL
constexpr std::uint32_t kMaxNameLength = 4096;

/// Bounds-checked little-endian reader; every access is validated against the
/// buffer so arbitrary inputs produce errors instead of wild reads.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t size() const noexcept { return bytes_.size(); }

  void require(std::uint64_t offset, std::uint64_t length) const {
    if (offset > bytes_.size() || length > bytes_.size() - offset) {
      raise(Errc::out_of_bounds,
            "read of " + std::to_string(length) + " bytes at offset " + std::to_string(offset));
    }
  }

  std::uint8_t u8(std::uint64_t offset) const {
    require(offset, 1);
    return bytes_[offset];
  }

  std::uint16_t u16(std::uint64_t offset) const {
    require(offset, 2);
    return static_cast<std::uint16_t>(bytes_[offset] | (bytes_[offset + 1] << 8));
  }

  std::uint32_t u32(std::uint64_t offset) const {
    require(offset, 4);
    return static_cast<std::uint32_t>(bytes_[offset]) | (static_cast<std::uint32_t>(bytes_[offset + 1]) << 8) |
           (static_cast<std::uint32_t>(bytes_[offset + 2]) << 16) |
           (static_cast<std::uint32_t>(bytes_[offset + 3]) << 24);
  }

  std::uint64_t u64(std::uint64_t offset) const {
    return static_cast<std::uint64_t>(u32(offset)) | (static_cast<std::uint64_t>(u32(offset + 4)) << 32);
  }

  /// NUL-terminated string with a hard length cap.
  std::string cstring(std::uint64_t offset) const {
    std::string out;
    for (std::uint32_t i = 0; i < kMaxNameLength; ++i) {
      std::uint8_t c = u8(offset + i);
      if (c == 0) return out;
      out.push_back(static_cast<char>(c));
    }
    raise(Errc::out_of_bounds, "unterminated string at offset " + std::to_string(offset));
  }

 private:
  std::span<const std::uint8_t> bytes_;
};

struct HeaderOffsets {
  std::uint64_t coff = 0;       // after the PE signature
  std::uint64_t optional = 0;   // optional header start
  std::uint64_t sections = 0;   // section table start
  std::uint16_t section_count = 0;
};

HeaderOffsets locate_headers(const ByteReader& r) {
  if (r.size() < 2 || r.u16(0) != kDosMagic) raise(Errc::malformed_header, "missing MZ signature");
  std::uint32_t pe_offset = r.u32(kPeSignatureOffsetField);
  if (r.u32(pe_offset) != kPeMagic) raise(Errc::malformed_header, "missing PE signature");

  HeaderOffsets h;
  h.coff = static_cast<std::uint64_t>(pe_offset) + 4;
  r.require(h.coff, 20);
  h.section_count = r.u16(h.coff + 2);
  std::uint16_t optional_size = r.u16(h.coff + 16);
  h.optional = h.coff + 20;
  h.sections = h.optional + optional_size;
  return h;
}

/// Maps an RVA to a file offset: identity inside the headers (below the first
/// section), else a linear scan of the section table.
std::uint64_t rva_to_offset(const PeLayout& layout, std::uint64_t rva, std::size_t file_size) {
  std::uint64_t first_section_va = UINT64_MAX;
  for (const SectionHeader& s : layout.section_table) {
    first_section_va = std::min(first_section_va, static_cast<std::uint64_t>(s.virtual_address));
  }
  if (rva < first_section_va) {
    if (rva >= file_size) raise(Errc::out_of_bounds, "header rva " + std::to_string(rva));
    return rva;
  }
  for (const SectionHeader& s : layout.section_table) {
    std::uint64_t span = std::max(s.virtual_size, s.raw_size);
    if (rva >= s.virtual_address && rva < static_cast<std::uint64_t>(s.virtual_address) + span) {
      return static_cast<std::uint64_t>(s.raw_offset) + (rva - s.virtual_address);
    }
  }
  raise(Errc::out_of_bounds, "rva " + std::to_string(rva) + " maps to no section");
}

PeLayout parse_pe_impl(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  HeaderOffsets h = locate_headers(r);

  PeLayout layout;
  layout.is_dll = (r.u16(h.coff + 18) & kFileDllFlag) != 0;

  std::uint16_t magic = r.u16(h.optional);
  if (magic == kMagicPe32) {
    layout.is_pe32_plus = false;
  } else if (magic == kMagicPe32Plus) {
    layout.is_pe32_plus = true;
  } else {
    raise(Errc::malformed_header, "optional header magic " + std::to_string(magic));
  }

  std::uint64_t dirs_offset;
  std::uint32_t dir_count;
  if (layout.is_pe32_plus) {
    layout.image_base = r.u64(h.optional + 24);
    dir_count = r.u32(h.optional + 108);
    dirs_offset = h.optional + 112;
  } else {
    layout.image_base = r.u32(h.optional + 28);
    dir_count = r.u32(h.optional + 92);
    dirs_offset = h.optional + 96;
  }

  if (dir_count > 0) {  // entry 0: export, entry 1: import
    layout.export_dir = {r.u32(dirs_offset), r.u32(dirs_offset + 4)};
  }
  if (dir_count > 1) {
    layout.import_dir = {r.u32(dirs_offset + 8), r.u32(dirs_offset + 12)};
  }

  for (std::uint16_t i = 0; i < h.section_count; ++i) {
    std::uint64_t at = h.sections + static_cast<std::uint64_t>(i) * 40;
    r.require(at, 40);
    SectionHeader s;
    for (int c = 0; c < 8; ++c) {
      std::uint8_t ch = r.u8(at + c);
      if (ch == 0) break;
      s.name.push_back(static_cast<char>(ch));
    }
    s.virtual_size = r.u32(at + 8);
    s.virtual_address = r.u32(at + 12);
    s.raw_size = r.u32(at + 16);
    s.raw_offset = r.u32(at + 20);
    layout.section_table.push_back(std::move(s));
  }
  return layout;
}

}  // namespace

std::string normalize_dll_name(std::string_view raw) {
  std::size_t cut = raw.find_last_of("/\\");
  std::string_view base = (cut == std::string_view::npos) ? raw : raw.substr(cut + 1);
  std::string out(base);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

PeLayout parse_pe(std::span<const std::uint8_t> bytes) {
  // parse_pe only touches headers and the section table, so any short read
  // here is a truncated header rather than a dangling structure reference.
  try {
    return parse_pe_impl(bytes);
  } catch (const Error& e) {
    if (e.code() == Errc::out_of_bounds) raise(Errc::malformed_header, "truncated headers");
    throw;
  }
}

std::vector<ImportedPair> extract_imports(const PeLayout& layout, std::span<const std::uint8_t> bytes) {
  if (!layout.import_dir.present()) raise(Errc::out_of_bounds, "import directory not present");
  ByteReader r(bytes);

  std::vector<ImportedPair> out;
  std::uint64_t desc_base = rva_to_offset(layout, layout.import_dir.rva, bytes.size());

  const std::uint64_t thunk_size = layout.is_pe32_plus ? 8 : 4;
  const std::uint64_t ordinal_flag = layout.is_pe32_plus ? (std::uint64_t{1} << 63) : (std::uint64_t{1} << 31);

  for (std::uint32_t d = 0;; ++d) {
    if (d >= kMaxImportDescriptors) raise(Errc::cyclic, "import descriptor walk exceeded cap");
    std::uint64_t desc = desc_base + static_cast<std::uint64_t>(d) * 20;
    std::uint32_t original_first_thunk = r.u32(desc);
    std::uint32_t name_rva = r.u32(desc + 12);
    std::uint32_t first_thunk = r.u32(desc + 16);
    bool all_zero = original_first_thunk == 0 && r.u32(desc + 4) == 0 && r.u32(desc + 8) == 0 &&
                    name_rva == 0 && first_thunk == 0;
    if (all_zero) break;

    std::string dll = normalize_dll_name(r.cstring(rva_to_offset(layout, name_rva, bytes.size())));
    if (dll.empty()) raise(Errc::out_of_bounds, "empty import DLL name");

    std::uint32_t thunk_rva = original_first_thunk != 0 ? original_first_thunk : first_thunk;
    if (thunk_rva == 0) continue;  // descriptor without thunks
    std::uint64_t thunk = rva_to_offset(layout, thunk_rva, bytes.size());

    for (std::uint32_t t = 0;; ++t) {
      if (t >= kMaxThunksPerDll) raise(Errc::cyclic, "thunk walk exceeded cap for " + dll);
      std::uint64_t value = layout.is_pe32_plus ? r.u64(thunk + t * thunk_size)
                                                : r.u32(thunk + t * thunk_size);
      if (value == 0) break;
      ImportedPair pair;
      pair.dll_name = dll;
      if (value & ordinal_flag) {
        pair.func = static_cast<std::uint16_t>(value & 0xFFFF);
      } else {
        std::uint64_t ibn = rva_to_offset(layout, value & 0x7FFFFFFF, bytes.size());
        ImportByName byname;
        byname.hint = r.u16(ibn);
        byname.name = r.cstring(ibn + 2);
        pair.func = std::move(byname);
      }
      out.push_back(std::move(pair));
    }
  }
  return out;
}

ExportTable extract_exports(const PeLayout& layout, std::span<const std::uint8_t> bytes) {
  if (!layout.export_dir.present()) raise(Errc::out_of_bounds, "export directory not present");
  ByteReader r(bytes);

  std::uint64_t dir = rva_to_offset(layout, layout.export_dir.rva, bytes.size());
  std::uint32_t name_rva = r.u32(dir + 12);
  std::uint32_t ordinal_base = r.u32(dir + 16);
  std::uint32_t function_count = r.u32(dir + 20);
  std::uint32_t name_count = r.u32(dir + 24);
  std::uint32_t names_rva = r.u32(dir + 32);
  std::uint32_t name_ordinals_rva = r.u32(dir + 36);

  // Ordinals are 16-bit (slot + base), so more slots than that cannot be
  // represented; the cap also bounds adversarial claims.
  if (function_count > kMaxThunksPerDll || name_count > kMaxThunksPerDll) {
    raise(Errc::cyclic, "export slot walk exceeds cap");
  }
  if (name_count > function_count) {
    raise(Errc::inconsistent_counts, "NumberOfNames " + std::to_string(name_count) +
                                         " > NumberOfFunctions " + std::to_string(function_count));
  }

  ExportTable table;
  table.dll_name = name_rva != 0 ? normalize_dll_name(r.cstring(rva_to_offset(layout, name_rva, bytes.size()))) : "";

  // Two arrays read in parallel: names[i] and name_ordinals[i] (a function-slot index).
  std::vector<bool> slot_named(function_count, false);
  std::uint64_t names_off = name_count > 0 ? rva_to_offset(layout, names_rva, bytes.size()) : 0;
  std::uint64_t ords_off = name_count > 0 ? rva_to_offset(layout, name_ordinals_rva, bytes.size()) : 0;
  for (std::uint32_t i = 0; i < name_count; ++i) {
    std::uint32_t fn_name_rva = r.u32(names_off + static_cast<std::uint64_t>(i) * 4);
    std::uint16_t slot = r.u16(ords_off + static_cast<std::uint64_t>(i) * 2);
    ExportEntry entry;
    entry.name = r.cstring(rva_to_offset(layout, fn_name_rva, bytes.size()));
    entry.ordinal = static_cast<std::uint16_t>(slot + ordinal_base);
    if (slot < function_count) slot_named[slot] = true;
    table.entries.push_back(std::move(entry));
  }

  // Remaining slots are exported by ordinal only.
  for (std::uint32_t slot = 0; slot < function_count; ++slot) {
    if (slot_named[slot]) continue;
    ExportEntry entry;
    entry.ordinal = static_cast<std::uint16_t>(slot + ordinal_base);
    table.entries.push_back(entry);
  }
  return table;
}

StructuralFindings structural_check(const PeLayout& layout, const std::vector<ImportedPair>& imports,
                                    const std::vector<ExportEntry>& exports) {
  StructuralFindings f;
  f.has_iat = layout.import_dir.present() && !imports.empty();
  f.has_eat = layout.export_dir.present() && !exports.empty();
  f.empty_iat = !layout.is_dll && imports.empty();

  if (!layout.import_dir.present()) {
    f.malformed.emplace_back("iat: import directory absent");
  } else if (imports.empty()) {
    f.malformed.emplace_back("iat: import table present but empty");
  }

  // Export ordinals must form exactly {1..N}.
  if (!exports.empty()) {
    std::multiset<std::uint32_t> seen;
    for (const ExportEntry& e : exports) seen.insert(e.ordinal);
    std::uint32_t n = static_cast<std::uint32_t>(exports.size());
    std::multiset<std::uint32_t> expected;
    for (std::uint32_t i = 1; i <= n; ++i) expected.insert(i);
    f.ordinal_rule_violation = seen != expected;
    if (f.ordinal_rule_violation) f.malformed.emplace_back("eat: export ordinals are not exactly 1..N");
    for (const ExportEntry& e : exports) {
      if (e.ordinal < 1) {
        f.malformed.emplace_back("eat: export ordinal below 1");
        break;
      }
    }
  }

  // Advisory: every present hint should index below its DLL's imported-function count.
  std::map<std::string, std::uint32_t> per_dll;
  for (const ImportedPair& p : imports) per_dll[p.dll_name]++;
  for (const ImportedPair& p : imports) {
    if (const auto* byname = std::get_if<ImportByName>(&p.func); byname && byname->hint.has_value()) {
      if (*byname->hint >= per_dll[p.dll_name]) {
        f.hint_rule_warning = true;
        break;
      }
    }
  }
  return f;
}

}  // namespace iatforge::pe
