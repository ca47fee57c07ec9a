#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace iatforge::pe {

struct SectionHeader {
  std::string name;  // up to 8 bytes, NUL-trimmed
  std::uint32_t virtual_address = 0;
  std::uint32_t virtual_size = 0;
  std::uint32_t raw_offset = 0;
  std::uint32_t raw_size = 0;
};

struct DataDirectory {
  std::uint32_t rva = 0;
  std::uint32_t size = 0;

  /// A directory counts as present only when both fields are nonzero.
  bool present() const noexcept { return rva != 0 && size != 0; }
};

struct PeLayout {
  bool is_pe32_plus = false;
  bool is_dll = false;
  std::uint64_t image_base = 0;
  std::vector<SectionHeader> section_table;
  DataDirectory import_dir;
  DataDirectory export_dir;
};

/// Import thunk payload: a name (with optional loader hint) or a 16-bit ordinal.
struct ImportByName {
  std::string name;
  std::optional<std::uint16_t> hint;
  bool operator==(const ImportByName&) const = default;
};

struct ImportedPair {
  std::string dll_name;  // lowercased, path prefix stripped
  std::variant<ImportByName, std::uint16_t> func;

  bool by_ordinal() const noexcept { return std::holds_alternative<std::uint16_t>(func); }
  bool operator==(const ImportedPair&) const = default;
};

struct ExportEntry {
  std::optional<std::string> name;
  std::uint16_t ordinal = 0;  // export-table convention: index + ordinal base
  bool operator==(const ExportEntry&) const = default;
};

struct StructuralFindings {
  bool has_iat = false;
  bool has_eat = false;
  bool empty_iat = false;
  bool ordinal_rule_violation = false;
  bool hint_rule_warning = false;
  std::vector<std::string> malformed;

  bool operator==(const StructuralFindings&) const = default;
};

/// Walk caps; exceeding either is a Cyclic error.
inline constexpr std::uint32_t kMaxImportDescriptors = 4096;
inline constexpr std::uint32_t kMaxThunksPerDll = 65536;

/// Parses MZ/PE headers and the section table. Throws Error with
/// Errc::malformed_header or Errc::out_of_bounds; never reads outside `bytes`.
PeLayout parse_pe(std::span<const std::uint8_t> bytes);

/// Walks the import descriptor array until the all-zero terminator, in file
/// order. Requires layout.import_dir.present().
std::vector<ImportedPair> extract_imports(const PeLayout& layout, std::span<const std::uint8_t> bytes);

struct ExportTable {
  std::string dll_name;  // normalized like import DLL names
  std::vector<ExportEntry> entries;
};

/// Pairs AddressOfNames with AddressOfNameOrdinals and emits the remaining
/// function slots as ordinal-only entries. Requires layout.export_dir.present().
ExportTable extract_exports(const PeLayout& layout, std::span<const std::uint8_t> bytes);

StructuralFindings structural_check(const PeLayout& layout, const std::vector<ImportedPair>& imports,
                                    const std::vector<ExportEntry>& exports);

/// Lowercase and strip any path prefix; loaders resolve module names that way.
std::string normalize_dll_name(std::string_view raw);

}  // namespace iatforge::pe
