#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace iatforge::pe {

/// Minimal-PE builder for tests and fuzzing. Emits a deterministic, loadable
/// single-section image whose import/export structures mirror the spec below,
/// so extraction results can be checked against the inputs exactly.

struct FixtureImport {
  // Name("ExitProcess", hint 42) or Ordinal(7).
  struct Name {
    std::string name;
    std::uint16_t hint = 0;
  };
  std::variant<Name, std::uint16_t> func;
};

struct FixtureDll {
  std::string name;
  std::vector<FixtureImport> funcs;
};

struct FixtureExports {
  std::string dll_name = "fixture.dll";
  std::uint32_t ordinal_base = 1;
  std::vector<std::string> named;
  std::uint32_t extra_ordinal_slots = 0;  // name-less function slots
  // Overrides the emitted NumberOfNames for malformed-count fixtures.
  std::optional<std::uint32_t> forced_name_count;
};

enum class ImportDirMode {
  absent,     // directory entry zeroed
  empty,      // directory present, first descriptor is the all-zero terminator
  populated,
};

struct FixtureSpec {
  bool pe32_plus = false;
  bool dll = false;
  ImportDirMode import_mode = ImportDirMode::populated;
  std::vector<FixtureDll> imports;
  std::optional<FixtureExports> exports;
};

std::vector<std::uint8_t> build_fixture(const FixtureSpec& spec);

/// Section placement used by the builder; exposed so layout round-trip tests
/// can assert parsed fields against known values.
inline constexpr std::uint32_t kFixtureSectionRva = 0x1000;
inline constexpr std::uint32_t kFixtureSectionRawOffset = 0x200;
inline constexpr std::uint64_t kFixtureImageBase32 = 0x400000;
inline constexpr std::uint64_t kFixtureImageBase64 = 0x140000000ULL;

}  // namespace iatforge::pe
