#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "iatforge/bitset.hpp"
#include "iatforge/feature/registry.hpp"
#include "iatforge/feature/vectors.hpp"

namespace iatforge::feature::storage {

/// Registry file: UTF-8 text, LF endings. Line 1 `IATREG 1`, then `D <id> <name>`
/// lines in id order, then `F <dll_id> <func_id> <key>` lines in (dll, func) order.
/// '%', CR and LF inside names are percent-escaped so the line format stays parseable.
std::string registry_text(const PairRegistry& registry);
PairRegistry registry_from_text(const std::string& text);

void save_registry(const std::filesystem::path& path, const PairRegistry& registry);
PairRegistry load_registry(const std::filesystem::path& path);

/// Vector file: `IATV` magic, format byte 0x01, kind byte, registry version,
/// id count, the ids (strictly ascending, 8-byte little-endian), CRC32 of all
/// preceding bytes.
std::vector<std::uint8_t> vector_bytes(const TableVector& vector);
TableVector vector_from_bytes(std::span<const std::uint8_t> bytes);

void save_vector(const std::filesystem::path& path, const TableVector& vector);
TableVector load_vector(const std::filesystem::path& path);

enum class BaseRole : std::uint8_t {
  malware_set = 0x01,
  benign_set = 0x02,
  blacklist = 0x03,
  binomial_union = 0x12,
  trinomial_union = 0x13,
};

/// Bitvector base file: `IATB` magic, format byte 0x01, role byte, universe
/// size, vector count, then per vector a byte length plus that many bytes
/// (little-endian bit order), CRC32 last. Function-universe roles always store
/// ceil(universe/8) bytes; combination unions store the minimal prefix that
/// covers their highest set bit, since C(n,3) dense strings are not writable
/// at real universe sizes.
std::vector<std::uint8_t> bitvector_base_bytes(BaseRole role, std::uint64_t universe_size,
                                               std::span<const Bitset> vectors);
std::vector<std::uint8_t> combination_union_bytes(BaseRole role, const CombinationVector& combo);

struct LoadedBase {
  BaseRole role;
  std::uint64_t universe_size = 0;
  std::vector<Bitset> vectors;          // function-universe roles
  CombinationVector combination;        // union roles
};
LoadedBase base_from_bytes(std::span<const std::uint8_t> bytes);

void save_base(const std::filesystem::path& path, BaseRole role, std::uint64_t universe_size,
               std::span<const Bitset> vectors);
void save_combination_union(const std::filesystem::path& path, BaseRole role, const CombinationVector& combo);
LoadedBase load_base(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace iatforge::feature::storage
