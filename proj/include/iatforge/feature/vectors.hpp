#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "iatforge/bitset.hpp"
#include "iatforge/feature/registry.hpp"
#include "iatforge/pe/format.hpp"

namespace iatforge::feature {

enum class TableKind : std::uint8_t { iat = 1, eat = 2 };

/// One file's sorted, deduplicated pair-id list for its IAT or EAT.
struct TableVector {
  TableKind kind = TableKind::iat;
  std::vector<std::uint64_t> ids;  // strictly ascending
  std::uint64_t registry_version = 0;

  std::size_t size() const noexcept { return ids.size(); }
  bool empty() const noexcept { return ids.empty(); }
  bool operator==(const TableVector&) const = default;
};

/// Presence bitstring over the registered function universe.
struct FunctionBitVector {
  Bitset bits;
  std::uint64_t universe_size = 0;
  std::uint64_t registry_version = 0;

  bool operator==(const FunctionBitVector&) const = default;
};

/// Bitstring over all order-sized index subsets, kept sparse: C(n,3) does not
/// fit in memory at realistic universe sizes, and unions stay far below it.
struct CombinationVector {
  int order = 2;  // 2 or 3
  std::uint64_t universe_size = 0;
  std::vector<std::uint64_t> positions;  // strictly ascending set-bit ranks

  std::uint64_t bit_length() const;
  std::uint64_t popcount() const noexcept { return positions.size(); }

  /// Dense materialization for small universes (tests, worked examples).
  Bitset to_bitset() const;

  bool operator==(const CombinationVector&) const = default;
};

struct PairKey {
  std::string dll_name;
  std::string function_key;
  bool operator==(const PairKey&) const = default;
};

std::vector<PairKey> pair_keys_from_imports(const std::vector<pe::ImportedPair>& imports);
std::vector<PairKey> pair_keys_from_exports(const std::string& dll_name,
                                            const std::vector<pe::ExportEntry>& exports);

/// Registers every key (mutating) and returns nothing; used when building bases.
void register_keys(PairRegistry& registry, const std::vector<PairKey>& keys);

/// Lookup-only vectorization: unknown pairs are discarded; ids are sorted and
/// deduplicated.
TableVector vectorize(const std::vector<PairKey>& keys, const PairRegistry& registry, TableKind kind);

/// Sets the dense-index bit of every id. Requires an exact version match.
FunctionBitVector to_bitvector(const TableVector& vector, const PairRegistry& registry);

std::uint64_t binom2(std::uint64_t n);
std::uint64_t binom3(std::uint64_t n);

/// 0-based lexicographic rank of the pair (i, j), 1 <= i < j <= n.
std::uint64_t pair_index(std::uint64_t i, std::uint64_t j, std::uint64_t n);
/// 0-based lexicographic rank of the triple (i, j, k), 1 <= i < j < k <= n.
std::uint64_t triple_index(std::uint64_t i, std::uint64_t j, std::uint64_t k, std::uint64_t n);

struct PairIndices {
  std::uint64_t i = 0, j = 0;  // 1-based
};
struct TripleIndices {
  std::uint64_t i = 0, j = 0, k = 0;  // 1-based
};
PairIndices decode_pair_index(std::uint64_t rank, std::uint64_t n);
TripleIndices decode_triple_index(std::uint64_t rank, std::uint64_t n);

/// Marks every order-sized subset of the set bits. Parallel over leading set
/// bits when OpenMP is enabled; block offsets make the output identical to the
/// serial reference.
CombinationVector build_combination_vector(const FunctionBitVector& fbv, int order);
CombinationVector build_combination_vector_serial(const FunctionBitVector& fbv, int order);

/// Set union / intersection helpers on sorted position lists.
std::vector<std::uint64_t> position_union(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b);
std::uint64_t intersect_count(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b);

/// (m AND NOT g, g AND NOT m): drops combinations shared by both labels.
std::pair<CombinationVector, CombinationVector> remove_common_sets(const CombinationVector& m_union,
                                                                   const CombinationVector& g_union);

}  // namespace iatforge::feature
