#include "iatforge/feature/vectors.hpp"

#include <algorithm>

#include "iatforge/error.hpp"
#include "iatforge/parallel.hpp"

namespace iatforge::feature {

std::uint64_t binom2(std::uint64_t n) {
  if (n < 2) return 0;
  unsigned __int128 v = static_cast<unsigned __int128>(n) * (n - 1) / 2;
  if (v > UINT64_MAX) raise(Errc::capacity_exhausted, "C(n,2) exceeds 64 bits");
  return static_cast<std::uint64_t>(v);
}

std::uint64_t binom3(std::uint64_t n) {
  if (n < 3) return 0;
  unsigned __int128 v = static_cast<unsigned __int128>(n) * (n - 1) / 2;
  v = v * (n - 2) / 3;
  if (v > UINT64_MAX) raise(Errc::capacity_exhausted, "C(n,3) exceeds 64 bits");
  return static_cast<std::uint64_t>(v);
}

std::uint64_t CombinationVector::bit_length() const {
  return order == 2 ? binom2(universe_size) : binom3(universe_size);
}

Bitset CombinationVector::to_bitset() const {
  Bitset out(bit_length());
  for (std::uint64_t pos : positions) out.set(pos);
  return out;
}

std::vector<PairKey> pair_keys_from_imports(const std::vector<pe::ImportedPair>& imports) {
  std::vector<PairKey> keys;
  keys.reserve(imports.size());
  for (const pe::ImportedPair& p : imports) {
    if (const auto* byname = std::get_if<pe::ImportByName>(&p.func)) {
      keys.push_back({p.dll_name, byname->name});
    } else {
      keys.push_back({p.dll_name, ordinal_key(std::get<std::uint16_t>(p.func))});
    }
  }
  return keys;
}

std::vector<PairKey> pair_keys_from_exports(const std::string& dll_name,
                                            const std::vector<pe::ExportEntry>& exports) {
  std::vector<PairKey> keys;
  keys.reserve(exports.size());
  for (const pe::ExportEntry& e : exports) {
    keys.push_back({dll_name, e.name.has_value() ? *e.name : ordinal_key(e.ordinal)});
  }
  return keys;
}

void register_keys(PairRegistry& registry, const std::vector<PairKey>& keys) {
  for (const PairKey& key : keys) registry.register_pair(key.dll_name, key.function_key);
}

TableVector vectorize(const std::vector<PairKey>& keys, const PairRegistry& registry, TableKind kind) {
  TableVector out;
  out.kind = kind;
  out.registry_version = registry.version();
  out.ids.reserve(keys.size());
  for (const PairKey& key : keys) {
    if (auto id = registry.lookup(key.dll_name, key.function_key)) out.ids.push_back(id->value);
  }
  std::sort(out.ids.begin(), out.ids.end());
  out.ids.erase(std::unique(out.ids.begin(), out.ids.end()), out.ids.end());
  return out;
}

FunctionBitVector to_bitvector(const TableVector& vector, const PairRegistry& registry) {
  if (vector.registry_version != registry.version()) {
    raise(Errc::version_mismatch, "vector built at registry version " +
                                      std::to_string(vector.registry_version) + ", registry is at " +
                                      std::to_string(registry.version()));
  }
  FunctionBitVector out;
  out.universe_size = registry.universe_size();
  out.registry_version = registry.version();
  out.bits = Bitset(out.universe_size);
  for (std::uint64_t raw : vector.ids) out.bits.set(registry.dense_index(PairId{raw}));
  return out;
}

namespace {
void check_pair_args(std::uint64_t i, std::uint64_t j, std::uint64_t n) {
  if (!(1 <= i && i < j && j <= n)) {
    raise(Errc::index_out_of_range,
          "pair (" + std::to_string(i) + "," + std::to_string(j) + ") with n=" + std::to_string(n));
  }
}
}  // namespace

std::uint64_t pair_index(std::uint64_t i, std::uint64_t j, std::uint64_t n) {
  check_pair_args(i, j, n);
  return (i - 1) * n - i * (i - 1) / 2 + (j - i - 1);
}

std::uint64_t triple_index(std::uint64_t i, std::uint64_t j, std::uint64_t k, std::uint64_t n) {
  if (!(1 <= i && i < j && j < k && k <= n)) {
    raise(Errc::index_out_of_range, "triple (" + std::to_string(i) + "," + std::to_string(j) + "," +
                                        std::to_string(k) + ") with n=" + std::to_string(n));
  }
  // Triples starting below i come first; the closed form telescopes to a
  // difference of binomials, then the (j,k) pair ranks within an (n-i)-universe.
  std::uint64_t before_i = binom3(n) - binom3(n - i + 1);
  std::uint64_t within = (j - i - 1) * (n - i) - (j - i) * (j - i - 1) / 2 + (k - j - 1);
  return before_i + within;
}

PairIndices decode_pair_index(std::uint64_t rank, std::uint64_t n) {
  if (rank >= binom2(n)) raise(Errc::index_out_of_range, "pair rank " + std::to_string(rank));
  // Largest i whose block base is <= rank.
  std::uint64_t lo = 1, hi = n - 1;
  auto base = [n](std::uint64_t i) { return (i - 1) * n - i * (i - 1) / 2; };
  while (lo < hi) {
    std::uint64_t mid = (lo + hi + 1) / 2;
    if (base(mid) <= rank) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  return {lo, rank - base(lo) + lo + 1};
}

TripleIndices decode_triple_index(std::uint64_t rank, std::uint64_t n) {
  if (rank >= binom3(n)) raise(Errc::index_out_of_range, "triple rank " + std::to_string(rank));
  std::uint64_t lo = 1, hi = n - 2;
  auto base = [n](std::uint64_t i) { return binom3(n) - binom3(n - i + 1); };
  while (lo < hi) {
    std::uint64_t mid = (lo + hi + 1) / 2;
    if (base(mid) <= rank) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  std::uint64_t i = lo;
  PairIndices jk = decode_pair_index(rank - base(i), n - i);
  return {i, jk.i + i, jk.j + i};
}

namespace {

CombinationVector build_pairs(const std::vector<std::uint64_t>& set_bits, std::uint64_t n, bool parallel) {
  const std::size_t m = set_bits.size();
  CombinationVector out;
  out.order = 2;
  out.universe_size = n;
  if (m < 2) return out;

  // Block p holds pairs whose first element is set_bits[p]; blocks are
  // position-ascending, so slices can be filled independently.
  std::vector<std::size_t> offsets(m + 1, 0);
  for (std::size_t p = 0; p < m; ++p) offsets[p + 1] = offsets[p] + (m - 1 - p);
  out.positions.resize(offsets[m]);

#pragma omp parallel for schedule(dynamic, 16) if (parallel)
  for (std::size_t p = 0; p < m; ++p) {
    std::size_t at = offsets[p];
    std::uint64_t i = set_bits[p] + 1;  // 1-based
    for (std::size_t q = p + 1; q < m; ++q) {
      out.positions[at++] = pair_index(i, set_bits[q] + 1, n);
    }
  }
  return out;
}

CombinationVector build_triples(const std::vector<std::uint64_t>& set_bits, std::uint64_t n, bool parallel) {
  const std::size_t m = set_bits.size();
  CombinationVector out;
  out.order = 3;
  out.universe_size = n;
  if (m < 3) return out;

  std::vector<std::size_t> offsets(m + 1, 0);
  for (std::size_t p = 0; p < m; ++p) {
    std::size_t rest = m - 1 - p;
    offsets[p + 1] = offsets[p] + rest * (rest - 1) / 2;
  }
  out.positions.resize(offsets[m]);

#pragma omp parallel for schedule(dynamic, 8) if (parallel)
  for (std::size_t p = 0; p < m; ++p) {
    std::size_t at = offsets[p];
    std::uint64_t i = set_bits[p] + 1;
    for (std::size_t q = p + 1; q < m; ++q) {
      std::uint64_t j = set_bits[q] + 1;
      for (std::size_t r = q + 1; r < m; ++r) {
        out.positions[at++] = triple_index(i, j, set_bits[r] + 1, n);
      }
    }
  }
  return out;
}

CombinationVector build_combinations(const FunctionBitVector& fbv, int order, bool parallel) {
  if (order != 2 && order != 3) raise(Errc::invalid_config, "combination order must be 2 or 3");
  if (fbv.universe_size < static_cast<std::uint64_t>(order)) {
    raise(Errc::index_out_of_range, "universe smaller than combination order");
  }
  std::vector<std::uint64_t> set_bits = fbv.bits.positions();
  return order == 2 ? build_pairs(set_bits, fbv.universe_size, parallel)
                    : build_triples(set_bits, fbv.universe_size, parallel);
}

}  // namespace

CombinationVector build_combination_vector(const FunctionBitVector& fbv, int order) {
  return build_combinations(fbv, order, par::enabled());
}

CombinationVector build_combination_vector_serial(const FunctionBitVector& fbv, int order) {
  return build_combinations(fbv, order, false);
}

std::vector<std::uint64_t> position_union(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  std::vector<std::uint64_t> out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

std::uint64_t intersect_count(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  std::uint64_t count = 0;
  std::size_t ia = 0, ib = 0;
  while (ia < a.size() && ib < b.size()) {
    if (a[ia] < b[ib]) {
      ++ia;
    } else if (b[ib] < a[ia]) {
      ++ib;
    } else {
      ++count;
      ++ia;
      ++ib;
    }
  }
  return count;
}

std::pair<CombinationVector, CombinationVector> remove_common_sets(const CombinationVector& m_union,
                                                                   const CombinationVector& g_union) {
  if (m_union.order != g_union.order || m_union.universe_size != g_union.universe_size) {
    raise(Errc::length_mismatch, "combination vectors differ in order or universe");
  }
  CombinationVector m_out{m_union.order, m_union.universe_size, {}};
  CombinationVector g_out{g_union.order, g_union.universe_size, {}};
  std::set_difference(m_union.positions.begin(), m_union.positions.end(), g_union.positions.begin(),
                      g_union.positions.end(), std::back_inserter(m_out.positions));
  std::set_difference(g_union.positions.begin(), g_union.positions.end(), m_union.positions.begin(),
                      m_union.positions.end(), std::back_inserter(g_out.positions));
  return {std::move(m_out), std::move(g_out)};
}

}  // namespace iatforge::feature
