#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "oracles.hpp"
#include "iatforge/error.hpp"
#include "iatforge/feature/vectors.hpp"

using namespace iatforge;
using namespace iatforge::feature;

namespace {

/// Integer value of a bitstring with bit 0 least significant (small cases).
std::uint64_t as_integer(const Bitset& bits) {
  REQUIRE(bits.size() <= 64);
  std::uint64_t v = 0;
  for (std::uint64_t pos : bits.positions()) v |= std::uint64_t{1} << pos;
  return v;
}

/// Table-2-shaped registry: dll_i{F1,F2,F3}, dll_j{F1,F2,F3}, dll_k{F1}.
PairRegistry table2_registry() {
  PairRegistry reg;
  for (const char* dll : {"dll_i", "dll_j"}) {
    for (const char* fn : {"F1", "F2", "F3"}) reg.register_pair(dll, fn);
  }
  reg.register_pair("dll_k", "F1");
  return reg;
}

TableVector vector_of_attributes(const PairRegistry& reg, std::vector<std::uint64_t> attrs) {
  std::vector<std::uint64_t> ids;
  for (std::uint64_t a : attrs) ids.push_back(reg.pair_at(a).value);
  return testutil::make_vector(std::move(ids), reg.version());
}

}  // namespace

TEST_CASE("vectorize drops unknown pairs, sorts and dedupes") {
  PairRegistry reg;
  reg.register_pair("a.dll", "F");
  reg.register_pair("a.dll", "G");

  SUBCASE("all unknown") {
    std::vector<PairKey> keys{{"x.dll", "Nope"}, {"y.dll", "#4"}};
    CHECK(vectorize(keys, reg, TableKind::iat).empty());
  }
  SUBCASE("duplicates collapse and order is ascending") {
    std::vector<PairKey> keys{{"a.dll", "G"}, {"a.dll", "F"}, {"a.dll", "G"}};
    TableVector v = vectorize(keys, reg, TableKind::iat);
    CHECK(v.ids == std::vector<std::uint64_t>{0, 1});
    CHECK(v.registry_version == reg.version());
  }
}

TEST_CASE("vectorize is idempotent and order-insensitive") {
  std::mt19937_64 rng(11);
  PairRegistry reg;
  for (int d = 0; d < 4; ++d) {
    for (int f = 0; f < 8; ++f) {
      reg.register_pair("d" + std::to_string(d) + ".dll", "f" + std::to_string(f));
    }
  }
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<PairKey> keys;
    std::size_t len = 1 + testutil::pick(rng, 10);
    for (std::size_t i = 0; i < len; ++i) {
      keys.push_back({"d" + std::to_string(testutil::pick(rng, 5)) + ".dll",
                      "f" + std::to_string(testutil::pick(rng, 10))});
    }
    TableVector once = vectorize(keys, reg, TableKind::iat);
    std::vector<PairKey> shuffled = keys;
    for (std::size_t i = shuffled.size(); i > 1; --i) {
      std::swap(shuffled[i - 1], shuffled[testutil::pick(rng, i)]);
    }
    CHECK(vectorize(shuffled, reg, TableKind::iat).ids == once.ids);
    std::vector<PairKey> doubled = keys;
    doubled.insert(doubled.end(), keys.begin(), keys.end());
    CHECK(vectorize(doubled, reg, TableKind::iat).ids == once.ids);
  }
}

TEST_CASE("bitvector encoding matches the worked malware/benign columns") {
  PairRegistry reg = table2_registry();
  // Attributes in registration order: dll_i.F1..F3, dll_j.F1..F3, dll_k.F1.
  TableVector malware = vector_of_attributes(reg, {0, 1, 4});        // 1,1,0,0,1,0,0
  TableVector benign1 = vector_of_attributes(reg, {0, 2, 4, 6});     // 1,0,1,0,1,0,1
  TableVector benign2 = vector_of_attributes(reg, {2, 4, 5, 6});     // 0,0,1,0,1,1,1

  CHECK(as_integer(to_bitvector(malware, reg).bits) == 19);
  CHECK(as_integer(to_bitvector(benign1, reg).bits) == 85);
  CHECK(as_integer(to_bitvector(benign2, reg).bits) == 116);
  CHECK(as_integer(to_bitvector(testutil::make_vector({}, reg.version()), reg).bits) == 0);
}

TEST_CASE("to_bitvector rejects stale registry versions") {
  PairRegistry reg = table2_registry();
  TableVector v = vector_of_attributes(reg, {0});
  reg.register_pair("late.dll", "New");
  try {
    (void)to_bitvector(v, reg);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::version_mismatch);
  }
}

TEST_CASE("pair_index worked values") {
  CHECK(pair_index(1, 2, 7) == 0);
  CHECK(pair_index(2, 5, 7) == 8);
  CHECK(pair_index(6, 7, 7) == 20);
  CHECK_THROWS_AS((void)pair_index(2, 2, 7), Error);
  CHECK_THROWS_AS((void)pair_index(0, 1, 7), Error);
  CHECK_THROWS_AS((void)pair_index(1, 8, 7), Error);
}

TEST_CASE("triple_index worked values") {
  CHECK(triple_index(1, 2, 3, 3) == 0);
  CHECK(triple_index(1, 2, 3, 50) == 0);
  CHECK(triple_index(1, 2, 5, 6) == 2);
  for (std::uint64_t n : {3ull, 7ull, 19ull}) {
    CHECK(triple_index(n - 2, n - 1, n, n) == binom3(n) - 1);
  }
  CHECK_THROWS_AS((void)triple_index(1, 2, 2, 5), Error);
}

TEST_CASE("pair/triple indexes are exhaustive bijections agreeing with enumeration") {
  for (std::uint64_t n = 2; n <= 50; ++n) {
    std::uint64_t rank = 0;
    for (std::uint64_t i = 1; i <= n; ++i) {
      for (std::uint64_t j = i + 1; j <= n; ++j) {
        REQUIRE(pair_index(i, j, n) == rank);
        auto decoded = decode_pair_index(rank, n);
        REQUIRE(decoded.i == i);
        REQUIRE(decoded.j == j);
        ++rank;
      }
    }
    REQUIRE(rank == binom2(n));
  }
  for (std::uint64_t n = 3; n <= 50; ++n) {
    std::uint64_t rank = 0;
    for (std::uint64_t i = 1; i <= n; ++i) {
      for (std::uint64_t j = i + 1; j <= n; ++j) {
        for (std::uint64_t k = j + 1; k <= n; ++k) {
          REQUIRE(triple_index(i, j, k, n) == rank);
          auto decoded = decode_triple_index(rank, n);
          REQUIRE(decoded.i == i);
          REQUIRE(decoded.j == j);
          REQUIRE(decoded.k == k);
          ++rank;
        }
      }
    }
    REQUIRE(rank == binom3(n));
  }
}

TEST_CASE("worked binomial example: functions {1,2,5} over 7 encode to 265") {
  FunctionBitVector fbv;
  fbv.universe_size = 7;
  fbv.bits = Bitset::from_positions(7, std::vector<std::uint64_t>{0, 1, 4});
  CombinationVector combo = build_combination_vector(fbv, 2);
  CHECK(combo.positions == std::vector<std::uint64_t>{0, 3, 8});
  CHECK(as_integer(combo.to_bitset()) == 265);
}

TEST_CASE("combination corner cases") {
  FunctionBitVector one;
  one.universe_size = 7;
  one.bits = Bitset::from_positions(7, std::vector<std::uint64_t>{3});
  CHECK(build_combination_vector(one, 2).popcount() == 0);

  FunctionBitVector all;
  all.universe_size = 6;
  all.bits = Bitset(6);
  for (std::uint64_t i = 0; i < 6; ++i) all.bits.set(i);
  CHECK(build_combination_vector(all, 2).popcount() == binom2(6));
  CHECK(build_combination_vector(all, 3).popcount() == binom3(6));
}

TEST_CASE("popcount law and enumeration-oracle agreement on random bitvectors") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 60; ++trial) {
    std::uint64_t n = 3 + testutil::pick(rng, 30);
    FunctionBitVector fbv;
    fbv.universe_size = n;
    fbv.bits = testutil::random_bitset(rng, n, 0.4);
    std::uint64_t s = fbv.bits.count();
    for (int order : {2, 3}) {
      CombinationVector combo = build_combination_vector(fbv, order);
      CHECK(combo.popcount() == (order == 2 ? binom2(s) : binom3(s)));
      CHECK(combo.positions == oracle::combination_positions(fbv.bits.positions(), n, order));
      CHECK(std::is_sorted(combo.positions.begin(), combo.positions.end()));
    }
  }
}

TEST_CASE("remove_common_sets worked examples and partition property") {
  auto mk = [](std::vector<std::uint64_t> pos) {
    CombinationVector v;
    v.order = 2;
    v.universe_size = 10;
    v.positions = std::move(pos);
    return v;
  };

  SUBCASE("disjoint unions unchanged") {
    auto [m, g] = remove_common_sets(mk({0, 1}), mk({2, 3}));
    CHECK(m.positions == std::vector<std::uint64_t>{0, 1});
    CHECK(g.positions == std::vector<std::uint64_t>{2, 3});
  }
  SUBCASE("identical unions zero out") {
    auto [m, g] = remove_common_sets(mk({4, 5}), mk({4, 5}));
    CHECK(m.positions.empty());
    CHECK(g.positions.empty());
  }
  SUBCASE("worked difference") {
    auto [m, g] = remove_common_sets(mk({0, 1, 2}), mk({1, 2, 3}));
    CHECK(m.positions == std::vector<std::uint64_t>{0});
    CHECK(g.positions == std::vector<std::uint64_t>{3});
  }
  SUBCASE("mismatched shapes raise") {
    CombinationVector three;
    three.order = 3;
    three.universe_size = 10;
    CHECK_THROWS_AS((void)remove_common_sets(mk({}), three), Error);
  }
  SUBCASE("outputs are disjoint and partition the union with the common part") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<std::uint64_t> a, b;
      for (std::uint64_t p = 0; p < 40; ++p) {
        if (testutil::pick(rng, 2)) a.push_back(p);
        if (testutil::pick(rng, 2)) b.push_back(p);
      }
      auto [m, g] = remove_common_sets(mk(a), mk(b));
      CHECK(intersect_count(m.positions, g.positions) == 0);
      std::vector<std::uint64_t> common;
      std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
      std::vector<std::uint64_t> rebuilt = position_union(m.positions, common);
      rebuilt = position_union(rebuilt, g.positions);
      CHECK(rebuilt == position_union(a, b));
    }
  }
}

TEST_CASE("pair keys from imports and exports use names or #ordinal") {
  std::vector<pe::ImportedPair> imports;
  imports.push_back({"a.dll", pe::ImportByName{"Fn", 3}});
  imports.push_back({"b.dll", std::uint16_t{9}});
  auto keys = pair_keys_from_imports(imports);
  REQUIRE(keys.size() == 2);
  CHECK(keys[0] == PairKey{"a.dll", "Fn"});
  CHECK(keys[1] == PairKey{"b.dll", "#9"});

  std::vector<pe::ExportEntry> exports;
  exports.push_back({std::optional<std::string>{"Exp"}, 1});
  exports.push_back({std::nullopt, 2});
  auto ekeys = pair_keys_from_exports("self.dll", exports);
  REQUIRE(ekeys.size() == 2);
  CHECK(ekeys[0] == PairKey{"self.dll", "Exp"});
  CHECK(ekeys[1] == PairKey{"self.dll", "#2"});
}
