#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "iatforge/error.hpp"
#include "iatforge/feature/registry.hpp"

using namespace iatforge;
using namespace iatforge::feature;

TEST_CASE("first registration gets id 0, second dll shifts into the top bits") {
  PairRegistry reg;
  CHECK(reg.register_pair("kernel32.dll", "ExitProcess").value == 0);
  CHECK(reg.register_pair("user32.dll", "MessageBoxA").value == (std::uint64_t{1} << 44));
  CHECK(reg.register_pair("kernel32.dll", "CreateFileA").value == 1);
  CHECK(reg.universe_size() == 3);
  CHECK(reg.dll_count() == 2);
}

TEST_CASE("re-registering returns the existing id without a version bump") {
  PairRegistry reg;
  PairId first = reg.register_pair("a.dll", "F");
  std::uint64_t v = reg.version();
  CHECK(reg.register_pair("a.dll", "F") == first);
  CHECK(reg.version() == v);
}

TEST_CASE("lookup misses return nothing") {
  PairRegistry reg;
  reg.register_pair("a.dll", "F");
  CHECK_FALSE(reg.lookup("a.dll", "G").has_value());
  CHECK_FALSE(reg.lookup("b.dll", "F").has_value());
  CHECK(reg.lookup("a.dll", "F").has_value());
}

TEST_CASE("pack/unpack are mutually inverse over random ids") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10000; ++trial) {
    std::uint64_t dll = testutil::pick(rng, PairId::kMaxDlls);
    std::uint64_t fn = testutil::pick(rng, PairId::kMaxFuncsPerDll);
    PairId id = PairId::pack(dll, fn);
    CHECK(id.dll_id() == dll);
    CHECK(id.func_id() == fn);
    CHECK(id.value == dll * (std::uint64_t{1} << 44) + fn);
  }
}

TEST_CASE("pack rejects overflowing namespaces") {
  CHECK_THROWS_AS((void)PairId::pack(PairId::kMaxDlls, 0), Error);
  CHECK_THROWS_AS((void)PairId::pack(0, PairId::kMaxFuncsPerDll), Error);
}

TEST_CASE("dense index ranks pairs by ascending id value") {
  PairRegistry reg;
  // Interleaved registration: ranks follow id order, not insertion order.
  PairId a0 = reg.register_pair("a.dll", "F0");  // (0,0)
  PairId b0 = reg.register_pair("b.dll", "G0");  // (1,0)
  PairId a1 = reg.register_pair("a.dll", "F1");  // (0,1)

  CHECK(reg.dense_index(a0) == 0);
  CHECK(reg.dense_index(a1) == 1);
  CHECK(reg.dense_index(b0) == 2);
  CHECK(reg.pair_at(0) == a0);
  CHECK(reg.pair_at(1) == a1);
  CHECK(reg.pair_at(2) == b0);
  CHECK_THROWS_AS((void)reg.pair_at(3), Error);
}

TEST_CASE("restore rebuilds an equal registry") {
  PairRegistry reg;
  reg.register_pair("a.dll", "F0");
  reg.register_pair("b.dll", "G0");
  reg.register_pair("a.dll", "F1");

  PairRegistry copy = PairRegistry::restore({"a.dll", "b.dll"}, {{"F0", "F1"}, {"G0"}});
  CHECK(copy == reg);
  CHECK(copy.version() == reg.version());
}

TEST_CASE("ordinal keys take the #<decimal> form") {
  CHECK(ordinal_key(7) == "#7");
  CHECK(ordinal_key(65535) == "#65535");
}
