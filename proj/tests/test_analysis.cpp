#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "oracles.hpp"
#include "iatforge/error.hpp"
#include "iatforge/feature/analysis.hpp"

using namespace iatforge;
using namespace iatforge::feature;

namespace {

FunctionBitVector fbv_of(std::uint64_t universe, std::vector<std::uint64_t> positions) {
  FunctionBitVector v;
  v.universe_size = universe;
  v.bits = Bitset::from_positions(universe, positions);
  return v;
}

std::vector<std::pair<FunctionBitVector, Label>> labeled(std::uint64_t universe,
                                                         std::vector<std::pair<std::vector<std::uint64_t>, Label>> rows) {
  std::vector<std::pair<FunctionBitVector, Label>> out;
  for (auto& [positions, label] : rows) out.emplace_back(fbv_of(universe, positions), label);
  return out;
}

}  // namespace

TEST_CASE("constant attribute gains nothing") {
  auto samples = labeled(2, {{{0}, Label::malware}, {{0}, Label::benign}, {{0}, Label::malware}});
  CHECK(information_gain(0, samples) == doctest::Approx(0.0));
}

TEST_CASE("an attribute equal to the label over balanced classes gains exactly one bit") {
  auto samples = labeled(1, {{{0}, Label::malware}, {{0}, Label::malware}, {{}, Label::benign}, {{}, Label::benign}});
  CHECK(information_gain(0, samples) == doctest::Approx(1.0));
}

TEST_CASE("label-independent attribute gains nothing") {
  auto samples = labeled(1, {{{0}, Label::malware},
                             {{}, Label::malware},
                             {{0}, Label::benign},
                             {{}, Label::benign}});
  CHECK(information_gain(0, samples) == doctest::Approx(0.0));
}

TEST_CASE("single-label input is degenerate") {
  auto samples = labeled(1, {{{0}, Label::malware}, {{}, Label::malware}});
  try {
    (void)information_gain(0, samples);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::degenerate_input);
  }
}

TEST_CASE("information gain is nonnegative, label-symmetric, and matches the joint-table oracle") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    std::uint64_t universe = 1 + testutil::pick(rng, 8);
    std::size_t count = 4 + testutil::pick(rng, 20);
    std::vector<std::pair<FunctionBitVector, Label>> samples;
    std::vector<std::pair<std::vector<int>, Label>> rows;
    bool has_m = false, has_b = false;
    for (std::size_t i = 0; i < count; ++i) {
      Label label = testutil::pick(rng, 2) ? Label::malware : Label::benign;
      if (i == 0) label = Label::malware;
      if (i == 1) label = Label::benign;
      (label == Label::malware ? has_m : has_b) = true;
      Bitset bits = testutil::random_bitset(rng, universe, 0.5);
      std::vector<int> row(universe, 0);
      for (auto p : bits.positions()) row[static_cast<std::size_t>(p)] = 1;
      FunctionBitVector fbv;
      fbv.universe_size = universe;
      fbv.bits = std::move(bits);
      samples.emplace_back(std::move(fbv), label);
      rows.emplace_back(std::move(row), label);
    }
    REQUIRE((has_m && has_b));

    auto flipped = samples;
    for (auto& [fbv, label] : flipped) label = label == Label::malware ? Label::benign : Label::malware;

    for (std::uint64_t attr = 0; attr < universe; ++attr) {
      double ig = information_gain(attr, samples);
      CHECK(ig >= -1e-12);
      CHECK(ig == doctest::Approx(oracle::information_gain(rows, attr)).epsilon(1e-9));
      CHECK(ig == doctest::Approx(information_gain(attr, flipped)).epsilon(1e-12));
    }
  }
}

TEST_CASE("prune keeps everything at fraction 1.0") {
  auto samples = labeled(4, {{{0, 1}, Label::malware}, {{2}, Label::malware}, {{3}, Label::benign}});
  auto kept = prune_base(samples, 1.0, PruneScore::density);
  CHECK(kept.size() == 3);
}

TEST_CASE("density prune keeps the densest half") {
  auto samples = labeled(6, {{{0}, Label::malware},
                             {{0, 1, 2, 3}, Label::malware},
                             {{0, 1}, Label::malware},
                             {{0, 1, 2}, Label::malware}});
  auto kept = prune_base(samples, 0.5, PruneScore::density);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].first.bits.count() == 4);
  CHECK(kept[1].first.bits.count() == 3);
}

TEST_CASE("equal scores keep earlier insertions") {
  auto samples = labeled(6, {{{0, 1}, Label::malware},
                             {{2, 3}, Label::malware},
                             {{4, 5}, Label::malware}});
  auto kept = prune_base(samples, 0.34, PruneScore::density);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].first.bits.positions() == std::vector<std::uint64_t>{0, 1});
}

TEST_CASE("prune rounds the keep count up and works per label") {
  auto samples = labeled(4, {{{0}, Label::malware},
                             {{1}, Label::malware},
                             {{2}, Label::malware},
                             {{3}, Label::benign},
                             {{0, 1}, Label::benign},
                             {{1, 2}, Label::benign}});
  auto kept = prune_base(samples, 0.5, PruneScore::density);
  std::size_t m = 0, b = 0;
  for (const auto& [v, label] : kept) (label == Label::malware ? m : b)++;
  CHECK(m == 2);  // ceil(0.5 * 3)
  CHECK(b == 2);
}

TEST_CASE("ig prune favors vectors made of separating attributes") {
  // Attribute 0 separates perfectly; attributes 1..3 are noise shared by both labels.
  auto samples = labeled(4, {{{0}, Label::malware},
                             {{0}, Label::malware},
                             {{1, 2, 3}, Label::malware},
                             {{1}, Label::benign},
                             {{1, 2}, Label::benign},
                             {{2, 3}, Label::benign}});
  auto kept = prune_base(samples, 0.67, PruneScore::ig);
  std::size_t with_attr0 = 0;
  for (const auto& [v, label] : kept) {
    if (label == Label::malware && v.bits.test(0)) ++with_attr0;
  }
  CHECK(with_attr0 == 2);  // both attr-0 vectors outrank the noise vector
}

TEST_CASE("prune on table vectors mirrors the bitvector behavior") {
  std::vector<std::pair<TableVector, Label>> samples;
  samples.emplace_back(testutil::make_vector({1, 2, 3}), Label::malware);
  samples.emplace_back(testutil::make_vector({1}), Label::malware);
  samples.emplace_back(testutil::make_vector({9}), Label::benign);
  auto kept = prune_base(samples, 0.5, PruneScore::density);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].first.ids.size() == 3);
  CHECK(kept[1].second == Label::benign);
}

TEST_CASE("invalid keep fraction raises") {
  std::vector<std::pair<TableVector, Label>> samples;
  CHECK_THROWS_AS((void)prune_base(samples, 0.0, PruneScore::density), Error);
  CHECK_THROWS_AS((void)prune_base(samples, 1.5, PruneScore::density), Error);
}
