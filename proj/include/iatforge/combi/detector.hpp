#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "iatforge/bitset.hpp"
#include "iatforge/feature/vectors.hpp"
#include "iatforge/label.hpp"

namespace iatforge::combi {

using feature::CombinationVector;
using feature::FunctionBitVector;

/// Blacklist vector, labeled function-bitvector sets, and the binomial and
/// trinomial union vectors (common sets removed) the five tests run against.
struct CombiBase {
  Bitset blacklist;
  std::vector<Bitset> malware_vectors;
  std::vector<Bitset> benign_vectors;
  CombinationVector mbs, gbs;  // order-2 unions, bitwise disjoint
  CombinationVector mts, gts;  // order-3 unions, bitwise disjoint
  std::uint64_t universe_size = 0;
  std::uint64_t registry_version = 0;

  /// Builds vectors sets and disjoint unions from labeled bitvectors.
  static CombiBase build(std::span<const FunctionBitVector> malware,
                         std::span<const FunctionBitVector> benign, Bitset blacklist,
                         std::uint64_t universe_size, std::uint64_t registry_version);

  void check_complete() const;
};

struct CombiConfig {
  int p = 15;              // neighbor count is 2p+1
  double gap_ratio = 4.0;  // best-vs-second override factor
  int vote_threshold = 2;
  bool blacklist_decisive = false;  // the "certain" reading of a blacklist hit

  void validate() const;
};

enum class TestId : int { blacklist = 0, xor_vote = 1, and_vote = 2, binomial = 3, trinomial = 4 };
enum class VoteMode { xor_distance, and_distance };

struct TestOutcome {
  TestId id = TestId::blacklist;
  bool vote = false;  // contributed a malicious vote
  // blacklist evidence
  std::uint64_t blacklist_hits = 0;
  // neighbor-vote evidence
  std::uint64_t best_score = 0;
  std::uint64_t second_score = 0;
  Label best_label = Label::benign;
  std::size_t kept_malware = 0;
  std::size_t kept_benign = 0;
  bool gap_override = false;
  // combination-test evidence
  std::uint64_t d_m = 0;
  std::uint64_t d_g = 0;
};

struct CombiVerdict {
  Label label = Label::benign;
  int type_count = 0;
  std::array<TestOutcome, 5> per_test{};
};

/// Popcount scans over the base vectors; default dispatches to OpenMP, the
/// serial variants are the reference implementations.
std::vector<std::uint64_t> xor_count_scan(const Bitset& x, std::span<const Bitset> vectors);
std::vector<std::uint64_t> xor_count_scan_serial(const Bitset& x, std::span<const Bitset> vectors);
std::vector<std::uint64_t> and_count_scan(const Bitset& x, std::span<const Bitset> vectors);
std::vector<std::uint64_t> and_count_scan_serial(const Bitset& x, std::span<const Bitset> vectors);

/// Number of union combinations whose member functions are all set in x; this
/// equals popcount(combinations(x) AND union) without materializing the left side.
std::uint64_t combination_match_count(const Bitset& x, const CombinationVector& combo_union);
std::uint64_t combination_match_count_serial(const Bitset& x, const CombinationVector& combo_union);

/// True iff x shares at least one function with the blacklist.
bool blacklist_test(const Bitset& x, const CombiBase& base);

/// Nearest-neighbor vote over XOR (smaller closer) or AND (bigger closer)
/// popcounts, keeping the 2p+1 best across both labels. A decisive gap between
/// the best and second-best score lets the best vector's label override the
/// majority.
TestOutcome neighbor_vote_test(const Bitset& x, const CombiBase& base, VoteMode mode,
                               const CombiConfig& config);

/// d_m vs d_g over the order-k unions; strict d_m > d_g votes malicious, ties
/// and 0/0 vote nothing.
TestOutcome combination_test(const Bitset& x, const CombiBase& base, int order);

/// The five tests in order (blacklist, XOR, AND, binomial, trinomial); the
/// type counter reaching vote_threshold makes the verdict malicious.
CombiVerdict detect(const FunctionBitVector& x, const CombiBase& base, const CombiConfig& config);

}  // namespace iatforge::combi
