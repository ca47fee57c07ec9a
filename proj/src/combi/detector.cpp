#include "iatforge/combi/detector.hpp"

#include <algorithm>

#include "iatforge/error.hpp"
#include "iatforge/parallel.hpp"

namespace iatforge::combi {

namespace {

using feature::build_combination_vector;
using feature::decode_pair_index;
using feature::decode_triple_index;
using feature::position_union;

CombinationVector union_of(std::span<const FunctionBitVector> vectors, int order,
                           std::uint64_t universe_size) {
  CombinationVector acc;
  acc.order = order;
  acc.universe_size = universe_size;
  if (universe_size < static_cast<std::uint64_t>(order)) return acc;
  for (const FunctionBitVector& fbv : vectors) {
    CombinationVector combo = build_combination_vector(fbv, order);
    acc.positions = position_union(acc.positions, combo.positions);
  }
  return acc;
}

}  // namespace

CombiBase CombiBase::build(std::span<const FunctionBitVector> malware,
                           std::span<const FunctionBitVector> benign, Bitset blacklist,
                           std::uint64_t universe_size, std::uint64_t registry_version) {
  CombiBase base;
  base.universe_size = universe_size;
  base.registry_version = registry_version;
  base.blacklist = blacklist.size() == universe_size ? std::move(blacklist) : Bitset(universe_size);

  auto check = [&](const FunctionBitVector& fbv) {
    if (fbv.universe_size != universe_size || fbv.bits.size() != universe_size) {
      raise(Errc::length_mismatch, "bitvector universe differs from base");
    }
    if (fbv.registry_version != registry_version) {
      raise(Errc::version_mismatch, "bitvector registry version differs from base");
    }
  };
  for (const FunctionBitVector& fbv : malware) {
    check(fbv);
    base.malware_vectors.push_back(fbv.bits);
  }
  for (const FunctionBitVector& fbv : benign) {
    check(fbv);
    base.benign_vectors.push_back(fbv.bits);
  }

  auto [mbs, gbs] = feature::remove_common_sets(union_of(malware, 2, universe_size),
                                                union_of(benign, 2, universe_size));
  base.mbs = std::move(mbs);
  base.gbs = std::move(gbs);
  auto [mts, gts] = feature::remove_common_sets(union_of(malware, 3, universe_size),
                                                union_of(benign, 3, universe_size));
  base.mts = std::move(mts);
  base.gts = std::move(gts);
  return base;
}

void CombiBase::check_complete() const {
  if (blacklist.size() != universe_size) raise(Errc::length_mismatch, "blacklist length differs");
  for (const Bitset& v : malware_vectors) {
    if (v.size() != universe_size) raise(Errc::length_mismatch, "malware vector length differs");
  }
  for (const Bitset& v : benign_vectors) {
    if (v.size() != universe_size) raise(Errc::length_mismatch, "benign vector length differs");
  }
  auto check_union = [&](const CombinationVector& u, int order) {
    if (u.order != order || u.universe_size != universe_size) {
      raise(Errc::length_mismatch, "combination union inconsistent with universe");
    }
  };
  check_union(mbs, 2);
  check_union(gbs, 2);
  check_union(mts, 3);
  check_union(gts, 3);
  if (feature::intersect_count(mbs.positions, gbs.positions) != 0 ||
      feature::intersect_count(mts.positions, gts.positions) != 0) {
    raise(Errc::corrupt_payload, "union vectors share combinations; common sets were not removed");
  }
}

void CombiConfig::validate() const {
  if (p <= 0) raise(Errc::invalid_config, "p must be positive");
  if (!(gap_ratio >= 1.0)) raise(Errc::invalid_config, "gap ratio must be >= 1");
  if (vote_threshold < 0) raise(Errc::invalid_config, "vote threshold must be >= 0");
}

namespace {

std::vector<std::uint64_t> count_scan(const Bitset& x, std::span<const Bitset> vectors, bool parallel,
                                      bool use_xor) {
  std::vector<std::uint64_t> out(vectors.size());
#pragma omp parallel for schedule(static) if (parallel)
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    out[i] = use_xor ? x.xor_count(vectors[i]) : x.and_count(vectors[i]);
  }
  return out;
}

}  // namespace

std::vector<std::uint64_t> xor_count_scan(const Bitset& x, std::span<const Bitset> vectors) {
  return count_scan(x, vectors, par::enabled(), true);
}
std::vector<std::uint64_t> xor_count_scan_serial(const Bitset& x, std::span<const Bitset> vectors) {
  return count_scan(x, vectors, false, true);
}
std::vector<std::uint64_t> and_count_scan(const Bitset& x, std::span<const Bitset> vectors) {
  return count_scan(x, vectors, par::enabled(), false);
}
std::vector<std::uint64_t> and_count_scan_serial(const Bitset& x, std::span<const Bitset> vectors) {
  return count_scan(x, vectors, false, false);
}

namespace {

std::uint64_t match_count_impl(const Bitset& x, const CombinationVector& u, bool parallel) {
  const std::uint64_t n = u.universe_size;
  if (x.size() != n) raise(Errc::length_mismatch, "bitvector universe differs from union");
  std::uint64_t total = 0;
  const auto& positions = u.positions;
  if (u.order == 2) {
#pragma omp parallel for schedule(static) reduction(+ : total) if (parallel)
    for (std::size_t e = 0; e < positions.size(); ++e) {
      auto [i, j] = decode_pair_index(positions[e], n);
      if (x.test(i - 1) && x.test(j - 1)) ++total;
    }
  } else {
#pragma omp parallel for schedule(static) reduction(+ : total) if (parallel)
    for (std::size_t e = 0; e < positions.size(); ++e) {
      auto [i, j, k] = decode_triple_index(positions[e], n);
      if (x.test(i - 1) && x.test(j - 1) && x.test(k - 1)) ++total;
    }
  }
  return total;
}

}  // namespace

std::uint64_t combination_match_count(const Bitset& x, const CombinationVector& combo_union) {
  return match_count_impl(x, combo_union, par::enabled());
}

/// Reference path: materialize x's combinations and intersect the sorted
/// position lists. Equivalent to the decoding kernel; kept for testing and for
/// small universes.
std::uint64_t combination_match_count_serial(const Bitset& x, const CombinationVector& combo_union) {
  if (x.size() != combo_union.universe_size) {
    raise(Errc::length_mismatch, "bitvector universe differs from union");
  }
  if (combo_union.universe_size < static_cast<std::uint64_t>(combo_union.order)) return 0;
  FunctionBitVector fbv;
  fbv.bits = x;
  fbv.universe_size = x.size();
  CombinationVector mine = feature::build_combination_vector_serial(fbv, combo_union.order);
  return feature::intersect_count(mine.positions, combo_union.positions);
}

bool blacklist_test(const Bitset& x, const CombiBase& base) {
  return x.and_count(base.blacklist) > 0;
}

TestOutcome neighbor_vote_test(const Bitset& x, const CombiBase& base, VoteMode mode,
                               const CombiConfig& config) {
  config.validate();
  if (base.malware_vectors.empty() || base.benign_vectors.empty()) {
    raise(Errc::empty_base, "neighbor vote needs both vector sets");
  }

  const bool use_xor = mode == VoteMode::xor_distance;
  std::vector<std::uint64_t> m_scores =
      use_xor ? xor_count_scan(x, base.malware_vectors) : and_count_scan(x, base.malware_vectors);
  std::vector<std::uint64_t> b_scores =
      use_xor ? xor_count_scan(x, base.benign_vectors) : and_count_scan(x, base.benign_vectors);

  struct Scored {
    std::uint64_t score;
    Label label;
    std::size_t index;
  };
  std::vector<Scored> all;
  all.reserve(m_scores.size() + b_scores.size());
  for (std::size_t i = 0; i < b_scores.size(); ++i) all.push_back({b_scores[i], Label::benign, i});
  for (std::size_t i = 0; i < m_scores.size(); ++i) all.push_back({m_scores[i], Label::malware, i});

  auto better = [use_xor](const Scored& a, const Scored& b) {
    if (a.score != b.score) return use_xor ? a.score < b.score : a.score > b.score;
    if (a.label != b.label) return a.label == Label::benign;
    return a.index < b.index;
  };
  std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(2 * config.p + 1), all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), better);
  all.resize(keep);

  TestOutcome out;
  out.id = use_xor ? TestId::xor_vote : TestId::and_vote;
  for (const Scored& s : all) {
    (s.label == Label::malware ? out.kept_malware : out.kept_benign)++;
  }
  out.best_score = all[0].score;
  out.best_label = all[0].label;
  out.second_score = all.size() > 1 ? all[1].score : all[0].score;

  Label outcome = Label::benign;
  bool has_majority = out.kept_malware != out.kept_benign;
  if (has_majority) {
    outcome = out.kept_malware > out.kept_benign ? Label::malware : Label::benign;
    if (all.size() > 1 && all[0].label != outcome) {
      double best = static_cast<double>(out.best_score);
      double second = static_cast<double>(out.second_score);
      bool gap = use_xor ? (second > best && second >= config.gap_ratio * best)
                         : (best > second && best >= config.gap_ratio * second);
      if (gap) {
        outcome = all[0].label;
        out.gap_override = true;
      }
    }
  }
  out.vote = outcome == Label::malware;
  return out;
}

TestOutcome combination_test(const Bitset& x, const CombiBase& base, int order) {
  if (order != 2 && order != 3) raise(Errc::invalid_config, "order must be 2 or 3");
  TestOutcome out;
  out.id = order == 2 ? TestId::binomial : TestId::trinomial;
  out.d_m = combination_match_count(x, order == 2 ? base.mbs : base.mts);
  out.d_g = combination_match_count(x, order == 2 ? base.gbs : base.gts);
  out.vote = out.d_m > out.d_g;
  return out;
}

CombiVerdict detect(const FunctionBitVector& x, const CombiBase& base, const CombiConfig& config) {
  config.validate();
  base.check_complete();
  if (x.universe_size != base.universe_size) raise(Errc::length_mismatch, "universe size differs");
  if (x.registry_version != base.registry_version) {
    raise(Errc::version_mismatch, "bitvector registry version differs from base");
  }

  CombiVerdict verdict;

  TestOutcome blacklist_outcome;
  blacklist_outcome.id = TestId::blacklist;
  blacklist_outcome.blacklist_hits = x.bits.and_count(base.blacklist);
  blacklist_outcome.vote = blacklist_outcome.blacklist_hits > 0;
  verdict.per_test[0] = blacklist_outcome;

  verdict.per_test[1] = neighbor_vote_test(x.bits, base, VoteMode::xor_distance, config);
  verdict.per_test[2] = neighbor_vote_test(x.bits, base, VoteMode::and_distance, config);
  verdict.per_test[3] = combination_test(x.bits, base, 2);
  verdict.per_test[4] = combination_test(x.bits, base, 3);

  for (const TestOutcome& t : verdict.per_test) {
    if (t.vote) ++verdict.type_count;
  }
  bool malicious = verdict.type_count >= config.vote_threshold;
  if (config.blacklist_decisive && blacklist_outcome.vote) malicious = true;
  verdict.label = malicious ? Label::malware : Label::benign;
  return verdict;
}

}  // namespace iatforge::combi
