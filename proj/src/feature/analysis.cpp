#include "iatforge/feature/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "iatforge/error.hpp"

namespace iatforge::feature {

namespace {

/// IG from the four joint counts; exact zero for empty cells.
double ig_from_counts(std::uint64_t n_set_malware, std::uint64_t n_set_benign, std::uint64_t n_malware,
                      std::uint64_t n_benign) {
  const std::uint64_t total = n_malware + n_benign;
  const std::uint64_t n_set = n_set_malware + n_set_benign;
  const std::uint64_t joint[2][2] = {
      {n_malware - n_set_malware, n_benign - n_set_benign},  // attribute absent
      {n_set_malware, n_set_benign},                         // attribute present
  };
  const std::uint64_t by_value[2] = {total - n_set, n_set};
  const std::uint64_t by_class[2] = {n_malware, n_benign};

  double ig = 0.0;
  for (int v = 0; v < 2; ++v) {
    for (int c = 0; c < 2; ++c) {
      if (joint[v][c] == 0) continue;
      double p_joint = static_cast<double>(joint[v][c]) / static_cast<double>(total);
      double ratio = static_cast<double>(joint[v][c]) * static_cast<double>(total) /
                     (static_cast<double>(by_value[v]) * static_cast<double>(by_class[c]));
      ig += p_joint * std::log2(ratio);
    }
  }
  return ig;
}

struct ClassCounts {
  std::uint64_t malware = 0;
  std::uint64_t benign = 0;
};

template <typename Sample>
ClassCounts count_labels(std::span<const std::pair<Sample, Label>> samples) {
  ClassCounts counts;
  for (const auto& [sample, label] : samples) {
    (label == Label::malware ? counts.malware : counts.benign)++;
  }
  return counts;
}

/// Attribute IG table keyed by attribute identity (bit position or pair id).
template <typename Sample, typename AttrsOf>
std::unordered_map<std::uint64_t, double> attribute_gains(
    std::span<const std::pair<Sample, Label>> samples, const ClassCounts& classes, AttrsOf&& attrs_of) {
  struct SetCounts {
    std::uint64_t malware = 0;
    std::uint64_t benign = 0;
  };
  std::unordered_map<std::uint64_t, SetCounts> set_counts;
  for (const auto& [sample, label] : samples) {
    for (std::uint64_t attr : attrs_of(sample)) {
      auto& c = set_counts[attr];
      (label == Label::malware ? c.malware : c.benign)++;
    }
  }
  std::unordered_map<std::uint64_t, double> gains;
  gains.reserve(set_counts.size());
  for (const auto& [attr, c] : set_counts) {
    gains.emplace(attr, ig_from_counts(c.malware, c.benign, classes.malware, classes.benign));
  }
  return gains;
}

template <typename Sample, typename AttrsOf, typename PopOf>
std::vector<std::pair<Sample, Label>> prune_impl(const std::vector<std::pair<Sample, Label>>& vectors,
                                                 double keep_fraction, PruneScore score, AttrsOf&& attrs_of,
                                                 PopOf&& pop_of) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
    raise(Errc::invalid_config, "keep fraction must be in (0,1]");
  }

  std::span<const std::pair<Sample, Label>> all(vectors);
  std::unordered_map<std::uint64_t, double> gains;
  if (score == PruneScore::ig && !vectors.empty()) {
    gains = attribute_gains<Sample>(all, count_labels<Sample>(all), attrs_of);
  }

  auto vector_score = [&](const Sample& sample) -> double {
    if (score == PruneScore::density) return static_cast<double>(pop_of(sample));
    std::uint64_t pop = 0;
    double sum = 0.0;
    for (std::uint64_t attr : attrs_of(sample)) {
      ++pop;
      if (auto it = gains.find(attr); it != gains.end()) sum += it->second;
    }
    return pop == 0 ? 0.0 : sum / static_cast<double>(pop);
  };

  std::vector<std::pair<Sample, Label>> out;
  for (Label label : {Label::malware, Label::benign}) {
    std::vector<std::size_t> indices;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      if (vectors[i].second == label) indices.push_back(i);
    }
    if (indices.empty()) continue;
    std::vector<double> scores(vectors.size());
    for (std::size_t i : indices) scores[i] = vector_score(vectors[i].first);
    std::stable_sort(indices.begin(), indices.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::size_t keep = static_cast<std::size_t>(
        std::ceil(keep_fraction * static_cast<double>(indices.size())));
    keep = std::min(keep, indices.size());
    indices.resize(keep);
    std::sort(indices.begin(), indices.end());  // preserve original order among the kept
    for (std::size_t i : indices) out.push_back(vectors[i]);
  }
  return out;
}

}  // namespace

double information_gain(std::uint64_t attribute,
                        std::span<const std::pair<FunctionBitVector, Label>> samples) {
  if (samples.empty()) raise(Errc::degenerate_input, "no samples");
  ClassCounts classes = count_labels<FunctionBitVector>(samples);
  if (classes.malware == 0 || classes.benign == 0) {
    raise(Errc::degenerate_input, "information gain needs both labels present");
  }
  std::uint64_t set_malware = 0, set_benign = 0;
  for (const auto& [fbv, label] : samples) {
    if (fbv.bits.test(attribute)) (label == Label::malware ? set_malware : set_benign)++;
  }
  return ig_from_counts(set_malware, set_benign, classes.malware, classes.benign);
}

std::vector<std::pair<FunctionBitVector, Label>> prune_base(
    const std::vector<std::pair<FunctionBitVector, Label>>& vectors, double keep_fraction,
    PruneScore score) {
  return prune_impl(
      vectors, keep_fraction, score, [](const FunctionBitVector& v) { return v.bits.positions(); },
      [](const FunctionBitVector& v) { return v.bits.count(); });
}

std::vector<std::pair<TableVector, Label>> prune_base(const std::vector<std::pair<TableVector, Label>>& vectors,
                                                      double keep_fraction, PruneScore score) {
  return prune_impl(
      vectors, keep_fraction, score, [](const TableVector& v) { return v.ids; },
      [](const TableVector& v) { return v.ids.size(); });
}

}  // namespace iatforge::feature
