#include "iatforge/knn/detector.hpp"

#include <algorithm>

#include "iatforge/error.hpp"
#include "iatforge/parallel.hpp"

namespace iatforge::knn {

void KnnConfig::validate() const {
  if (k <= 0 || k % 2 == 0) raise(Errc::invalid_config, "k must be odd and positive");
  if (!(similarity_threshold > 0.0 && similarity_threshold <= 1.0)) {
    raise(Errc::invalid_config, "similarity threshold must be in (0,1]");
  }
}

double similarity(const TableVector& a, const TableVector& b) {
  if (a.kind != b.kind) raise(Errc::invalid_config, "cannot compare IAT with EAT vectors");
  if (a.empty() && b.empty()) raise(Errc::both_empty, "similarity undefined on two empty vectors");

  // Sorted merge counting ids unique to each side.
  std::size_t ia = 0, ib = 0, mismatches = 0;
  while (ia < a.ids.size() && ib < b.ids.size()) {
    if (a.ids[ia] < b.ids[ib]) {
      ++mismatches;
      ++ia;
    } else if (b.ids[ib] < a.ids[ia]) {
      ++mismatches;
      ++ib;
    } else {
      ++ia;
      ++ib;
    }
  }
  mismatches += (a.ids.size() - ia) + (b.ids.size() - ib);
  return static_cast<double>(mismatches) / static_cast<double>(a.ids.size() + b.ids.size());
}

namespace {

std::vector<double> scan_impl(const TableVector& x, std::span<const TableVector> base, bool parallel) {
  std::vector<double> out(base.size());
#pragma omp parallel for schedule(static) if (parallel)
  for (std::size_t i = 0; i < base.size(); ++i) {
    out[i] = similarity(x, base[i]);
  }
  return out;
}

bool neighbor_before(const Neighbor& a, const Neighbor& b) {
  if (a.distance != b.distance) return a.distance < b.distance;
  if (a.label != b.label) return a.label == Label::benign;
  return a.base_index < b.base_index;
}

}  // namespace

std::vector<double> similarity_scan(const TableVector& x, std::span<const TableVector> base) {
  return scan_impl(x, base, par::enabled());
}

std::vector<double> similarity_scan_serial(const TableVector& x, std::span<const TableVector> base) {
  return scan_impl(x, base, false);
}

std::vector<Neighbor> k_nearest(const TableVector& x, const TrainingBase& base, int k) {
  if (base.empty()) raise(Errc::empty_base, "no vectors to scan");
  if (k <= 0) raise(Errc::invalid_config, "k must be positive");

  std::vector<Neighbor> all;
  all.reserve(base.size());
  std::vector<double> d_benign = similarity_scan(x, base.benign);
  for (std::size_t i = 0; i < d_benign.size(); ++i) all.push_back({d_benign[i], Label::benign, i});
  std::vector<double> d_malware = similarity_scan(x, base.malware);
  for (std::size_t i = 0; i < d_malware.size(); ++i) all.push_back({d_malware[i], Label::malware, i});

  std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(k), all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), neighbor_before);
  all.resize(keep);
  return all;
}

Verdict classify(const TableVector& x, const TrainingBase& base, const KnnConfig& config) {
  config.validate();
  if (base.empty()) raise(Errc::empty_base, "no vectors to scan");
  if (x.empty()) raise(Errc::empty_vector, "cannot classify an empty vector");

  Verdict verdict;
  verdict.neighbors = k_nearest(x, base, config.k);

  // Distance 0 is an exact set match; benign sorts first on ties, which keeps
  // the benign-side check ahead of the malware side.
  if (verdict.neighbors.front().distance == 0.0) {
    verdict.label = verdict.neighbors.front().label;
    verdict.stage = DecisionStage::exact_match;
    return verdict;
  }

  std::size_t close_malware = 0, close_benign = 0;
  for (const Neighbor& n : verdict.neighbors) {
    if (n.distance < config.similarity_threshold) {
      (n.label == Label::malware ? close_malware : close_benign)++;
    }
  }
  if (close_malware != close_benign) {
    verdict.label = close_malware > close_benign ? Label::malware : Label::benign;
    verdict.stage = DecisionStage::filtered_vote;
    return verdict;
  }

  std::size_t all_malware = 0;
  for (const Neighbor& n : verdict.neighbors) {
    if (n.label == Label::malware) ++all_malware;
  }
  std::size_t all_benign = verdict.neighbors.size() - all_malware;
  verdict.label = all_malware > all_benign ? Label::malware : Label::benign;
  verdict.stage = DecisionStage::fallback_vote;
  return verdict;
}

}  // namespace iatforge::knn
