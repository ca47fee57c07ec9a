#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "iatforge/feature/vectors.hpp"
#include "iatforge/label.hpp"

namespace iatforge::knn {

using feature::TableKind;
using feature::TableVector;

/// Labeled vector sets the detector scans against.
struct TrainingBase {
  TableKind kind = TableKind::iat;
  std::vector<TableVector> malware;
  std::vector<TableVector> benign;
  std::uint64_t registry_version = 0;

  bool empty() const noexcept { return malware.empty() && benign.empty(); }
  std::size_t size() const noexcept { return malware.size() + benign.size(); }
};

enum class EatPolicy { ignore, either, both };

struct KnnConfig {
  int k = 9;                          // odd
  double similarity_threshold = 0.5;  // in (0,1]
  EatPolicy eat_policy = EatPolicy::either;

  void validate() const;
};

struct Neighbor {
  double distance = 0.0;      // in [0,1]
  Label label = Label::benign;
  std::size_t base_index = 0; // within its label's list

  bool operator==(const Neighbor&) const = default;
};

enum class DecisionStage { exact_match, filtered_vote, fallback_vote };

struct Verdict {
  Label label = Label::benign;
  DecisionStage stage = DecisionStage::fallback_vote;
  std::vector<Neighbor> neighbors;  // the k nearest, in decision order
};

/// Dissimilarity of two id sets: mismatches from both sides over total size.
/// 0 means set-equal, 1 means disjoint. Errors on empty-vs-empty.
double similarity(const TableVector& a, const TableVector& b);

/// Distances of x against every vector in `base`, in base order. The default
/// entry point fans out over OpenMP when enabled; the serial variant is the
/// reference implementation.
std::vector<double> similarity_scan(const TableVector& x, std::span<const TableVector> base);
std::vector<double> similarity_scan_serial(const TableVector& x, std::span<const TableVector> base);

/// The min(k, base size) nearest neighbors ordered by (distance, benign
/// before malware, base index).
std::vector<Neighbor> k_nearest(const TableVector& x, const TrainingBase& base, int k);

/// Two-stage decision: exact match decides immediately (benign side checked
/// first); otherwise majority among neighbors closer than the threshold, and
/// if that filter leaves nothing or ties, majority over all k.
Verdict classify(const TableVector& x, const TrainingBase& base, const KnnConfig& config);

}  // namespace iatforge::knn
