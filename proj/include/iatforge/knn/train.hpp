#pragma once

#include <span>
#include <vector>

#include "iatforge/knn/detector.hpp"

namespace iatforge::knn {

struct TrainConfig {
  double epsilon = 0.05;  // tolerated undetected fraction of the sample set
  int max_rounds = 100;
  KnnConfig knn;

  void validate() const;
};

struct TrainResult {
  TrainingBase base;
  int rounds = 0;
  std::vector<std::size_t> undetected_per_round;
  std::size_t absorbed = 0;
  std::size_t skipped_empty = 0;
};

/// Iterative database creation: every round classifies each sample not yet in
/// the base with the base as it currently stands; undetected samples are
/// appended to the malware side immediately, so later samples in the same
/// round already see them. Stops once a round's undetected fraction of the
/// sample set drops to epsilon or below, or max_rounds is hit. Samples carry
/// the malware label by contract; empty vectors are skipped.
TrainResult train_iterative(TrainingBase seed, std::span<const TableVector> samples,
                            const TrainConfig& config);

}  // namespace iatforge::knn
