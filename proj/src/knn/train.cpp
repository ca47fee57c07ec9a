#include "iatforge/knn/train.hpp"

#include "iatforge/error.hpp"

namespace iatforge::knn {

void TrainConfig::validate() const {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) raise(Errc::invalid_config, "epsilon must be in [0,1]");
  if (max_rounds <= 0) raise(Errc::invalid_config, "max rounds must be positive");
  knn.validate();
}

TrainResult train_iterative(TrainingBase seed, std::span<const TableVector> samples,
                            const TrainConfig& config) {
  config.validate();

  TrainResult result;
  result.base = std::move(seed);

  std::vector<const TableVector*> working;
  for (const TableVector& sample : samples) {
    if (sample.empty()) {
      ++result.skipped_empty;
      continue;
    }
    if (sample.kind != result.base.kind) raise(Errc::version_mismatch, "sample kind differs from base");
    if (!result.base.empty() && sample.registry_version != result.base.registry_version) {
      raise(Errc::version_mismatch, "sample registry version differs from base");
    }
    working.push_back(&sample);
  }
  if (working.empty()) return result;
  if (result.base.empty()) result.base.registry_version = working.front()->registry_version;

  const double n = static_cast<double>(working.size());
  std::vector<bool> absorbed(working.size(), false);

  for (int round = 0; round < config.max_rounds; ++round) {
    result.rounds = round + 1;
    std::size_t undetected = 0;
    for (std::size_t i = 0; i < working.size(); ++i) {
      if (absorbed[i]) continue;
      bool detected = false;
      if (!result.base.empty()) {
        detected = classify(*working[i], result.base, config.knn).label == Label::malware;
      }
      if (!detected) {
        result.base.malware.push_back(*working[i]);
        absorbed[i] = true;
        ++undetected;
        ++result.absorbed;
      }
    }
    result.undetected_per_round.push_back(undetected);
    if (undetected == 0) break;
    if (static_cast<double>(undetected) / n <= config.epsilon) break;
  }
  return result;
}

}  // namespace iatforge::knn
