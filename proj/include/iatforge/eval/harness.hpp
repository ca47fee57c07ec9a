#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "iatforge/combi/detector.hpp"
#include "iatforge/feature/analysis.hpp"
#include "iatforge/feature/registry.hpp"
#include "iatforge/knn/detector.hpp"
#include "iatforge/label.hpp"

namespace iatforge::eval {

struct CorpusEntry {
  std::string name;
  feature::TableVector iat;
  std::optional<feature::TableVector> eat;
  Label truth = Label::benign;
};

struct LabeledCorpus {
  std::vector<CorpusEntry> entries;
};

enum class Engine { knn, combi, both };

struct ConfusionCounts {
  std::uint64_t true_positive = 0;   // malware detected as malware
  std::uint64_t false_negative = 0;  // malware detected as benign
  std::uint64_t false_positive = 0;  // benign detected as malware
  std::uint64_t true_negative = 0;

  bool operator==(const ConfusionCounts&) const = default;
};

/// The deterministic half of a report; timing lives beside it so two runs over
/// the same inputs compare equal.
struct MetricsPayload {
  ConfusionCounts counts;
  double true_positive_rate = 0.0;
  double false_positive_rate = 0.0;
  double true_negative_rate = 0.0;
  double false_negative_rate = 0.0;

  bool operator==(const MetricsPayload&) const = default;
};

struct MetricsReport {
  MetricsPayload payload;
  double mean_seconds_per_file = 0.0;
};

struct EvalBases {
  const feature::PairRegistry* registry = nullptr;
  const knn::TrainingBase* iat_base = nullptr;
  const knn::TrainingBase* eat_base = nullptr;  // optional side
  const combi::CombiBase* combi_base = nullptr;
};

struct EvalConfigs {
  knn::KnnConfig knn;
  combi::CombiConfig combi;
};

/// Classifies one corpus entry under the chosen engine(s); entries with an
/// empty IAT vector are labeled malware outright (the no-IAT suspicion rule).
Label classify_entry(const CorpusEntry& entry, Engine engine, const EvalBases& bases,
                     const EvalConfigs& configs);

MetricsReport evaluate(const LabeledCorpus& corpus, Engine engine, const EvalBases& bases,
                       const EvalConfigs& configs);

struct SweepRow {
  double fraction = 1.0;
  double detection_rate = 0.0;  // true positive rate
  std::uint64_t base_bytes = 0;
  double seconds = 0.0;
  MetricsPayload payload;
};

/// Prunes the engine's base to each fraction (descending order), re-evaluates,
/// and reports rate, serialized base size, and wall time per row.
std::vector<SweepRow> sweep(const LabeledCorpus& corpus, Engine engine, const EvalBases& bases,
                            const EvalConfigs& configs, std::vector<double> fractions,
                            feature::PruneScore score);

/// Truth file: UTF-8 CSV with header `path,label`, labels malware|benign.
std::vector<std::pair<std::string, Label>> read_truth_csv(const std::string& text);

}  // namespace iatforge::eval
