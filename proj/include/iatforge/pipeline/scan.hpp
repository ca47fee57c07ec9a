#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "iatforge/eval/harness.hpp"
#include "iatforge/pe/format.hpp"
#include "iatforge/pipeline/base_dir.hpp"

namespace iatforge::pipeline {

struct RunConfig {
  eval::Engine mode = eval::Engine::both;
  knn::KnnConfig knn;
  combi::CombiConfig combi;
  /// Ordinal-rule violations and missing IATs decide the verdict before the
  /// heuristic stages run.
  bool structural_decisive = true;
};

struct ScanReport {
  std::string path;
  bool parsed = false;
  std::string error;  // set when parsing/extraction failed; verdict stays benign
  pe::StructuralFindings structural;
  std::optional<knn::Verdict> knn_iat;
  std::optional<knn::Verdict> knn_eat;
  std::optional<Label> knn_label;
  std::optional<combi::CombiVerdict> combi_verdict;
  Label final_label = Label::benign;
  std::vector<std::string> reasons;
};

/// Structural check, then k-NN, then the combinatorial detector, per the run
/// mode; the verdict is malicious as soon as any enabled stage says so.
ScanReport scan_bytes(const std::string& path, std::span<const std::uint8_t> bytes,
                      const BaseBundle& bundle, const RunConfig& config);

ScanReport scan_file(const std::string& path, const BaseBundle& bundle, const RunConfig& config);

/// Batch scan; output order always equals input order, and per-file failures
/// never abort the batch.
std::vector<ScanReport> scan_files(std::span<const std::string> paths, const BaseBundle& bundle,
                                   const RunConfig& config);

}  // namespace iatforge::pipeline
