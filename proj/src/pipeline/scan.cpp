#include "iatforge/pipeline/scan.hpp"

#include "iatforge/error.hpp"
#include "iatforge/feature/storage.hpp"
#include "iatforge/parallel.hpp"

namespace iatforge::pipeline {

namespace {

void run_knn_stage(ScanReport& report, const feature::TableVector& iat,
                   const std::optional<feature::TableVector>& eat, const BaseBundle& bundle,
                   const RunConfig& config) {
  if (iat.empty()) {
    report.reasons.emplace_back("knn: skipped, no registered imports; structural findings apply");
    return;
  }
  if (bundle.iat_base.empty()) {
    report.reasons.emplace_back("knn: skipped, IAT base is empty");
    return;
  }
  report.knn_iat = knn::classify(iat, bundle.iat_base, config.knn);
  Label combined = report.knn_iat->label;

  if (config.knn.eat_policy != knn::EatPolicy::ignore && eat.has_value() && !eat->empty() &&
      !bundle.eat_base.empty()) {
    report.knn_eat = knn::classify(*eat, bundle.eat_base, config.knn);
    if (config.knn.eat_policy == knn::EatPolicy::either) {
      combined = (combined == Label::malware || report.knn_eat->label == Label::malware)
                     ? Label::malware
                     : Label::benign;
    } else {
      combined = (combined == Label::malware && report.knn_eat->label == Label::malware)
                     ? Label::malware
                     : Label::benign;
    }
  }
  report.knn_label = combined;
  if (combined == Label::malware) {
    report.reasons.emplace_back("knn: nearest-neighbor vote is malicious");
  } else {
    report.reasons.emplace_back("knn: nearest-neighbor vote is benign");
  }
}

void run_combi_stage(ScanReport& report, const feature::TableVector& iat, const BaseBundle& bundle,
                     const RunConfig& config) {
  if (bundle.registry.universe_size() == 0 ||
      (bundle.combi_base.malware_vectors.empty() && bundle.combi_base.benign_vectors.empty())) {
    report.reasons.emplace_back("combi: skipped, base is empty");
    return;
  }
  if (bundle.combi_base.malware_vectors.empty() || bundle.combi_base.benign_vectors.empty()) {
    report.reasons.emplace_back("combi: skipped, needs both malware and benign vector sets");
    return;
  }
  feature::FunctionBitVector x = feature::to_bitvector(iat, bundle.registry);
  report.combi_verdict = combi::detect(x, bundle.combi_base, config.combi);
  report.reasons.emplace_back("combi: type count " + std::to_string(report.combi_verdict->type_count) +
                              " -> " + verdict_name(report.combi_verdict->label));
}

}  // namespace

ScanReport scan_bytes(const std::string& path, std::span<const std::uint8_t> bytes,
                      const BaseBundle& bundle, const RunConfig& config) {
  ScanReport report;
  report.path = path;

  pe::PeLayout layout;
  std::vector<pe::ImportedPair> imports;
  std::vector<pe::ExportEntry> exports;
  std::string export_dll;
  try {
    layout = pe::parse_pe(bytes);
    if (layout.import_dir.present()) imports = pe::extract_imports(layout, bytes);
    if (layout.export_dir.present()) {
      pe::ExportTable table = pe::extract_exports(layout, bytes);
      exports = std::move(table.entries);
      export_dll = std::move(table.dll_name);
    }
  } catch (const Error& e) {
    report.error = e.what();
    report.reasons.emplace_back(std::string("parse failed: ") + e.what());
    return report;
  }
  report.parsed = true;
  report.structural = pe::structural_check(layout, imports, exports);

  // Stage 1: structural verdicts short-circuit the heuristic stages.
  if (config.structural_decisive) {
    if (report.structural.ordinal_rule_violation) {
      report.final_label = Label::malware;
      report.reasons.emplace_back("structural: export ordinals violate the 1..N rule");
      return report;
    }
    if (report.structural.empty_iat) {
      report.final_label = Label::malware;
      report.reasons.emplace_back("structural: executable has no usable import table");
      return report;
    }
  }

  feature::TableVector iat =
      feature::vectorize(feature::pair_keys_from_imports(imports), bundle.registry, feature::TableKind::iat);
  std::optional<feature::TableVector> eat;
  if (!exports.empty()) {
    eat = feature::vectorize(feature::pair_keys_from_exports(export_dll, exports), bundle.registry,
                             feature::TableKind::eat);
  }

  if (config.mode != eval::Engine::combi) run_knn_stage(report, iat, eat, bundle, config);
  if (config.mode != eval::Engine::knn) run_combi_stage(report, iat, bundle, config);

  bool malicious = (report.knn_label.has_value() && *report.knn_label == Label::malware) ||
                   (report.combi_verdict.has_value() && report.combi_verdict->label == Label::malware);
  report.final_label = malicious ? Label::malware : Label::benign;
  return report;
}

ScanReport scan_file(const std::string& path, const BaseBundle& bundle, const RunConfig& config) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = feature::storage::read_file(path);
  } catch (const Error& e) {
    ScanReport report;
    report.path = path;
    report.error = e.what();
    report.reasons.emplace_back(std::string("read failed: ") + e.what());
    return report;
  }
  return scan_bytes(path, bytes, bundle, config);
}

std::vector<ScanReport> scan_files(std::span<const std::string> paths, const BaseBundle& bundle,
                                   const RunConfig& config) {
  std::vector<ScanReport> reports(paths.size());
#pragma omp parallel for schedule(dynamic, 1) if (par::enabled())
  for (std::size_t i = 0; i < paths.size(); ++i) {
    reports[i] = scan_file(paths[i], bundle, config);
  }
  return reports;
}

}  // namespace iatforge::pipeline
