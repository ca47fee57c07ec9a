#pragma once

#include <filesystem>
#include <optional>

#include "iatforge/combi/detector.hpp"
#include "iatforge/feature/registry.hpp"
#include "iatforge/knn/detector.hpp"
#include "iatforge/label.hpp"

namespace iatforge::pipeline {

/// Everything a base directory holds: the pair registry, the k-NN vector
/// bases (IAT and EAT sides), and the combinatorial base.
///
/// On-disk layout under the base directory:
///   registry.txt     pair registry (text format)
///   manifest.json    schema, registry version, file list
///   knn/*.iatv       one table vector per file
///   combi/*.iatb     bitvector sets, blacklist, combination unions
struct BaseBundle {
  feature::PairRegistry registry;
  knn::TrainingBase iat_base;
  knn::TrainingBase eat_base;
  combi::CombiBase combi_base;

  /// Appends a sample's vectors under the given label. Vectors must be
  /// stamped with the current registry version.
  void add_sample(Label label, feature::TableVector iat, std::optional<feature::TableVector> eat);

  /// Re-stamps stored vectors after registry growth. Pair ids never change
  /// (the registry is append-only), so only the version fields move.
  void refresh_versions();

  /// Rebuilds bitvector sets and combination unions from the stored IAT
  /// vectors, keeping the current blacklist when its length still fits.
  void rebuild_combi();
};

BaseBundle make_empty_bundle();

void save_bundle(const std::filesystem::path& dir, const BaseBundle& bundle);
BaseBundle load_bundle(const std::filesystem::path& dir);

}  // namespace iatforge::pipeline
