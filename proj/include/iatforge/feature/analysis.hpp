#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "iatforge/feature/vectors.hpp"
#include "iatforge/label.hpp"

namespace iatforge::feature {

/// Mutual information (base-2) between one presence attribute and the label,
/// from empirical probabilities; zero-probability terms contribute nothing.
double information_gain(std::uint64_t attribute,
                        std::span<const std::pair<FunctionBitVector, Label>> samples);

enum class PruneScore { ig, density };

/// Keeps the ceil(keep_fraction * count) highest-scoring vectors per label.
/// Score "ig" is the mean attribute information gain over a vector's set bits;
/// "density" is the popcount. Ties keep the earlier-inserted vector.
std::vector<std::pair<FunctionBitVector, Label>> prune_base(
    const std::vector<std::pair<FunctionBitVector, Label>>& vectors, double keep_fraction, PruneScore score);

std::vector<std::pair<TableVector, Label>> prune_base(
    const std::vector<std::pair<TableVector, Label>>& vectors, double keep_fraction, PruneScore score);

}  // namespace iatforge::feature
