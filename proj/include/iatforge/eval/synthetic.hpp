#pragma once

#include <cstdint>
#include <random>

#include "iatforge/eval/harness.hpp"
#include "iatforge/feature/registry.hpp"

namespace iatforge::eval {

/// Deterministic two-family corpus: each family draws file ids from its own
/// pool, the pools share `overlap` of their ids, and every file picks a few
/// noise ids from the whole universe. All randomness comes from one seeded
/// generator with hand-rolled sampling, so outputs are identical across
/// toolchains and runs.
struct SyntheticSpec {
  std::uint64_t seed = 42;
  std::size_t dll_count = 8;
  std::size_t funcs_per_dll = 16;  // universe = dll_count * funcs_per_dll
  std::size_t pool_size = 30;
  double overlap = 0.2;  // shared fraction between the two pools
  std::size_t ids_per_file = 20;
  std::size_t noise_ids = 3;
  std::size_t train_malware = 40;
  std::size_t train_benign = 40;
  std::size_t heldout_malware = 30;
  std::size_t heldout_benign = 30;
};

struct SyntheticCorpus {
  feature::PairRegistry registry;
  LabeledCorpus train;
  LabeledCorpus heldout;
};

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec);

/// Uniform-ish pick in [0, bound) from raw engine output; avoids the
/// implementation-defined std::uniform_int_distribution.
inline std::uint64_t pick_below(std::mt19937_64& rng, std::uint64_t bound) {
  return rng() % bound;
}

}  // namespace iatforge::eval
