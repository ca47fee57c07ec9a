#include "iatforge/eval/synthetic.hpp"

#include <algorithm>

#include "iatforge/error.hpp"

namespace iatforge::eval {

namespace {

/// First `count` elements of a seeded partial Fisher-Yates over `items`.
std::vector<std::uint64_t> sample_without_replacement(std::mt19937_64& rng,
                                                      std::vector<std::uint64_t> items,
                                                      std::size_t count) {
  count = std::min(count, items.size());
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t j = i + static_cast<std::size_t>(pick_below(rng, items.size() - i));
    std::swap(items[i], items[j]);
  }
  items.resize(count);
  return items;
}

}  // namespace

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec) {
  const std::uint64_t universe = spec.dll_count * spec.funcs_per_dll;
  const std::size_t shared = static_cast<std::size_t>(spec.overlap * static_cast<double>(spec.pool_size) + 0.5);
  if (2 * spec.pool_size - shared > universe) {
    raise(Errc::invalid_config, "universe too small for the requested pools");
  }
  if (spec.ids_per_file > spec.pool_size) {
    raise(Errc::invalid_config, "ids_per_file larger than the pool");
  }

  SyntheticCorpus out;
  for (std::size_t d = 0; d < spec.dll_count; ++d) {
    char dll[32];
    std::snprintf(dll, sizeof dll, "dll%03zu.dll", d);
    for (std::size_t f = 0; f < spec.funcs_per_dll; ++f) {
      char fn[32];
      std::snprintf(fn, sizeof fn, "func%04zu", f);
      out.registry.register_pair(dll, fn);
    }
  }

  // Pools are dense-index ranges; the benign pool starts `shared` ids before
  // the malware pool ends.
  std::vector<std::uint64_t> malware_pool, benign_pool, all_ids;
  for (std::uint64_t i = 0; i < spec.pool_size; ++i) malware_pool.push_back(i);
  for (std::uint64_t i = spec.pool_size - shared; i < 2 * spec.pool_size - shared; ++i) {
    benign_pool.push_back(i);
  }
  for (std::uint64_t i = 0; i < universe; ++i) all_ids.push_back(i);

  std::mt19937_64 rng(spec.seed);

  auto make_entry = [&](const std::vector<std::uint64_t>& pool, Label label, const char* prefix,
                        std::size_t index) {
    std::vector<std::uint64_t> dense = sample_without_replacement(rng, pool, spec.ids_per_file);
    std::vector<std::uint64_t> noise = sample_without_replacement(rng, all_ids, spec.noise_ids);
    dense.insert(dense.end(), noise.begin(), noise.end());

    CorpusEntry entry;
    entry.truth = label;
    char name[64];
    std::snprintf(name, sizeof name, "%s%04zu", prefix, index);
    entry.name = name;
    entry.iat.kind = feature::TableKind::iat;
    entry.iat.registry_version = out.registry.version();
    for (std::uint64_t idx : dense) entry.iat.ids.push_back(out.registry.pair_at(idx).value);
    std::sort(entry.iat.ids.begin(), entry.iat.ids.end());
    entry.iat.ids.erase(std::unique(entry.iat.ids.begin(), entry.iat.ids.end()), entry.iat.ids.end());
    return entry;
  };

  for (std::size_t i = 0; i < spec.train_malware; ++i) {
    out.train.entries.push_back(make_entry(malware_pool, Label::malware, "train_mal_", i));
  }
  for (std::size_t i = 0; i < spec.train_benign; ++i) {
    out.train.entries.push_back(make_entry(benign_pool, Label::benign, "train_ben_", i));
  }
  for (std::size_t i = 0; i < spec.heldout_malware; ++i) {
    out.heldout.entries.push_back(make_entry(malware_pool, Label::malware, "test_mal_", i));
  }
  for (std::size_t i = 0; i < spec.heldout_benign; ++i) {
    out.heldout.entries.push_back(make_entry(benign_pool, Label::benign, "test_ben_", i));
  }
  return out;
}

}  // namespace iatforge::eval
