#pragma once

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "iatforge/feature/registry.hpp"
#include "iatforge/feature/vectors.hpp"
#include "iatforge/knn/detector.hpp"
#include "iatforge/label.hpp"

namespace testutil {

/// Deterministic bounded draw; avoids implementation-defined distributions.
inline std::uint64_t pick(std::mt19937_64& rng, std::uint64_t bound) { return rng() % bound; }

/// Self-deleting scratch directory for persistence tests.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<unsigned> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("iatforge_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline iatforge::feature::TableVector make_vector(std::vector<std::uint64_t> ids,
                                                  std::uint64_t version = 0,
                                                  iatforge::feature::TableKind kind =
                                                      iatforge::feature::TableKind::iat) {
  iatforge::feature::TableVector v;
  v.kind = kind;
  v.registry_version = version;
  v.ids = std::move(ids);
  std::sort(v.ids.begin(), v.ids.end());
  v.ids.erase(std::unique(v.ids.begin(), v.ids.end()), v.ids.end());
  return v;
}

/// Random strictly-sorted id vector over a small id space.
inline iatforge::feature::TableVector random_vector(std::mt19937_64& rng, std::uint64_t id_space,
                                                    std::size_t max_len, std::uint64_t version = 0) {
  std::size_t len = 1 + static_cast<std::size_t>(pick(rng, max_len));
  std::vector<std::uint64_t> ids;
  for (std::size_t i = 0; i < len; ++i) ids.push_back(pick(rng, id_space));
  return make_vector(std::move(ids), version);
}

inline iatforge::Bitset random_bitset(std::mt19937_64& rng, std::uint64_t universe, double density = 0.3) {
  iatforge::Bitset out(universe);
  std::uint64_t threshold = static_cast<std::uint64_t>(density * 1000.0);
  for (std::uint64_t i = 0; i < universe; ++i) {
    if (pick(rng, 1000) < threshold) out.set(i);
  }
  return out;
}

}  // namespace testutil
