#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace iatforge::feature {

/// 64-bit pair identifier: 20 DLL bits over 44 function bits.
struct PairId {
  std::uint64_t value = 0;

  static constexpr unsigned kDllBits = 20;
  static constexpr unsigned kFuncBits = 44;
  static constexpr std::uint64_t kMaxDlls = std::uint64_t{1} << kDllBits;
  static constexpr std::uint64_t kMaxFuncsPerDll = std::uint64_t{1} << kFuncBits;

  static PairId pack(std::uint64_t dll_id, std::uint64_t func_id);

  std::uint64_t dll_id() const noexcept { return value >> kFuncBits; }
  std::uint64_t func_id() const noexcept { return value & (kMaxFuncsPerDll - 1); }

  auto operator<=>(const PairId&) const = default;
};

/// Builds the textual function key for ordinal-only imports/exports.
inline std::string ordinal_key(std::uint16_t ordinal) { return "#" + std::to_string(ordinal); }

/// Dense-id registry for (dll, function) pairs. DLL ids are assigned in
/// registration order; function ids per DLL likewise. Every mutation bumps
/// version, which invalidates previously built bitvectors.
class PairRegistry {
 public:
  PairId register_pair(const std::string& dll_name, const std::string& function_key);

  /// Rebuilds a registry from persisted name tables. The version is derived:
  /// every dll and every function registration was one mutation, so
  /// version = dll count + pair count.
  static PairRegistry restore(std::vector<std::string> dll_names,
                              std::vector<std::vector<std::string>> function_keys);

  std::optional<PairId> lookup(const std::string& dll_name, const std::string& function_key) const;

  std::uint64_t universe_size() const noexcept { return pair_count_; }
  std::uint64_t version() const noexcept { return version_; }
  std::uint64_t dll_count() const noexcept { return dll_names_.size(); }

  const std::string& dll_name(std::uint64_t dll_id) const { return dll_names_.at(dll_id); }
  const std::vector<std::string>& function_keys(std::uint64_t dll_id) const { return func_keys_.at(dll_id); }

  /// Global dense attribute index of a registered pair: the rank of its id
  /// value in ascending order. Stable across persistence; any rank shift from
  /// later registrations is fenced off by the version bump.
  std::uint64_t dense_index(PairId id) const;
  PairId pair_at(std::uint64_t dense_index) const;
  bool contains(PairId id) const;

  bool operator==(const PairRegistry& other) const {
    return dll_names_ == other.dll_names_ && func_keys_ == other.func_keys_ && version_ == other.version_;
  }

 private:
  std::unordered_map<std::string, std::uint64_t> dll_ids_;
  std::vector<std::string> dll_names_;
  std::vector<std::unordered_map<std::string, std::uint64_t>> func_ids_;  // per DLL
  std::vector<std::vector<std::string>> func_keys_;                       // per DLL, id order
  std::uint64_t pair_count_ = 0;
  std::uint64_t version_ = 0;
};

}  // namespace iatforge::feature
