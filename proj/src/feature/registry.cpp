#include "iatforge/feature/registry.hpp"

#include "iatforge/error.hpp"

namespace iatforge::feature {

PairId PairId::pack(std::uint64_t dll_id, std::uint64_t func_id) {
  if (dll_id >= kMaxDlls) raise(Errc::capacity_exhausted, "dll id " + std::to_string(dll_id));
  if (func_id >= kMaxFuncsPerDll) raise(Errc::capacity_exhausted, "function id " + std::to_string(func_id));
  return PairId{(dll_id << kFuncBits) | func_id};
}

PairId PairRegistry::register_pair(const std::string& dll_name, const std::string& function_key) {
  auto dll_it = dll_ids_.find(dll_name);
  std::uint64_t dll_id;
  if (dll_it == dll_ids_.end()) {
    if (dll_names_.size() >= PairId::kMaxDlls) raise(Errc::capacity_exhausted, "dll namespace full");
    dll_id = dll_names_.size();
    dll_ids_.emplace(dll_name, dll_id);
    dll_names_.push_back(dll_name);
    func_ids_.emplace_back();
    func_keys_.emplace_back();
    ++version_;
  } else {
    dll_id = dll_it->second;
  }

  auto& funcs = func_ids_[dll_id];
  auto func_it = funcs.find(function_key);
  if (func_it != funcs.end()) return PairId::pack(dll_id, func_it->second);

  if (func_keys_[dll_id].size() >= PairId::kMaxFuncsPerDll) {
    raise(Errc::capacity_exhausted, "function namespace full for " + dll_name);
  }
  std::uint64_t func_id = func_keys_[dll_id].size();
  funcs.emplace(function_key, func_id);
  func_keys_[dll_id].push_back(function_key);
  ++pair_count_;
  ++version_;
  return PairId::pack(dll_id, func_id);
}

PairRegistry PairRegistry::restore(std::vector<std::string> dll_names,
                                   std::vector<std::vector<std::string>> function_keys) {
  if (dll_names.size() != function_keys.size()) {
    raise(Errc::corrupt_payload, "dll name and function key tables disagree");
  }
  PairRegistry r;
  r.dll_names_ = std::move(dll_names);
  r.func_keys_ = std::move(function_keys);
  for (std::uint64_t d = 0; d < r.dll_names_.size(); ++d) {
    if (!r.dll_ids_.emplace(r.dll_names_[d], d).second) {
      raise(Errc::corrupt_payload, "duplicate dll name: " + r.dll_names_[d]);
    }
    r.func_ids_.emplace_back();
    for (std::uint64_t f = 0; f < r.func_keys_[d].size(); ++f) {
      if (!r.func_ids_[d].emplace(r.func_keys_[d][f], f).second) {
        raise(Errc::corrupt_payload, "duplicate function key: " + r.func_keys_[d][f]);
      }
      ++r.pair_count_;
    }
  }
  r.version_ = r.dll_names_.size() + r.pair_count_;
  return r;
}

std::optional<PairId> PairRegistry::lookup(const std::string& dll_name, const std::string& function_key) const {
  auto dll_it = dll_ids_.find(dll_name);
  if (dll_it == dll_ids_.end()) return std::nullopt;
  const auto& funcs = func_ids_[dll_it->second];
  auto func_it = funcs.find(function_key);
  if (func_it == funcs.end()) return std::nullopt;
  return PairId::pack(dll_it->second, func_it->second);
}

bool PairRegistry::contains(PairId id) const {
  return id.dll_id() < dll_names_.size() && id.func_id() < func_keys_[id.dll_id()].size();
}

std::uint64_t PairRegistry::dense_index(PairId id) const {
  if (!contains(id)) raise(Errc::index_out_of_range, "pair id " + std::to_string(id.value) + " not registered");
  // Id values sort by (dll_id, func_id), so the ascending rank is a prefix
  // sum of per-DLL function counts plus the function id.
  std::uint64_t rank = 0;
  for (std::uint64_t d = 0; d < id.dll_id(); ++d) rank += func_keys_[d].size();
  return rank + id.func_id();
}

PairId PairRegistry::pair_at(std::uint64_t dense_index) const {
  std::uint64_t remaining = dense_index;
  for (std::uint64_t d = 0; d < func_keys_.size(); ++d) {
    if (remaining < func_keys_[d].size()) return PairId::pack(d, remaining);
    remaining -= func_keys_[d].size();
  }
  raise(Errc::index_out_of_range, "dense index " + std::to_string(dense_index));
}

}  // namespace iatforge::feature
