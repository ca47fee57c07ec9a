#include "iatforge/pipeline/base_dir.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>

#include "iatforge/error.hpp"
#include "iatforge/feature/storage.hpp"

namespace iatforge::pipeline {

namespace fs = std::filesystem;
namespace storage = iatforge::feature::storage;
using json = nlohmann::ordered_json;
using storage::BaseRole;

void BaseBundle::add_sample(Label label, feature::TableVector iat, std::optional<feature::TableVector> eat) {
  if (iat.registry_version != registry.version() ||
      (eat.has_value() && eat->registry_version != registry.version())) {
    raise(Errc::version_mismatch, "sample vectors must be stamped with the current registry version");
  }
  iat_base.registry_version = registry.version();
  eat_base.registry_version = registry.version();
  eat_base.kind = feature::TableKind::eat;
  (label == Label::malware ? iat_base.malware : iat_base.benign).push_back(std::move(iat));
  if (eat.has_value() && !eat->empty()) {
    (label == Label::malware ? eat_base.malware : eat_base.benign).push_back(std::move(*eat));
  }
}

void BaseBundle::refresh_versions() {
  const std::uint64_t v = registry.version();
  auto stamp = [v](knn::TrainingBase& base) {
    base.registry_version = v;
    for (auto& vec : base.malware) vec.registry_version = v;
    for (auto& vec : base.benign) vec.registry_version = v;
  };
  stamp(iat_base);
  stamp(eat_base);
}

void BaseBundle::rebuild_combi() {
  const std::uint64_t universe = registry.universe_size();
  const std::uint64_t version = registry.version();

  std::vector<feature::FunctionBitVector> malware, benign;
  for (const auto& vec : iat_base.malware) malware.push_back(feature::to_bitvector(vec, registry));
  for (const auto& vec : iat_base.benign) benign.push_back(feature::to_bitvector(vec, registry));

  Bitset blacklist = combi_base.blacklist.size() == universe ? combi_base.blacklist : Bitset(universe);
  combi_base = combi::CombiBase::build(malware, benign, std::move(blacklist), universe, version);
}

BaseBundle make_empty_bundle() {
  BaseBundle bundle;
  bundle.iat_base.kind = feature::TableKind::iat;
  bundle.eat_base.kind = feature::TableKind::eat;
  bundle.combi_base = combi::CombiBase::build({}, {}, Bitset(0), 0, 0);
  return bundle;
}

namespace {

std::string vector_file_name(const char* side, Label label, std::size_t index) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "knn/%s.%s.%06zu.iatv", label_name(label), side, index);
  return buf;
}

json knn_side_manifest(const knn::TrainingBase& base, const char* side) {
  json files = json::object();
  json malware = json::array();
  for (std::size_t i = 0; i < base.malware.size(); ++i) {
    malware.push_back(vector_file_name(side, Label::malware, i));
  }
  json benign = json::array();
  for (std::size_t i = 0; i < base.benign.size(); ++i) {
    benign.push_back(vector_file_name(side, Label::benign, i));
  }
  files["malware"] = std::move(malware);
  files["benign"] = std::move(benign);
  return files;
}

void save_knn_side(const fs::path& dir, const knn::TrainingBase& base, const char* side) {
  for (std::size_t i = 0; i < base.malware.size(); ++i) {
    storage::save_vector(dir / vector_file_name(side, Label::malware, i), base.malware[i]);
  }
  for (std::size_t i = 0; i < base.benign.size(); ++i) {
    storage::save_vector(dir / vector_file_name(side, Label::benign, i), base.benign[i]);
  }
}

void load_knn_side(const fs::path& dir, const json& listing, std::uint64_t expected_version,
                   feature::TableKind kind, knn::TrainingBase& out) {
  out.kind = kind;
  out.registry_version = expected_version;
  for (const char* label : {"malware", "benign"}) {
    if (!listing.contains(label)) raise(Errc::corrupt_payload, "manifest knn listing incomplete");
    for (const auto& file : listing.at(label)) {
      feature::TableVector vec = storage::load_vector(dir / file.get<std::string>());
      if (vec.kind != kind) raise(Errc::corrupt_payload, "vector kind disagrees with manifest side");
      if (vec.registry_version != expected_version) {
        raise(Errc::incompatible_registry, "vector version disagrees with manifest");
      }
      (std::string(label) == "malware" ? out.malware : out.benign).push_back(std::move(vec));
    }
  }
}

}  // namespace

void save_bundle(const fs::path& dir, const BaseBundle& bundle) {
  fs::create_directories(dir);
  // The knn/ and combi/ trees are owned by this format; rewrite them whole so
  // pruned bases do not leave stale vector files behind.
  fs::remove_all(dir / "knn");
  fs::remove_all(dir / "combi");
  fs::create_directories(dir / "knn");
  fs::create_directories(dir / "combi");

  storage::save_registry(dir / "registry.txt", bundle.registry);
  save_knn_side(dir, bundle.iat_base, "iat");
  save_knn_side(dir, bundle.eat_base, "eat");

  const combi::CombiBase& cb = bundle.combi_base;
  storage::save_base(dir / "combi/malware.iatb", BaseRole::malware_set, cb.universe_size, cb.malware_vectors);
  storage::save_base(dir / "combi/benign.iatb", BaseRole::benign_set, cb.universe_size, cb.benign_vectors);
  std::vector<Bitset> blacklist{cb.blacklist};
  storage::save_base(dir / "combi/blacklist.iatb", BaseRole::blacklist, cb.universe_size, blacklist);
  storage::save_combination_union(dir / "combi/mbs.iatb", BaseRole::binomial_union, cb.mbs);
  storage::save_combination_union(dir / "combi/gbs.iatb", BaseRole::binomial_union, cb.gbs);
  storage::save_combination_union(dir / "combi/mts.iatb", BaseRole::trinomial_union, cb.mts);
  storage::save_combination_union(dir / "combi/gts.iatb", BaseRole::trinomial_union, cb.gts);

  json manifest;
  manifest["schema"] = 1;
  manifest["registry"] = "registry.txt";
  manifest["registry_version"] = bundle.registry.version();
  manifest["universe_size"] = bundle.registry.universe_size();
  json knn_entry = json::object();
  knn_entry["iat"] = knn_side_manifest(bundle.iat_base, "iat");
  knn_entry["eat"] = knn_side_manifest(bundle.eat_base, "eat");
  manifest["knn"] = std::move(knn_entry);
  json combi_entry = json::object();
  combi_entry["malware"] = "combi/malware.iatb";
  combi_entry["benign"] = "combi/benign.iatb";
  combi_entry["blacklist"] = "combi/blacklist.iatb";
  combi_entry["mbs"] = "combi/mbs.iatb";
  combi_entry["gbs"] = "combi/gbs.iatb";
  combi_entry["mts"] = "combi/mts.iatb";
  combi_entry["gts"] = "combi/gts.iatb";
  manifest["combi"] = std::move(combi_entry);

  std::string text = manifest.dump(2);
  text.push_back('\n');
  std::vector<std::uint8_t> bytes(text.begin(), text.end());
  storage::write_file(dir / "manifest.json", bytes);
}

BaseBundle load_bundle(const fs::path& dir) {
  std::vector<std::uint8_t> manifest_bytes = storage::read_file(dir / "manifest.json");
  json manifest = json::parse(manifest_bytes.begin(), manifest_bytes.end(), nullptr, false);
  if (manifest.is_discarded()) raise(Errc::corrupt_payload, "manifest is not valid JSON");
  if (!manifest.contains("schema") || manifest["schema"].get<int>() != 1) {
    raise(Errc::unsupported_version, "manifest schema");
  }

  BaseBundle bundle;
  bundle.registry = storage::load_registry(dir / manifest.value("registry", "registry.txt"));
  const std::uint64_t version = manifest.at("registry_version").get<std::uint64_t>();
  if (version != bundle.registry.version()) {
    raise(Errc::incompatible_registry, "manifest registry version disagrees with registry file");
  }
  const std::uint64_t universe = manifest.at("universe_size").get<std::uint64_t>();
  if (universe != bundle.registry.universe_size()) {
    raise(Errc::incompatible_registry, "manifest universe size disagrees with registry file");
  }

  load_knn_side(dir, manifest.at("knn").at("iat"), version, feature::TableKind::iat, bundle.iat_base);
  load_knn_side(dir, manifest.at("knn").at("eat"), version, feature::TableKind::eat, bundle.eat_base);

  const json& combi_entry = manifest.at("combi");
  auto load_role = [&](const char* key, BaseRole want) {
    storage::LoadedBase loaded = storage::load_base(dir / combi_entry.at(key).get<std::string>());
    if (loaded.role != want) raise(Errc::corrupt_payload, std::string("unexpected role in ") + key);
    if (loaded.universe_size != universe) {
      raise(Errc::incompatible_registry, std::string("universe mismatch in ") + key);
    }
    return loaded;
  };

  combi::CombiBase& cb = bundle.combi_base;
  cb.universe_size = universe;
  cb.registry_version = version;
  cb.malware_vectors = load_role("malware", BaseRole::malware_set).vectors;
  cb.benign_vectors = load_role("benign", BaseRole::benign_set).vectors;
  storage::LoadedBase blacklist = load_role("blacklist", BaseRole::blacklist);
  if (blacklist.vectors.size() != 1) raise(Errc::corrupt_payload, "blacklist must hold one vector");
  cb.blacklist = std::move(blacklist.vectors[0]);
  cb.mbs = load_role("mbs", BaseRole::binomial_union).combination;
  cb.gbs = load_role("gbs", BaseRole::binomial_union).combination;
  cb.mts = load_role("mts", BaseRole::trinomial_union).combination;
  cb.gts = load_role("gts", BaseRole::trinomial_union).combination;
  return bundle;
}

}  // namespace iatforge::pipeline
