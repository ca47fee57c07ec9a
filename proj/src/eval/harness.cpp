#include "iatforge/eval/harness.hpp"

#include <algorithm>
#include <chrono>

#include "iatforge/error.hpp"
#include "iatforge/feature/storage.hpp"
#include "iatforge/parallel.hpp"

namespace iatforge::eval {

namespace {

Label combine_eat(const knn::KnnConfig& config, Label iat_label, std::optional<Label> eat_label) {
  if (!eat_label.has_value() || config.eat_policy == knn::EatPolicy::ignore) return iat_label;
  if (config.eat_policy == knn::EatPolicy::either) {
    return (iat_label == Label::malware || *eat_label == Label::malware) ? Label::malware : Label::benign;
  }
  return (iat_label == Label::malware && *eat_label == Label::malware) ? Label::malware : Label::benign;
}

void check_versions(const CorpusEntry& entry, const EvalBases& bases) {
  if (bases.registry != nullptr && entry.iat.registry_version != bases.registry->version()) {
    raise(Errc::incompatible_registry,
          "corpus entry " + entry.name + " was vectorized against a different registry version");
  }
}

}  // namespace

Label classify_entry(const CorpusEntry& entry, Engine engine, const EvalBases& bases,
                     const EvalConfigs& configs) {
  check_versions(entry, bases);

  // An executable with no usable IAT is suspicious by itself.
  if (entry.iat.empty()) return Label::malware;

  bool malicious = false;

  if (engine != Engine::combi) {
    if (bases.iat_base == nullptr || bases.iat_base->empty()) {
      raise(Errc::empty_base, "knn engine selected but the IAT base is empty");
    }
    Label iat_label = knn::classify(entry.iat, *bases.iat_base, configs.knn).label;
    std::optional<Label> eat_label;
    if (entry.eat.has_value() && !entry.eat->empty() && bases.eat_base != nullptr &&
        !bases.eat_base->empty() && configs.knn.eat_policy != knn::EatPolicy::ignore) {
      eat_label = knn::classify(*entry.eat, *bases.eat_base, configs.knn).label;
    }
    malicious = combine_eat(configs.knn, iat_label, eat_label) == Label::malware;
  }

  if (!malicious && engine != Engine::knn) {
    if (bases.combi_base == nullptr) raise(Errc::empty_base, "combi engine selected but no base given");
    if (bases.registry == nullptr) raise(Errc::incompatible_registry, "combi engine needs the registry");
    feature::FunctionBitVector x = feature::to_bitvector(entry.iat, *bases.registry);
    malicious = combi::detect(x, *bases.combi_base, configs.combi).label == Label::malware;
  }

  return malicious ? Label::malware : Label::benign;
}

MetricsReport evaluate(const LabeledCorpus& corpus, Engine engine, const EvalBases& bases,
                       const EvalConfigs& configs) {
  const auto started = std::chrono::steady_clock::now();

  std::vector<Label> detected(corpus.entries.size());
#pragma omp parallel for schedule(dynamic, 8) if (par::enabled())
  for (std::size_t i = 0; i < corpus.entries.size(); ++i) {
    detected[i] = classify_entry(corpus.entries[i], engine, bases, configs);
  }

  MetricsReport report;
  auto& c = report.payload.counts;
  for (std::size_t i = 0; i < corpus.entries.size(); ++i) {
    bool truth_malware = corpus.entries[i].truth == Label::malware;
    bool found_malware = detected[i] == Label::malware;
    if (truth_malware && found_malware) ++c.true_positive;
    if (truth_malware && !found_malware) ++c.false_negative;
    if (!truth_malware && found_malware) ++c.false_positive;
    if (!truth_malware && !found_malware) ++c.true_negative;
  }

  auto rate = [](std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  std::uint64_t malware_total = c.true_positive + c.false_negative;
  std::uint64_t benign_total = c.false_positive + c.true_negative;
  report.payload.true_positive_rate = rate(c.true_positive, malware_total);
  report.payload.false_negative_rate = rate(c.false_negative, malware_total);
  report.payload.false_positive_rate = rate(c.false_positive, benign_total);
  report.payload.true_negative_rate = rate(c.true_negative, benign_total);

  const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  report.mean_seconds_per_file =
      corpus.entries.empty() ? 0.0 : elapsed / static_cast<double>(corpus.entries.size());
  return report;
}

namespace {

std::uint64_t knn_base_bytes(const knn::TrainingBase& base) {
  std::uint64_t total = 0;
  for (const auto& v : base.malware) total += feature::storage::vector_bytes(v).size();
  for (const auto& v : base.benign) total += feature::storage::vector_bytes(v).size();
  return total;
}

std::uint64_t combi_base_bytes(const combi::CombiBase& base) {
  using feature::storage::BaseRole;
  std::uint64_t total = 0;
  total += feature::storage::bitvector_base_bytes(BaseRole::malware_set, base.universe_size,
                                                  base.malware_vectors)
               .size();
  total += feature::storage::bitvector_base_bytes(BaseRole::benign_set, base.universe_size,
                                                  base.benign_vectors)
               .size();
  std::vector<Bitset> blacklist{base.blacklist};
  total += feature::storage::bitvector_base_bytes(BaseRole::blacklist, base.universe_size, blacklist).size();
  total += feature::storage::combination_union_bytes(BaseRole::binomial_union, base.mbs).size();
  total += feature::storage::combination_union_bytes(BaseRole::binomial_union, base.gbs).size();
  total += feature::storage::combination_union_bytes(BaseRole::trinomial_union, base.mts).size();
  total += feature::storage::combination_union_bytes(BaseRole::trinomial_union, base.gts).size();
  return total;
}

knn::TrainingBase prune_training_base(const knn::TrainingBase& base, double fraction,
                                      feature::PruneScore score) {
  std::vector<std::pair<feature::TableVector, Label>> labeled;
  for (const auto& v : base.malware) labeled.emplace_back(v, Label::malware);
  for (const auto& v : base.benign) labeled.emplace_back(v, Label::benign);
  auto kept = feature::prune_base(labeled, fraction, score);
  knn::TrainingBase out;
  out.kind = base.kind;
  out.registry_version = base.registry_version;
  for (auto& [vec, label] : kept) {
    (label == Label::malware ? out.malware : out.benign).push_back(std::move(vec));
  }
  return out;
}

combi::CombiBase prune_combi_base(const combi::CombiBase& base, double fraction,
                                  feature::PruneScore score) {
  std::vector<std::pair<feature::FunctionBitVector, Label>> labeled;
  auto wrap = [&](const Bitset& bits, Label label) {
    feature::FunctionBitVector fbv;
    fbv.bits = bits;
    fbv.universe_size = base.universe_size;
    fbv.registry_version = base.registry_version;
    labeled.emplace_back(std::move(fbv), label);
  };
  for (const Bitset& v : base.malware_vectors) wrap(v, Label::malware);
  for (const Bitset& v : base.benign_vectors) wrap(v, Label::benign);
  auto kept = feature::prune_base(labeled, fraction, score);

  std::vector<feature::FunctionBitVector> malware, benign;
  for (auto& [fbv, label] : kept) {
    (label == Label::malware ? malware : benign).push_back(std::move(fbv));
  }
  return combi::CombiBase::build(malware, benign, base.blacklist, base.universe_size,
                                 base.registry_version);
}

}  // namespace

std::vector<SweepRow> sweep(const LabeledCorpus& corpus, Engine engine, const EvalBases& bases,
                            const EvalConfigs& configs, std::vector<double> fractions,
                            feature::PruneScore score) {
  for (double f : fractions) {
    if (!(f > 0.0 && f <= 1.0)) raise(Errc::invalid_config, "sweep fractions must be in (0,1]");
  }
  std::sort(fractions.begin(), fractions.end(), std::greater<>());

  std::vector<SweepRow> rows;
  for (double fraction : fractions) {
    knn::TrainingBase pruned_iat;
    knn::TrainingBase pruned_eat;
    combi::CombiBase pruned_combi;
    EvalBases pruned = bases;

    if (engine != Engine::combi && bases.iat_base != nullptr) {
      pruned_iat = prune_training_base(*bases.iat_base, fraction, score);
      pruned.iat_base = &pruned_iat;
      if (bases.eat_base != nullptr && !bases.eat_base->empty()) {
        pruned_eat = prune_training_base(*bases.eat_base, fraction, score);
        pruned.eat_base = &pruned_eat;
      }
    }
    if (engine != Engine::knn && bases.combi_base != nullptr) {
      pruned_combi = prune_combi_base(*bases.combi_base, fraction, score);
      pruned.combi_base = &pruned_combi;
    }

    const auto started = std::chrono::steady_clock::now();
    MetricsReport report = evaluate(corpus, engine, pruned, configs);
    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    SweepRow row;
    row.fraction = fraction;
    row.payload = report.payload;
    row.detection_rate = report.payload.true_positive_rate;
    row.seconds = elapsed;
    if (engine != Engine::combi && pruned.iat_base != nullptr) row.base_bytes += knn_base_bytes(*pruned.iat_base);
    if (engine != Engine::combi && pruned.eat_base != nullptr) row.base_bytes += knn_base_bytes(*pruned.eat_base);
    if (engine != Engine::knn && pruned.combi_base != nullptr) row.base_bytes += combi_base_bytes(*pruned.combi_base);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<std::pair<std::string, Label>> read_truth_csv(const std::string& text) {
  std::vector<std::pair<std::string, Label>> out;
  std::size_t at = 0;
  bool first = true;
  while (at < text.size()) {
    std::size_t end = text.find('\n', at);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(at, end - at);
    at = end + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      if (line != "path,label") raise(Errc::corrupt_payload, "truth file must start with `path,label`");
      first = false;
      continue;
    }
    std::size_t comma = line.rfind(',');
    if (comma == std::string::npos) raise(Errc::corrupt_payload, "truth line missing label: " + line);
    std::string path = line.substr(0, comma);
    std::string label = line.substr(comma + 1);
    if (label == "malware") {
      out.emplace_back(std::move(path), Label::malware);
    } else if (label == "benign") {
      out.emplace_back(std::move(path), Label::benign);
    } else {
      raise(Errc::corrupt_payload, "unknown label: " + label);
    }
  }
  if (first) raise(Errc::corrupt_payload, "truth file empty");
  return out;
}

}  // namespace iatforge::eval
