#include "iatforge/pipeline/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <iomanip>
#include <iostream>
#include <sstream>

#include "iatforge/error.hpp"
#include "iatforge/eval/harness.hpp"
#include "iatforge/feature/storage.hpp"
#include "iatforge/knn/train.hpp"
#include "iatforge/pipeline/base_dir.hpp"
#include "iatforge/pipeline/scan.hpp"

namespace iatforge::pipeline {

namespace {

namespace storage = iatforge::feature::storage;
using json = nlohmann::ordered_json;

struct CliOptions {
  std::string base_dir;
  std::string out_dir;
  std::string label;
  std::string score = "density";
  std::string mode = "both";
  std::string engine = "both";
  std::string truth_file;
  std::vector<std::string> files;
  std::vector<double> sweep_fractions;
  double keep_fraction = 1.0;
  double epsilon = 0.05;
  double threshold = 0.5;
  double gap_ratio = 4.0;
  int k = 9;
  int max_rounds = 100;
  bool json_output = false;
  bool no_structural_decisive = false;
};

eval::Engine parse_engine(const std::string& name) {
  if (name == "knn") return eval::Engine::knn;
  if (name == "combi") return eval::Engine::combi;
  return eval::Engine::both;
}

feature::PruneScore parse_score(const std::string& name) {
  return name == "ig" ? feature::PruneScore::ig : feature::PruneScore::density;
}

struct ExtractedFile {
  std::string path;
  pe::PeLayout layout;
  std::vector<pe::ImportedPair> imports;
  std::vector<pe::ExportEntry> exports;
  std::string export_dll;
  pe::StructuralFindings structural;
};

ExtractedFile extract_file(const std::string& path) {
  ExtractedFile out;
  out.path = path;
  std::vector<std::uint8_t> bytes = storage::read_file(path);
  out.layout = pe::parse_pe(bytes);
  if (out.layout.import_dir.present()) out.imports = pe::extract_imports(out.layout, bytes);
  if (out.layout.export_dir.present()) {
    pe::ExportTable table = pe::extract_exports(out.layout, bytes);
    out.exports = std::move(table.entries);
    out.export_dll = std::move(table.dll_name);
  }
  out.structural = pe::structural_check(out.layout, out.imports, out.exports);
  return out;
}

json structural_json(const pe::StructuralFindings& s) {
  json j;
  j["has_iat"] = s.has_iat;
  j["has_eat"] = s.has_eat;
  j["empty_iat"] = s.empty_iat;
  j["ordinal_rule_violation"] = s.ordinal_rule_violation;
  j["hint_rule_warning"] = s.hint_rule_warning;
  j["malformed"] = s.malformed;
  return j;
}

// ---------------------------------------------------------------- extract --

int cmd_extract(const CliOptions& opt, std::ostream& out) {
  ExtractedFile file = extract_file(opt.files.front());

  if (opt.json_output) {
    json j;
    j["schema"] = 1;
    j["path"] = file.path;
    json layout;
    layout["format"] = file.layout.is_pe32_plus ? "PE32+" : "PE32";
    layout["is_dll"] = file.layout.is_dll;
    layout["image_base"] = file.layout.image_base;
    json sections = json::array();
    for (const auto& s : file.layout.section_table) {
      json sec;
      sec["name"] = s.name;
      sec["virtual_address"] = s.virtual_address;
      sec["virtual_size"] = s.virtual_size;
      sec["raw_offset"] = s.raw_offset;
      sec["raw_size"] = s.raw_size;
      sections.push_back(std::move(sec));
    }
    layout["sections"] = std::move(sections);
    layout["import_dir_present"] = file.layout.import_dir.present();
    layout["export_dir_present"] = file.layout.export_dir.present();
    j["layout"] = std::move(layout);

    json imports = json::array();
    for (const auto& p : file.imports) {
      json entry;
      entry["dll"] = p.dll_name;
      if (const auto* byname = std::get_if<pe::ImportByName>(&p.func)) {
        entry["name"] = byname->name;
        if (byname->hint.has_value()) entry["hint"] = *byname->hint;
      } else {
        entry["ordinal"] = std::get<std::uint16_t>(p.func);
      }
      imports.push_back(std::move(entry));
    }
    j["imports"] = std::move(imports);

    json exports;
    exports["dll"] = file.export_dll;
    json entries = json::array();
    for (const auto& e : file.exports) {
      json entry;
      if (e.name.has_value()) entry["name"] = *e.name;
      entry["ordinal"] = e.ordinal;
      entries.push_back(std::move(entry));
    }
    exports["entries"] = std::move(entries);
    j["exports"] = std::move(exports);
    j["structural"] = structural_json(file.structural);
    out << j.dump(2) << '\n';
    return 0;
  }

  out << "file: " << file.path << '\n';
  out << "format: " << (file.layout.is_pe32_plus ? "PE32+" : "PE32")
      << (file.layout.is_dll ? " (dll)" : " (executable)") << '\n';
  out << "image_base: 0x" << std::hex << file.layout.image_base << std::dec << '\n';
  out << "sections: " << file.layout.section_table.size() << '\n';
  for (const auto& s : file.layout.section_table) {
    out << "  " << s.name << " va=0x" << std::hex << s.virtual_address << " raw=0x" << s.raw_offset
        << std::dec << " vsize=" << s.virtual_size << " rawsize=" << s.raw_size << '\n';
  }
  out << "imports: " << file.imports.size() << '\n';
  for (const auto& p : file.imports) {
    if (const auto* byname = std::get_if<pe::ImportByName>(&p.func)) {
      out << "  " << p.dll_name << "!" << byname->name;
      if (byname->hint.has_value()) out << " hint=" << *byname->hint;
      out << '\n';
    } else {
      out << "  " << p.dll_name << "!#" << std::get<std::uint16_t>(p.func) << '\n';
    }
  }
  out << "exports: " << file.exports.size();
  if (!file.export_dll.empty()) out << " (dll " << file.export_dll << ")";
  out << '\n';
  for (const auto& e : file.exports) {
    out << "  " << (e.name.has_value() ? *e.name : std::string("<by ordinal>")) << " ordinal=" << e.ordinal
        << '\n';
  }
  const auto& s = file.structural;
  out << "structural:\n";
  out << "  has_iat: " << (s.has_iat ? "true" : "false") << '\n';
  out << "  has_eat: " << (s.has_eat ? "true" : "false") << '\n';
  out << "  empty_iat: " << (s.empty_iat ? "true" : "false") << '\n';
  out << "  ordinal_rule_violation: " << (s.ordinal_rule_violation ? "true" : "false") << '\n';
  out << "  hint_rule_warning: " << (s.hint_rule_warning ? "true" : "false") << '\n';
  for (const auto& note : s.malformed) out << "  note: " << note << '\n';
  return 0;
}

// --------------------------------------------------------------------- db --

int cmd_db_init(const CliOptions& opt, std::ostream& out) {
  BaseBundle bundle = make_empty_bundle();
  save_bundle(opt.out_dir, bundle);
  out << "initialized empty base at " << opt.out_dir << '\n';
  return 0;
}

int cmd_db_add(const CliOptions& opt, std::ostream& out, std::ostream& err) {
  BaseBundle bundle = load_bundle(opt.base_dir);
  Label label = opt.label == "malware" ? Label::malware : Label::benign;

  struct Pending {
    std::vector<feature::PairKey> iat_keys;
    std::vector<feature::PairKey> eat_keys;
  };
  std::vector<Pending> pending;
  std::size_t failed = 0;
  for (const std::string& path : opt.files) {
    try {
      ExtractedFile file = extract_file(path);
      Pending p;
      p.iat_keys = feature::pair_keys_from_imports(file.imports);
      p.eat_keys = feature::pair_keys_from_exports(file.export_dll, file.exports);
      feature::register_keys(bundle.registry, p.iat_keys);
      feature::register_keys(bundle.registry, p.eat_keys);
      pending.push_back(std::move(p));
    } catch (const Error& e) {
      err << "warning: skipping " << path << ": " << e.what() << '\n';
      ++failed;
    }
  }

  bundle.refresh_versions();
  for (const Pending& p : pending) {
    feature::TableVector iat = feature::vectorize(p.iat_keys, bundle.registry, feature::TableKind::iat);
    std::optional<feature::TableVector> eat;
    if (!p.eat_keys.empty()) {
      eat = feature::vectorize(p.eat_keys, bundle.registry, feature::TableKind::eat);
    }
    bundle.add_sample(label, std::move(iat), std::move(eat));
  }
  bundle.rebuild_combi();
  save_bundle(opt.base_dir, bundle);

  out << "added " << pending.size() << " " << opt.label << " file(s)";
  if (failed > 0) out << " (" << failed << " skipped)";
  out << "; registry now holds " << bundle.registry.universe_size() << " pairs in "
      << bundle.registry.dll_count() << " dlls\n";
  return 0;
}

int cmd_db_prune(const CliOptions& opt, std::ostream& out) {
  BaseBundle bundle = load_bundle(opt.base_dir);
  feature::PruneScore score = parse_score(opt.score);

  auto prune_side = [&](knn::TrainingBase& base) {
    std::vector<std::pair<feature::TableVector, Label>> labeled;
    for (auto& v : base.malware) labeled.emplace_back(std::move(v), Label::malware);
    for (auto& v : base.benign) labeled.emplace_back(std::move(v), Label::benign);
    auto kept = feature::prune_base(labeled, opt.keep_fraction, score);
    base.malware.clear();
    base.benign.clear();
    for (auto& [vec, l] : kept) (l == Label::malware ? base.malware : base.benign).push_back(std::move(vec));
  };
  std::size_t before = bundle.iat_base.size() + bundle.eat_base.size();
  prune_side(bundle.iat_base);
  prune_side(bundle.eat_base);
  bundle.rebuild_combi();
  save_bundle(opt.base_dir, bundle);

  out << "pruned to keep=" << opt.keep_fraction << " (score " << opt.score << "): " << before << " -> "
      << bundle.iat_base.size() + bundle.eat_base.size() << " vectors\n";
  return 0;
}

int cmd_db_stats(const CliOptions& opt, std::ostream& out) {
  BaseBundle bundle = load_bundle(opt.base_dir);
  out << "base: " << opt.base_dir << '\n';
  out << "registry_version: " << bundle.registry.version() << '\n';
  out << "dlls: " << bundle.registry.dll_count() << '\n';
  out << "functions: " << bundle.registry.universe_size() << '\n';
  out << "knn_iat: " << bundle.iat_base.malware.size() << " malware, " << bundle.iat_base.benign.size()
      << " benign\n";
  out << "knn_eat: " << bundle.eat_base.malware.size() << " malware, " << bundle.eat_base.benign.size()
      << " benign\n";
  out << "combi_vectors: " << bundle.combi_base.malware_vectors.size() << " malware, "
      << bundle.combi_base.benign_vectors.size() << " benign\n";
  out << "blacklist_functions: " << bundle.combi_base.blacklist.count() << '\n';
  out << "binomial_union_bits: " << bundle.combi_base.mbs.popcount() << " malware, "
      << bundle.combi_base.gbs.popcount() << " benign\n";
  out << "trinomial_union_bits: " << bundle.combi_base.mts.popcount() << " malware, "
      << bundle.combi_base.gts.popcount() << " benign\n";
  return 0;
}

// ------------------------------------------------------------------- scan --

RunConfig run_config_from(const CliOptions& opt) {
  RunConfig config;
  config.mode = parse_engine(opt.mode);
  config.knn.k = opt.k;
  config.knn.similarity_threshold = opt.threshold;
  config.combi.gap_ratio = opt.gap_ratio;
  config.structural_decisive = !opt.no_structural_decisive;
  config.knn.validate();
  config.combi.validate();
  return config;
}

json scan_report_json(const ScanReport& r) {
  json j;
  j["path"] = r.path;
  j["verdict"] = r.error.empty() ? verdict_name(r.final_label) : "error";
  if (!r.error.empty()) j["error"] = r.error;
  j["structural"] = structural_json(r.structural);
  if (r.knn_label.has_value()) {
    json k;
    k["label"] = verdict_name(*r.knn_label);
    if (r.knn_iat.has_value()) {
      k["iat_nearest_distance"] = r.knn_iat->neighbors.front().distance;
      k["iat_label"] = verdict_name(r.knn_iat->label);
    }
    if (r.knn_eat.has_value()) k["eat_label"] = verdict_name(r.knn_eat->label);
    j["knn"] = std::move(k);
  }
  if (r.combi_verdict.has_value()) {
    json c;
    c["label"] = verdict_name(r.combi_verdict->label);
    c["type_count"] = r.combi_verdict->type_count;
    json tests = json::array();
    static const char* names[] = {"blacklist", "xor", "and", "binomial", "trinomial"};
    for (const auto& t : r.combi_verdict->per_test) {
      json entry;
      entry["test"] = names[static_cast<int>(t.id)];
      entry["vote"] = t.vote;
      tests.push_back(std::move(entry));
    }
    c["tests"] = std::move(tests);
    j["combi"] = std::move(c);
  }
  j["reasons"] = r.reasons;
  return j;
}

int cmd_scan(const CliOptions& opt, std::ostream& out) {
  BaseBundle bundle = load_bundle(opt.base_dir);
  RunConfig config = run_config_from(opt);

  std::vector<ScanReport> reports = scan_files(opt.files, bundle, config);

  std::size_t malicious = 0, benign = 0, errors = 0;
  for (const ScanReport& r : reports) {
    if (!r.error.empty()) {
      ++errors;
    } else if (r.final_label == Label::malware) {
      ++malicious;
    } else {
      ++benign;
    }
  }

  if (opt.json_output) {
    json j;
    j["schema"] = 1;
    json rs = json::array();
    for (const ScanReport& r : reports) rs.push_back(scan_report_json(r));
    j["reports"] = std::move(rs);
    json summary;
    summary["malicious"] = malicious;
    summary["benign"] = benign;
    summary["errors"] = errors;
    j["summary"] = std::move(summary);
    out << j.dump(2) << '\n';
  } else {
    for (const ScanReport& r : reports) {
      std::string verdict = r.error.empty() ? verdict_name(r.final_label) : "error";
      out << verdict << '\t' << r.path;
      if (!r.reasons.empty()) {
        out << '\t';
        for (std::size_t i = 0; i < r.reasons.size(); ++i) {
          if (i > 0) out << "; ";
          out << r.reasons[i];
        }
      }
      out << '\n';
    }
    out << "scanned " << reports.size() << " file(s): " << malicious << " malicious, " << benign
        << " benign, " << errors << " error(s)\n";
  }
  return malicious > 0 ? 1 : 0;
}

// ------------------------------------------------------------------ train --

int cmd_train(const CliOptions& opt, std::ostream& out, std::ostream& err) {
  BaseBundle bundle = load_bundle(opt.base_dir);

  std::vector<std::vector<feature::PairKey>> pending;
  for (const std::string& path : opt.files) {
    try {
      ExtractedFile file = extract_file(path);
      std::vector<feature::PairKey> keys = feature::pair_keys_from_imports(file.imports);
      feature::register_keys(bundle.registry, keys);
      pending.push_back(std::move(keys));
    } catch (const Error& e) {
      err << "warning: skipping " << path << ": " << e.what() << '\n';
    }
  }
  bundle.refresh_versions();

  std::vector<feature::TableVector> samples;
  for (const auto& keys : pending) {
    samples.push_back(feature::vectorize(keys, bundle.registry, feature::TableKind::iat));
  }

  knn::TrainConfig config;
  config.epsilon = opt.epsilon;
  config.max_rounds = opt.max_rounds;
  config.knn.k = opt.k;
  config.knn.similarity_threshold = opt.threshold;

  knn::TrainResult result = knn::train_iterative(bundle.iat_base, samples, config);
  bundle.iat_base = std::move(result.base);
  bundle.rebuild_combi();
  save_bundle(opt.base_dir, bundle);

  out << "training over " << samples.size() << " sample(s), epsilon " << opt.epsilon << '\n';
  out << "rounds: " << result.rounds << '\n';
  out << "undetected_per_round:";
  for (std::size_t u : result.undetected_per_round) out << ' ' << u;
  out << '\n';
  out << "absorbed: " << result.absorbed << " (base malware vectors now "
      << bundle.iat_base.malware.size() << ")\n";
  if (result.skipped_empty > 0) out << "skipped_empty: " << result.skipped_empty << '\n';
  return 0;
}

// ------------------------------------------------------------------- eval --

int cmd_eval(const CliOptions& opt, std::ostream& out, std::ostream& err) {
  BaseBundle bundle = load_bundle(opt.base_dir);

  std::vector<std::uint8_t> truth_bytes = storage::read_file(opt.truth_file);
  auto truth = eval::read_truth_csv(std::string(truth_bytes.begin(), truth_bytes.end()));

  eval::LabeledCorpus corpus;
  for (const auto& [path, label] : truth) {
    try {
      ExtractedFile file = extract_file(path);
      eval::CorpusEntry entry;
      entry.name = path;
      entry.truth = label;
      entry.iat = feature::vectorize(feature::pair_keys_from_imports(file.imports), bundle.registry,
                                     feature::TableKind::iat);
      if (!file.exports.empty()) {
        entry.eat = feature::vectorize(feature::pair_keys_from_exports(file.export_dll, file.exports),
                                       bundle.registry, feature::TableKind::eat);
      }
      corpus.entries.push_back(std::move(entry));
    } catch (const Error& e) {
      err << "warning: skipping " << path << ": " << e.what() << '\n';
    }
  }

  eval::Engine engine = parse_engine(opt.engine);
  eval::EvalBases bases;
  bases.registry = &bundle.registry;
  bases.iat_base = &bundle.iat_base;
  bases.eat_base = &bundle.eat_base;
  bases.combi_base = &bundle.combi_base;
  eval::EvalConfigs configs;
  configs.knn.k = opt.k;
  configs.knn.similarity_threshold = opt.threshold;
  configs.combi.gap_ratio = opt.gap_ratio;

  eval::MetricsReport report = eval::evaluate(corpus, engine, bases, configs);
  std::vector<eval::SweepRow> rows;
  if (!opt.sweep_fractions.empty()) {
    rows = eval::sweep(corpus, engine, bases, configs, opt.sweep_fractions, parse_score(opt.score));
  }

  if (opt.json_output) {
    json j;
    j["schema"] = 1;
    j["engine"] = opt.engine;
    j["entries"] = corpus.entries.size();
    json metrics;
    metrics["true_positive_rate"] = report.payload.true_positive_rate;
    metrics["false_positive_rate"] = report.payload.false_positive_rate;
    metrics["true_negative_rate"] = report.payload.true_negative_rate;
    metrics["false_negative_rate"] = report.payload.false_negative_rate;
    json confusion;
    confusion["true_positive"] = report.payload.counts.true_positive;
    confusion["false_negative"] = report.payload.counts.false_negative;
    confusion["false_positive"] = report.payload.counts.false_positive;
    confusion["true_negative"] = report.payload.counts.true_negative;
    metrics["confusion"] = std::move(confusion);
    metrics["mean_seconds_per_file"] = report.mean_seconds_per_file;
    j["metrics"] = std::move(metrics);
    if (!rows.empty()) {
      json sweep_rows = json::array();
      for (const auto& row : rows) {
        json r;
        r["fraction"] = row.fraction;
        r["detection_rate"] = row.detection_rate;
        r["base_bytes"] = row.base_bytes;
        r["seconds"] = row.seconds;
        sweep_rows.push_back(std::move(r));
      }
      j["sweep"] = std::move(sweep_rows);
    }
    out << j.dump(2) << '\n';
    return 0;
  }

  const auto& p = report.payload;
  out << "engine: " << opt.engine << '\n';
  out << "entries: " << corpus.entries.size() << '\n';
  out << std::fixed << std::setprecision(6);
  out << "true_positive_rate: " << p.true_positive_rate << '\n';
  out << "false_positive_rate: " << p.false_positive_rate << '\n';
  out << "true_negative_rate: " << p.true_negative_rate << '\n';
  out << "false_negative_rate: " << p.false_negative_rate << '\n';
  out << "mean_seconds_per_file: " << report.mean_seconds_per_file << '\n';
  out << '\n';
  out << "confusion              malware_set  benign_set\n";
  out << "detected_as_malware    " << std::setw(11) << p.counts.true_positive << "  " << std::setw(10)
      << p.counts.false_positive << '\n';
  out << "detected_as_benign     " << std::setw(11) << p.counts.false_negative << "  " << std::setw(10)
      << p.counts.true_negative << '\n';
  if (!rows.empty()) {
    out << '\n';
    out << "sweep (score=" << opt.score << ")\n";
    out << "fraction  detection_rate  base_bytes  seconds\n";
    for (const auto& row : rows) {
      out << std::setprecision(2) << std::setw(8) << row.fraction << "  " << std::setprecision(6)
          << std::setw(14) << row.detection_rate << "  " << std::setw(10) << row.base_bytes << "  "
          << row.seconds << '\n';
    }
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"IAT/EAT static malware classification toolkit"};
  app.require_subcommand(1);
  CliOptions opt;

  auto* extract = app.add_subcommand("extract", "Parse one PE file and print its IAT/EAT features");
  extract->add_option("file", opt.files, "PE file")->required()->expected(1);
  extract->add_flag("--json", opt.json_output, "machine-readable output");

  auto* db = app.add_subcommand("db", "Training database maintenance");
  db->require_subcommand(1);

  auto* db_init = db->add_subcommand("init", "Create an empty base directory");
  db_init->add_option("--out", opt.out_dir, "target directory")->required();

  auto* db_add = db->add_subcommand("add", "Extract files and add their vectors under a label");
  db_add->add_option("--base", opt.base_dir, "base directory")->envname("IATFORGE_BASE")->required();
  db_add->add_option("--label", opt.label, "malware|benign")
      ->required()
      ->check(CLI::IsMember({"malware", "benign"}));
  db_add->add_option("files", opt.files, "PE files")->required()->expected(-1);

  auto* db_prune = db->add_subcommand("prune", "Keep only the highest-scoring vectors");
  db_prune->add_option("--base", opt.base_dir, "base directory")->envname("IATFORGE_BASE")->required();
  db_prune->add_option("--keep", opt.keep_fraction, "fraction in (0,1]")->required();
  db_prune->add_option("--score", opt.score, "ig|density")->check(CLI::IsMember({"ig", "density"}));

  auto* db_stats = db->add_subcommand("stats", "Print base statistics");
  db_stats->add_option("--base", opt.base_dir, "base directory")->envname("IATFORGE_BASE")->required();

  auto* scan = app.add_subcommand("scan", "Classify PE files against a base");
  scan->add_option("--base", opt.base_dir, "base directory")->envname("IATFORGE_BASE")->required();
  scan->add_option("--mode", opt.mode, "knn|combi|both")->check(CLI::IsMember({"knn", "combi", "both"}));
  scan->add_option("--k", opt.k, "neighbor count (odd)");
  scan->add_option("--threshold", opt.threshold, "similarity threshold in (0,1]");
  scan->add_option("--gap", opt.gap_ratio, "gap override ratio (>= 1)");
  scan->add_flag("--no-structural-decisive", opt.no_structural_decisive,
                 "structural findings no longer short-circuit");
  scan->add_flag("--json", opt.json_output, "machine-readable output");
  scan->add_option("files", opt.files, "PE files")->required()->expected(-1);

  auto* train = app.add_subcommand("train", "Absorb undetected malware samples into the base");
  train->add_option("--base", opt.base_dir, "base directory")->envname("IATFORGE_BASE")->required();
  train->add_option("--epsilon", opt.epsilon, "tolerated undetected fraction")->required();
  train->add_option("--max-rounds", opt.max_rounds, "round cap");
  train->add_option("files", opt.files, "malware PE files")->required()->expected(-1);

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate detection metrics over a labeled corpus");
  eval_cmd->add_option("--base", opt.base_dir, "base directory")->envname("IATFORGE_BASE")->required();
  eval_cmd->add_option("--truth", opt.truth_file, "CSV with header path,label")->required();
  eval_cmd->add_option("--sweep", opt.sweep_fractions, "fractions to prune to")->delimiter(',');
  eval_cmd->add_option("--score", opt.score, "ig|density")->check(CLI::IsMember({"ig", "density"}));
  eval_cmd->add_option("--engine", opt.engine, "knn|combi|both")
      ->check(CLI::IsMember({"knn", "combi", "both"}));
  eval_cmd->add_option("--k", opt.k, "neighbor count (odd)");
  eval_cmd->add_option("--threshold", opt.threshold, "similarity threshold in (0,1]");
  eval_cmd->add_option("--gap", opt.gap_ratio, "gap override ratio (>= 1)");
  eval_cmd->add_flag("--json", opt.json_output, "machine-readable output");

  std::vector<const char*> argv;
  argv.push_back("iatforge");
  for (const std::string& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (extract->parsed()) return cmd_extract(opt, out);
    if (db->parsed()) {
      if (db_init->parsed()) return cmd_db_init(opt, out);
      if (db_add->parsed()) return cmd_db_add(opt, out, err);
      if (db_prune->parsed()) return cmd_db_prune(opt, out);
      if (db_stats->parsed()) return cmd_db_stats(opt, out);
    }
    if (scan->parsed()) return cmd_scan(opt, out);
    if (train->parsed()) return cmd_train(opt, out, err);
    if (eval_cmd->parsed()) return cmd_eval(opt, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  err << "usage error: no command\n";
  return 2;
}

}  // namespace iatforge::pipeline
