#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "helpers.hpp"
#include "iatforge/feature/storage.hpp"
#include "iatforge/pe/fixture.hpp"
#include "iatforge/pipeline/base_dir.hpp"
#include "iatforge/pipeline/cli.hpp"
#include "iatforge/pipeline/scan.hpp"

using namespace iatforge;
using namespace iatforge::pipeline;
using pe::FixtureDll;
using pe::FixtureImport;
using pe::FixtureSpec;

namespace {

FixtureSpec spec_with_imports(std::vector<std::pair<std::string, std::vector<std::string>>> dlls) {
  FixtureSpec spec;
  for (auto& [dll_name, funcs] : dlls) {
    FixtureDll dll;
    dll.name = dll_name;
    std::uint16_t hint = 0;
    for (auto& fn : funcs) dll.funcs.push_back({FixtureImport::Name{fn, hint++}});
    spec.imports.push_back(std::move(dll));
  }
  return spec;
}

std::filesystem::path write_fixture(const testutil::TempDir& dir, const std::string& name,
                                    const FixtureSpec& spec) {
  std::filesystem::path path = dir.path() / name;
  feature::storage::write_file(path, pe::build_fixture(spec));
  return path;
}

/// A bundle with one malware family and one benign family already added.
BaseBundle seeded_bundle(const testutil::TempDir& dir) {
  BaseBundle bundle = make_empty_bundle();
  auto add = [&](Label label, const FixtureSpec& spec) {
    std::vector<std::uint8_t> bytes = pe::build_fixture(spec);
    pe::PeLayout layout = pe::parse_pe(bytes);
    auto imports = pe::extract_imports(layout, bytes);
    auto keys = feature::pair_keys_from_imports(imports);
    feature::register_keys(bundle.registry, keys);
    bundle.refresh_versions();
    bundle.add_sample(label, feature::vectorize(keys, bundle.registry, feature::TableKind::iat),
                      std::nullopt);
  };
  add(Label::malware, spec_with_imports({{"evil.dll", {"Inject", "Hide", "Steal", "Spread"}}}));
  add(Label::malware, spec_with_imports({{"evil.dll", {"Inject", "Hide", "Steal", "Persist"}}}));
  add(Label::benign, spec_with_imports({{"kernel32.dll", {"CreateFileA", "ReadFile", "WriteFile"}}}));
  add(Label::benign, spec_with_imports({{"kernel32.dll", {"CreateFileA", "ReadFile", "CloseHandle"}}}));
  bundle.rebuild_combi();
  save_bundle(dir.path(), bundle);
  return bundle;
}

}  // namespace

TEST_CASE("scan: ordinal violation is decisive before the heuristic stages") {
  testutil::TempDir dir("scan_structural");
  BaseBundle bundle = seeded_bundle(dir);

  FixtureSpec spec = spec_with_imports({{"kernel32.dll", {"CreateFileA", "ReadFile", "WriteFile"}}});
  spec.exports = pe::FixtureExports{};
  spec.exports->named = {"A", "B"};
  spec.exports->ordinal_base = 2;  // ordinals {2,3}: violates 1..N
  std::vector<std::uint8_t> bytes = pe::build_fixture(spec);

  RunConfig config;
  ScanReport report = scan_bytes("bad.exe", bytes, bundle, config);
  CHECK(report.final_label == Label::malware);
  CHECK_FALSE(report.knn_iat.has_value());  // stage 2 never ran
  CHECK_FALSE(report.combi_verdict.has_value());

  config.structural_decisive = false;
  ScanReport relaxed = scan_bytes("bad.exe", bytes, bundle, config);
  CHECK(relaxed.knn_iat.has_value());  // heuristics ran; the match is benign
  CHECK(relaxed.final_label == Label::benign);
}

TEST_CASE("scan: a file with no IAT is malicious by the suspicion rule") {
  testutil::TempDir dir("scan_noiat");
  BaseBundle bundle = seeded_bundle(dir);
  FixtureSpec spec;
  spec.import_mode = pe::ImportDirMode::absent;
  ScanReport report = scan_bytes("empty.exe", pe::build_fixture(spec), bundle, RunConfig{});
  CHECK(report.final_label == Label::malware);
  CHECK(report.structural.empty_iat);
}

TEST_CASE("scan: benign exact match stays benign in knn mode") {
  testutil::TempDir dir("scan_benign");
  BaseBundle bundle = seeded_bundle(dir);
  FixtureSpec spec = spec_with_imports({{"kernel32.dll", {"CreateFileA", "ReadFile", "WriteFile"}}});

  RunConfig config;
  config.mode = eval::Engine::knn;
  ScanReport report = scan_bytes("good.exe", pe::build_fixture(spec), bundle, config);
  CHECK(report.final_label == Label::benign);
  REQUIRE(report.knn_iat.has_value());
  CHECK(report.knn_iat->stage == knn::DecisionStage::exact_match);
}

TEST_CASE("scan: malware family member is caught") {
  testutil::TempDir dir("scan_malware");
  BaseBundle bundle = seeded_bundle(dir);
  FixtureSpec spec = spec_with_imports({{"evil.dll", {"Inject", "Hide", "Steal", "Encrypt"}}});
  ScanReport report = scan_bytes("variant.exe", pe::build_fixture(spec), bundle, RunConfig{});
  CHECK(report.final_label == Label::malware);
}

TEST_CASE("scan: parse failures are contained per file and order is kept") {
  testutil::TempDir dir("scan_batch");
  BaseBundle bundle = seeded_bundle(dir);

  auto good = write_fixture(dir, "good.exe",
                            spec_with_imports({{"kernel32.dll", {"CreateFileA", "ReadFile", "WriteFile"}}}));
  std::filesystem::path junk = dir.path() / "junk.bin";
  {
    std::vector<std::uint8_t> garbage{'n', 'o', 't', ' ', 'p', 'e'};
    feature::storage::write_file(junk, garbage);
  }
  auto evil = write_fixture(dir, "evil.exe",
                            spec_with_imports({{"evil.dll", {"Inject", "Hide", "Steal", "Spread"}}}));

  std::vector<std::string> paths{good.string(), junk.string(), evil.string(), "missing.exe"};
  auto reports = scan_files(paths, bundle, RunConfig{});
  REQUIRE(reports.size() == 4);
  CHECK(reports[0].path == paths[0]);
  CHECK(reports[0].final_label == Label::benign);
  CHECK_FALSE(reports[1].error.empty());
  CHECK(reports[2].final_label == Label::malware);
  CHECK_FALSE(reports[3].error.empty());
}

TEST_CASE("bundle round trip preserves everything") {
  testutil::TempDir dir("bundle_roundtrip");
  BaseBundle bundle = seeded_bundle(dir);
  BaseBundle loaded = load_bundle(dir.path());
  CHECK(loaded.registry == bundle.registry);
  CHECK(loaded.iat_base.malware == bundle.iat_base.malware);
  CHECK(loaded.iat_base.benign == bundle.iat_base.benign);
  CHECK(loaded.combi_base.mbs == bundle.combi_base.mbs);
  CHECK(loaded.combi_base.gts == bundle.combi_base.gts);
  CHECK(loaded.combi_base.blacklist == bundle.combi_base.blacklist);
}

// ----------------------------------------------------------------- CLI -----

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("cli: end-to-end db, scan, train, eval") {
  testutil::TempDir dir("cli_e2e");
  std::string base = (dir.path() / "base").string();

  auto mal1 = write_fixture(dir, "mal1.exe",
                            spec_with_imports({{"evil.dll", {"Inject", "Hide", "Steal", "Spread"}}}));
  auto mal2 = write_fixture(dir, "mal2.exe",
                            spec_with_imports({{"evil.dll", {"Inject", "Hide", "Steal", "Persist"}}}));
  auto ben1 = write_fixture(dir, "ben1.exe",
                            spec_with_imports({{"kernel32.dll", {"CreateFileA", "ReadFile", "WriteFile"}}}));
  auto ben2 = write_fixture(dir, "ben2.exe",
                            spec_with_imports({{"kernel32.dll", {"CreateFileA", "ReadFile", "CloseHandle"}}}));

  CHECK(cli({"db", "init", "--out", base}).code == 0);
  CHECK(cli({"db", "add", "--base", base, "--label", "malware", mal1.string(), mal2.string()}).code == 0);
  CHECK(cli({"db", "add", "--base", base, "--label", "benign", ben1.string(), ben2.string()}).code == 0);

  CliResult stats = cli({"db", "stats", "--base", base});
  CHECK(stats.code == 0);
  CHECK(stats.out.find("knn_iat: 2 malware, 2 benign") != std::string::npos);

  // Scanning one benign file exits 0.
  CliResult benign_scan = cli({"scan", "--base", base, ben1.string()});
  CHECK(benign_scan.code == 0);
  CHECK(benign_scan.out.find("benign") != std::string::npos);

  // A malware family variant exits 1.
  auto variant = write_fixture(dir, "variant.exe",
                               spec_with_imports({{"evil.dll", {"Inject", "Hide", "Steal", "Encrypt"}}}));
  CliResult mal_scan = cli({"scan", "--base", base, variant.string(), ben1.string()});
  CHECK(mal_scan.code == 1);
  CHECK(mal_scan.out.find("malicious") != std::string::npos);

  // JSON report carries the schema marker.
  CliResult json_scan = cli({"scan", "--base", base, "--json", ben1.string()});
  CHECK(json_scan.code == 0);
  CHECK(json_scan.out.find("\"schema\": 1") != std::string::npos);

  // Train absorbs an undetected family and detects it afterwards.
  auto fam1 = write_fixture(dir, "fam1.exe",
                            spec_with_imports({{"rat.dll", {"Connect", "Exfil", "KeyLog", "Screen"}}}));
  auto fam2 = write_fixture(dir, "fam2.exe",
                            spec_with_imports({{"rat.dll", {"Connect", "Exfil", "KeyLog", "Inject"}}}));
  CliResult train = cli({"train", "--base", base, "--epsilon", "0", fam1.string(), fam2.string()});
  CHECK(train.code == 0);
  CHECK(cli({"scan", "--base", base, fam2.string()}).code == 1);

  // Eval over a labeled corpus.
  std::filesystem::path truth = dir.path() / "truth.csv";
  {
    std::ofstream csv(truth);
    csv << "path,label\n";
    csv << variant.string() << ",malware\n";
    csv << ben1.string() << ",benign\n";
    csv << ben2.string() << ",benign\n";
  }
  CliResult eval_run = cli({"eval", "--base", base, "--truth", truth.string()});
  CHECK(eval_run.code == 0);
  CHECK(eval_run.out.find("true_positive_rate: 1.0") != std::string::npos);
  CHECK(eval_run.out.find("confusion") != std::string::npos);

  CliResult sweep_run =
      cli({"eval", "--base", base, "--truth", truth.string(), "--sweep", "1.0,0.5", "--json"});
  CHECK(sweep_run.code == 0);
  CHECK(sweep_run.out.find("\"sweep\"") != std::string::npos);

  // Prune keeps the base loadable.
  CHECK(cli({"db", "prune", "--base", base, "--keep", "0.5", "--score", "density"}).code == 0);
  CHECK(cli({"db", "stats", "--base", base}).code == 0);
}

TEST_CASE("cli: extract prints imports and exports") {
  testutil::TempDir dir("cli_extract");
  FixtureSpec spec = spec_with_imports({{"kernel32.dll", {"ExitProcess"}}});
  spec.exports = pe::FixtureExports{};
  spec.exports->named = {"Ping"};
  auto file = write_fixture(dir, "sample.exe", spec);

  CliResult text = cli({"extract", file.string()});
  CHECK(text.code == 0);
  CHECK(text.out.find("kernel32.dll!ExitProcess") != std::string::npos);
  CHECK(text.out.find("Ping") != std::string::npos);

  CliResult json = cli({"extract", "--json", file.string()});
  CHECK(json.code == 0);
  CHECK(json.out.find("\"schema\": 1") != std::string::npos);
  CHECK(json.out.find("\"ExitProcess\"") != std::string::npos);
}

TEST_CASE("cli: usage errors exit 2") {
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({"scan", "--no-such-flag"}).code == 2);
  CHECK(cli({}).code == 2);
  CHECK(cli({"db", "add", "--base", "/nonexistent", "--label", "weird", "x"}).code == 2);
}

TEST_CASE("cli: scan with errored files only exits 0 and reports them") {
  testutil::TempDir dir("cli_errors");
  std::string base = (dir.path() / "base").string();
  REQUIRE(cli({"db", "init", "--out", base}).code == 0);
  std::filesystem::path junk = dir.path() / "junk.bin";
  std::vector<std::uint8_t> garbage{1, 2, 3};
  feature::storage::write_file(junk, garbage);

  CliResult result = cli({"scan", "--base", base, junk.string()});
  CHECK(result.code == 0);
  CHECK(result.out.find("error") != std::string::npos);
}

TEST_CASE("cli: missing base directory is an internal error") {
  CliResult result = cli({"db", "stats", "--base", "/definitely/not/here"});
  CHECK(result.code == 2);
  CHECK(result.err.find("error") != std::string::npos);
}
