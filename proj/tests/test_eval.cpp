#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "iatforge/error.hpp"
#include "iatforge/eval/harness.hpp"
#include "iatforge/eval/synthetic.hpp"

using namespace iatforge;
using namespace iatforge::eval;

namespace {

/// Corpus + bases where train vectors double as base vectors.
struct Setup {
  feature::PairRegistry registry;
  knn::TrainingBase iat_base;
  combi::CombiBase combi_base;
  LabeledCorpus corpus;
};

Setup exact_match_setup() {
  SyntheticSpec spec;
  spec.seed = 7;
  SyntheticCorpus synth = generate_synthetic(spec);

  Setup s;
  s.registry = std::move(synth.registry);
  s.iat_base.kind = feature::TableKind::iat;
  s.iat_base.registry_version = s.registry.version();
  std::vector<feature::FunctionBitVector> m, b;
  for (const CorpusEntry& e : synth.train.entries) {
    (e.truth == Label::malware ? s.iat_base.malware : s.iat_base.benign).push_back(e.iat);
    (e.truth == Label::malware ? m : b).push_back(feature::to_bitvector(e.iat, s.registry));
  }
  s.combi_base = combi::CombiBase::build(m, b, Bitset(s.registry.universe_size()),
                                         s.registry.universe_size(), s.registry.version());
  s.corpus = synth.train;  // evaluating the base against itself
  return s;
}

EvalBases bases_of(const Setup& s) {
  EvalBases bases;
  bases.registry = &s.registry;
  bases.iat_base = &s.iat_base;
  bases.combi_base = &s.combi_base;
  return bases;
}

}  // namespace

TEST_CASE("corpus identical to the base scores perfectly via exact matches") {
  Setup s = exact_match_setup();
  MetricsReport report = evaluate(s.corpus, Engine::knn, bases_of(s), {});
  CHECK(report.payload.true_positive_rate == 1.0);
  CHECK(report.payload.true_negative_rate == 1.0);
  CHECK(report.payload.counts.false_positive == 0);
  CHECK(report.payload.counts.false_negative == 0);
}

TEST_CASE("perfectly separable families have TPR 1 and FPR 0") {
  // Disjoint pools force distance 1 across families.
  SyntheticSpec spec;
  spec.seed = 11;
  spec.overlap = 0.0;
  spec.noise_ids = 0;
  SyntheticCorpus synth = generate_synthetic(spec);

  Setup s;
  s.registry = std::move(synth.registry);
  s.iat_base.registry_version = s.registry.version();
  for (const CorpusEntry& e : synth.train.entries) {
    (e.truth == Label::malware ? s.iat_base.malware : s.iat_base.benign).push_back(e.iat);
  }
  s.combi_base = combi::CombiBase::build({}, {}, Bitset(s.registry.universe_size()),
                                         s.registry.universe_size(), s.registry.version());
  s.corpus = synth.heldout;

  MetricsReport report = evaluate(s.corpus, Engine::knn, bases_of(s), {});
  CHECK(report.payload.true_positive_rate == 1.0);
  CHECK(report.payload.false_positive_rate == 0.0);
}

TEST_CASE("rates recompute exactly from the confusion counts") {
  Setup s = exact_match_setup();
  MetricsReport report = evaluate(s.corpus, Engine::both, bases_of(s), {});
  const auto& c = report.payload.counts;
  CHECK(c.true_positive + c.false_negative + c.false_positive + c.true_negative ==
        s.corpus.entries.size());
  CHECK(report.payload.true_positive_rate ==
        static_cast<double>(c.true_positive) / static_cast<double>(c.true_positive + c.false_negative));
  CHECK(report.payload.false_positive_rate ==
        static_cast<double>(c.false_positive) / static_cast<double>(c.false_positive + c.true_negative));
}

TEST_CASE("corpus order does not change any metric") {
  Setup s = exact_match_setup();
  MetricsPayload before = evaluate(s.corpus, Engine::both, bases_of(s), {}).payload;

  std::mt19937_64 rng(5);
  LabeledCorpus shuffled = s.corpus;
  for (std::size_t i = shuffled.entries.size(); i > 1; --i) {
    std::swap(shuffled.entries[i - 1], shuffled.entries[testutil::pick(rng, i)]);
  }
  CHECK(evaluate(shuffled, Engine::both, bases_of(s), {}).payload == before);
}

TEST_CASE("empty-IAT entries are labeled malware by the suspicion rule") {
  Setup s = exact_match_setup();
  LabeledCorpus corpus;
  CorpusEntry entry;
  entry.name = "no_iat";
  entry.truth = Label::malware;
  entry.iat.registry_version = s.registry.version();
  corpus.entries.push_back(entry);
  MetricsReport report = evaluate(corpus, Engine::both, bases_of(s), {});
  CHECK(report.payload.counts.true_positive == 1);
}

TEST_CASE("stale corpus entries raise IncompatibleRegistry") {
  Setup s = exact_match_setup();
  LabeledCorpus corpus = s.corpus;
  corpus.entries[0].iat.registry_version += 1;
  try {
    (void)evaluate(corpus, Engine::knn, bases_of(s), {});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::incompatible_registry);
  }
}

TEST_CASE("sweep at fraction 1.0 reproduces evaluate bitwise") {
  Setup s = exact_match_setup();
  MetricsPayload direct = evaluate(s.corpus, Engine::both, bases_of(s), {}).payload;
  auto rows = sweep(s.corpus, Engine::both, bases_of(s), {}, {1.0}, feature::PruneScore::density);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].fraction == 1.0);
  CHECK(rows[0].payload == direct);
  CHECK(rows[0].detection_rate == direct.true_positive_rate);
  CHECK(rows[0].base_bytes > 0);
}

TEST_CASE("sweep orders rows by descending fraction and reports pruned sizes") {
  Setup s = exact_match_setup();
  auto rows = sweep(s.corpus, Engine::knn, bases_of(s), {}, {0.5, 1.0, 0.75}, feature::PruneScore::density);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].fraction == 1.0);
  CHECK(rows[1].fraction == 0.75);
  CHECK(rows[2].fraction == 0.5);
  CHECK(rows[0].base_bytes > rows[1].base_bytes);
  CHECK(rows[1].base_bytes > rows[2].base_bytes);
}

TEST_CASE("sweep rejects out-of-range fractions") {
  Setup s = exact_match_setup();
  CHECK_THROWS_AS((void)sweep(s.corpus, Engine::knn, bases_of(s), {}, {0.0}, feature::PruneScore::ig),
                  Error);
}

TEST_CASE("the synthetic generator is deterministic per seed") {
  SyntheticSpec spec;
  SyntheticCorpus a = generate_synthetic(spec);
  SyntheticCorpus b = generate_synthetic(spec);
  REQUIRE(a.train.entries.size() == b.train.entries.size());
  for (std::size_t i = 0; i < a.train.entries.size(); ++i) {
    CHECK(a.train.entries[i].iat.ids == b.train.entries[i].iat.ids);
  }
  spec.seed = 43;
  SyntheticCorpus c = generate_synthetic(spec);
  bool any_difference = false;
  for (std::size_t i = 0; i < a.train.entries.size(); ++i) {
    if (a.train.entries[i].iat.ids != c.train.entries[i].iat.ids) any_difference = true;
  }
  CHECK(any_difference);
}

TEST_CASE("truth CSV parsing") {
  auto rows = read_truth_csv("path,label\nfixtures/a.exe,malware\nfixtures/b.exe,benign\n");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].first == "fixtures/a.exe");
  CHECK(rows[0].second == Label::malware);
  CHECK(rows[1].second == Label::benign);

  CHECK_THROWS_AS((void)read_truth_csv("nope\n"), Error);
  CHECK_THROWS_AS((void)read_truth_csv("path,label\nf.exe,weird\n"), Error);
  auto with_comma = read_truth_csv("path,label\ndir,with,commas/f.exe,benign\n");
  REQUIRE(with_comma.size() == 1);
  CHECK(with_comma[0].first == "dir,with,commas/f.exe");
}
