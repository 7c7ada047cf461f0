#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "lcmt/eval.hpp"

using namespace lcmt;

namespace {

TestCase make_case(std::int64_t id, const std::string& source, const std::string& reference,
                   std::vector<Constraint> constraints) {
  TestCase tc;
  tc.pair_id = id;
  tc.source_line = source;
  tc.reference_line = reference;
  tc.constraints = std::move(constraints);
  return tc;
}

Constraint surface_constraint(std::vector<std::string> surface,
                              std::vector<std::string> lemma = {}) {
  Constraint c;
  c.surface_tokens = surface;
  c.lemma_tokens = lemma.empty() ? surface : lemma;
  c.emit_form = EmitForm::kSurface;
  return c;
}

}  // namespace

TEST_CASE("eval: 13a tokenization") {
  REQUIRE(tokenize_13a("Hello, world!") == "Hello , world !");
  REQUIRE(tokenize_13a("1.5 million") == "1.5 million");
  REQUIRE(tokenize_13a("the end.") == "the end .");
  REQUIRE(tokenize_13a("A.B") == "A . B");
  REQUIRE(tokenize_13a("well-known") == "well-known");
  REQUIRE(tokenize_13a("2019-2020") == "2019 - 2020");
  REQUIRE(tokenize_13a("&quot;x&quot; &amp; y") == "\" x \" & y");
  REQUIRE(tokenize_13a("(bracket)") == "( bracket )");
  REQUIRE(tokenize_13a("  spaces   collapse  ") == "spaces collapse");
  REQUIRE(tokenize_13a("Zvýšení cen, obcích.") == "Zvýšení cen , obcích .");
}

TEST_CASE("eval: bleu is 100 on identical corpora") {
  const std::vector<std::string> text{"this is a sentence .", "another one here today",
                                      "Zvýšení cen je plánováno především ve větších obcích ."};
  REQUIRE(bleu(text, text) == Catch::Approx(100.0).margin(1e-9));
}

TEST_CASE("eval: bleu matches a hand computation on a single pair") {
  // hyp "a b c d" vs ref "a b c e": clipped matches 3/4, 2/3, 1/2, 0/1;
  // the zero 4-gram match is smoothed to 100/(2*1)
  const double expected =
      std::exp((std::log(75.0) + std::log(200.0 / 3.0) + std::log(50.0) + std::log(50.0)) / 4.0);
  REQUIRE(bleu({"a b c d"}, {"a b c e"}) == Catch::Approx(expected).margin(1e-4));
}

TEST_CASE("eval: bleu brevity penalty and effective order") {
  // hyp shorter than ref, all matches perfect: bp = exp(1 - 4/3), effective
  // order 3 since the hypothesis has no 4-grams
  const double expected = std::exp(1.0 - 4.0 / 3.0) * 100.0;
  REQUIRE(bleu({"a b c"}, {"a b c d"}) == Catch::Approx(expected).margin(1e-4));
}

TEST_CASE("eval: empty hypothesis scores zero") {
  REQUIRE(bleu({""}, {"a b c"}) == 0.0);
}

TEST_CASE("eval: bleu length mismatch") {
  REQUIRE_THROWS_AS(bleu({"a", "b"}, {"a"}), LengthMismatch);
  REQUIRE_THROWS_AS(bleu({}, {}), LengthMismatch);
}

TEST_CASE("eval: coverage on the running example") {
  TestSet ts;
  ts.cases.push_back(make_case(
      0, "Price increase is planned mainly in larger municipalities .",
      "Zvýšení cen je plánováno především ve větších obcích .",
      {surface_constraint({"plánováno"}, {"plánovat"}),
       surface_constraint({"obcích"}, {"obec"})}));
  const Analyzer analyzer =
      Analyzer::lemma_table({{"plánováno", "plánovat"}, {"obcích", "obec"}});
  const auto res = coverage({"Zvýšení cen je plánováno především ve větších obcích ."},
                            ts, analyzer);
  REQUIRE(res.cvg == 1.0);
  REQUIRE(res.cvg_l == 1.0);
  REQUIRE_FALSE(res.vacuous);
}

TEST_CASE("eval: surface miss with lemma hit (inflected output)") {
  TestSet ts;
  ts.cases.push_back(make_case(0, "a radical idea", "je to radikální",
                               {surface_constraint({"radikální"}, {"radikální"})}));
  const Analyzer analyzer = Analyzer::lemma_table({{"radikálnější", "radikální"}});
  const auto res = coverage({"je to radikálnější"}, ts, analyzer);
  REQUIRE(res.cvg == 0.0);
  REQUIRE(res.cvg_l == 1.0);
  REQUIRE(res.per_case[0].satisfied_surface == std::vector<bool>{false});
  REQUIRE(res.per_case[0].satisfied_lemma == std::vector<bool>{true});

  SECTION("misses are bucketed as FORM_MISMATCH") {
    auto [buckets, queue] = bucket_misses(ts, {"je to radikálnější"}, res.per_case);
    REQUIRE(buckets.form_mismatch == 1);
    REQUIRE(buckets.missing == 0);
    REQUIRE(queue.size() == 1);
    REQUIRE(queue[0].bucket == "FORM_MISMATCH");
  }
}

TEST_CASE("eval: constraints absent at lemma level are MISSING") {
  TestSet ts;
  ts.cases.push_back(make_case(0, "src", "chybí slovo",
                               {surface_constraint({"chybí"}), surface_constraint({"slovo"})}));
  const auto res = coverage({"něco jiného"}, ts, Analyzer::identity());
  REQUIRE(res.cvg == 0.0);
  auto [buckets, queue] = bucket_misses(ts, {"něco jiného"}, res.per_case);
  REQUIRE(buckets.missing == 2);
  REQUIRE(buckets.form_mismatch == 0);
  REQUIRE(buckets.missing + buckets.form_mismatch == 2);  // exactly the surface misses
}

TEST_CASE("eval: emitted-form coverage is reported alongside reference coverage") {
  // canonical-form test sets: the emitted string ("návrh") differs from the
  // reference realization ("návrhu"); both coverages are computed
  TestSet ts;
  Constraint c;
  c.surface_tokens = {"návrhu"};
  c.lemma_tokens = {"návrh"};
  c.canonical_tokens = std::vector<std::string>{"návrh"};
  c.emit_form = EmitForm::kCanonical;
  ts.cases.push_back(make_case(0, "the proposal", "oslabit návrhu komise", {c}));
  const Analyzer analyzer = Analyzer::lemma_table({{"návrhu", "návrh"}});

  // output keeps the canonical form verbatim (constrained-decoding behavior)
  const auto forced = coverage({"oslabit návrh komise"}, ts, analyzer);
  REQUIRE(forced.cvg == 0.0);          // reference surface form missed
  REQUIRE(forced.cvg_emitted == 1.0);  // emitted string present
  REQUIRE(forced.cvg_l == 1.0);

  // output inflects correctly to the reference form
  const auto inflected = coverage({"oslabit návrhu komise"}, ts, analyzer);
  REQUIRE(inflected.cvg == 1.0);
  REQUIRE(inflected.cvg_emitted == 0.0);
}

TEST_CASE("eval: zero constraints are vacuously covered and flagged") {
  TestSet ts;
  ts.cases.push_back(make_case(0, "s", "r", {}));
  const auto res = coverage({"anything"}, ts, Analyzer::identity());
  REQUIRE(res.cvg == 1.0);
  REQUIRE(res.cvg_l == 1.0);
  REQUIRE(res.vacuous);
}

TEST_CASE("eval: repeated constraints need distinct occurrences") {
  TestSet ts;
  ts.cases.push_back(make_case(0, "s", "pes honí pes",
                               {surface_constraint({"pes"}), surface_constraint({"pes"})}));
  const Analyzer id = Analyzer::identity();

  const auto once = coverage({"pes běží"}, ts, id);
  REQUIRE(once.sat_surface == 1);  // one occurrence cannot satisfy two copies
  const auto twice = coverage({"pes honí pes"}, ts, id);
  REQUIRE(twice.sat_surface == 2);
  const auto overlapping = coverage({"pes pes"}, ts, id);
  REQUIRE(overlapping.sat_surface == 2);
}

TEST_CASE("eval: multi-token constraint occurrences do not overlap") {
  TestSet ts;
  ts.cases.push_back(make_case(0, "s", "a b a b a",
                               {surface_constraint({"a", "b", "a"}),
                                surface_constraint({"a", "b", "a"})}));
  const auto res = coverage({"a b a b a"}, ts, Analyzer::identity());
  // greedy disjoint count of "a b a" in "a b a b a" is 1
  REQUIRE(res.sat_surface == 1);
}

TEST_CASE("eval: cvg <= cvg_l over randomized corpora with a functional table") {
  std::mt19937 gen(42);
  const std::vector<std::string> surfaces{"aa", "ab", "ba", "bb", "cc", "cd"};
  // functional lemma table: surface -> one lemma
  std::unordered_map<std::string, std::string> table;
  for (const auto& s : surfaces) table[s] = std::string(1, s[0]);  // aa->a, ba->b, ...
  const Analyzer analyzer = Analyzer::lemma_table(table);

  for (int trial = 0; trial < 300; ++trial) {
    TestSet ts;
    std::vector<std::string> hyps;
    const std::size_t cases = 1 + gen() % 4;
    for (std::size_t ci = 0; ci < cases; ++ci) {
      std::vector<std::string> ref_toks, hyp_toks;
      const std::size_t rlen = 2 + gen() % 8, hlen = 1 + gen() % 8;
      for (std::size_t i = 0; i < rlen; ++i) ref_toks.push_back(surfaces[gen() % surfaces.size()]);
      for (std::size_t i = 0; i < hlen; ++i) hyp_toks.push_back(surfaces[gen() % surfaces.size()]);
      std::vector<Constraint> constraints;
      const std::size_t nc = gen() % 3;
      for (std::size_t k = 0; k < nc; ++k) {
        const std::size_t start = gen() % rlen;
        const std::size_t len = 1 + gen() % std::min<std::size_t>(2, rlen - start);
        std::vector<std::string> surf(ref_toks.begin() + static_cast<std::ptrdiff_t>(start),
                                      ref_toks.begin() + static_cast<std::ptrdiff_t>(start + len));
        Constraint c;
        c.surface_tokens = surf;
        c.lemma_tokens = analyzer.normalize_sequence(surf);
        c.emit_form = EmitForm::kSurface;
        constraints.push_back(std::move(c));
      }
      ts.cases.push_back(make_case(static_cast<std::int64_t>(ci), "src", join(ref_toks),
                                   std::move(constraints)));
      hyps.push_back(join(hyp_toks));
    }
    const auto res = coverage(hyps, ts, analyzer);
    REQUIRE(res.cvg <= res.cvg_l + 1e-12);
    // per-constraint hierarchy: every surface hit is a lemma hit
    for (const auto& cr : res.per_case)
      for (std::size_t i = 0; i < cr.satisfied_surface.size(); ++i)
        if (cr.satisfied_surface[i]) REQUIRE(cr.satisfied_lemma[i]);
  }
}

TEST_CASE("eval: coverage is invariant under permuting cases with hypotheses") {
  TestSet ts;
  ts.cases.push_back(make_case(0, "s", "a b c", {surface_constraint({"b"})}));
  ts.cases.push_back(make_case(1, "s", "d e f", {surface_constraint({"d"}),
                                                 surface_constraint({"f"})}));
  const std::vector<std::string> hyps{"x b y", "d q f"};
  const auto res = coverage(hyps, ts, Analyzer::identity());

  TestSet permuted;
  permuted.cases = {ts.cases[1], ts.cases[0]};
  const std::vector<std::string> hyps_p{hyps[1], hyps[0]};
  const auto res_p = coverage(hyps_p, permuted, Analyzer::identity());
  REQUIRE(res.cvg == res_p.cvg);
  REQUIRE(res.cvg_l == res_p.cvg_l);
}

TEST_CASE("eval: placement correlation") {
  SECTION("identical positions give exactly 1") {
    std::vector<CaseResult> pc(1);
    pc[0].hyp_start_chars = {0, 10, 25};
    pc[0].ref_start_chars = {0, 10, 25};
    REQUIRE(placement_rho(pc).value() == Catch::Approx(1.0).margin(1e-12));
  }
  SECTION("hand-computed value for swapped points") {
    std::vector<CaseResult> pc(1);
    pc[0].hyp_start_chars = {0, 10, 20};
    pc[0].ref_start_chars = {0, 20, 10};
    REQUIRE(placement_rho(pc).value() == Catch::Approx(0.5).margin(1e-12));
  }
  SECTION("fewer than two pairs is undefined") {
    std::vector<CaseResult> pc(1);
    pc[0].hyp_start_chars = {5};
    pc[0].ref_start_chars = {5};
    REQUIRE_FALSE(placement_rho(pc).has_value());
    REQUIRE_FALSE(placement_rho({}).has_value());
  }
  SECTION("zero variance is undefined, not zero") {
    std::vector<CaseResult> pc(1);
    pc[0].hyp_start_chars = {3, 3, 3};
    pc[0].ref_start_chars = {0, 5, 9};
    REQUIRE_FALSE(placement_rho(pc).has_value());
  }
  SECTION("shift invariance") {
    std::vector<CaseResult> a(1), b(1);
    a[0].hyp_start_chars = {0, 7, 19};
    a[0].ref_start_chars = {2, 9, 14};
    b[0].hyp_start_chars = {100, 107, 119};
    b[0].ref_start_chars = {2, 9, 14};
    REQUIRE(placement_rho(a).value() == Catch::Approx(placement_rho(b).value()).margin(1e-12));
  }
}

TEST_CASE("eval: coverage produces placement pairs from real offsets") {
  TestSet ts;
  ts.cases.push_back(make_case(0, "s", "aa bb cc",
                               {surface_constraint({"bb"}), surface_constraint({"cc"})}));
  const auto res = coverage({"bb xx cc"}, ts, Analyzer::identity());
  REQUIRE(res.per_case[0].hyp_start_chars == std::vector<std::int64_t>{0, 6});
  REQUIRE(res.per_case[0].ref_start_chars == std::vector<std::int64_t>{3, 6});
}

TEST_CASE("eval: shuffle check keeps aligned rho at 1 and reports both values") {
  TestSet ts;
  std::vector<std::string> hyps;
  std::mt19937 gen(5);
  for (int i = 0; i < 20; ++i) {
    std::vector<std::string> toks;
    for (int j = 0; j < 12; ++j)
      toks.push_back("w" + std::to_string(i) + "_" + std::to_string(j));
    const std::size_t cpos = 1 + gen() % 9;
    Constraint c;
    c.surface_tokens = {toks[cpos], toks[cpos + 1]};
    c.lemma_tokens = c.surface_tokens;
    c.emit_form = EmitForm::kSurface;
    ts.cases.push_back(make_case(i, "s", join(toks), {c}));
    hyps.push_back(join(toks));
  }
  const auto check = shuffle_check(hyps, ts, Analyzer::identity(), 17);
  REQUIRE(check.rho_original.value() == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(check.rho_shuffled.has_value());
  REQUIRE(*check.rho_shuffled < 1.0);

  SECTION("no satisfied constraints leaves both undefined") {
    std::vector<std::string> misses(hyps.size(), "nothing here");
    const auto none = shuffle_check(misses, ts, Analyzer::identity(), 17);
    REQUIRE_FALSE(none.rho_original.has_value());
    REQUIRE_FALSE(none.rho_shuffled.has_value());
  }
}

TEST_CASE("eval: evaluate produces a full report") {
  TestSet ts;
  ts.cases.push_back(make_case(0, "src one", "a b c d", {surface_constraint({"b"})}));
  ts.cases.push_back(make_case(1, "src two", "e f g h", {surface_constraint({"g"})}));
  const std::vector<std::string> hyps{"a b c d", "e f g h"};
  const auto rep = evaluate(hyps, ts, Analyzer::identity());
  REQUIRE(rep.bleu == Catch::Approx(100.0).margin(1e-9));
  REQUIRE(rep.cov.cvg == 1.0);
  REQUIRE(rep.review_queue.empty());
  const auto j = report_to_json(rep);
  REQUIRE(j["bleu"].get<double>() == Catch::Approx(100.0).margin(1e-9));
  REQUIRE(j["per_case"].size() == 2);

  SECTION("hypothesis count must match the test set") {
    REQUIRE_THROWS_AS(evaluate({"one"}, ts, Analyzer::identity()), LengthMismatch);
  }
}
