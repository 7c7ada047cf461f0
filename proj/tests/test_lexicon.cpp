#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <string>
#include <vector>

#include "lcmt/corpus.hpp"
#include "lcmt/lexicon.hpp"
#include "lcmt/morph.hpp"
#include "test_util.hpp"

using namespace lcmt;
using testutil::TempDir;

namespace {

SentencePair make_pair(std::int64_t id, const std::string& src, const std::string& tgt,
                       const std::vector<std::string>& src_lemmas,
                       const std::vector<std::string>& tgt_lemmas) {
  SentencePair p;
  p.id = id;
  p.source = Sentence::from_line(src);
  p.target = Sentence::from_line(tgt);
  if (!src_lemmas.empty()) p.source_lemmas = src_lemmas;
  if (!tgt_lemmas.empty()) p.target_lemmas = tgt_lemmas;
  return p;
}

TermLexicon lexicon_from_string(const std::string& tsv, LexiconMode mode,
                                const Analyzer& src, const Analyzer& tgt) {
  TempDir dir;
  return build_lexicon(dir.file("lex.tsv", tsv), src, tgt, mode);
}

// the paper's running example with a hand-written lemma layer
SentencePair running_example() {
  return make_pair(
      0, "Price increase is planned mainly in larger municipalities .",
      "Zvýšení cen je plánováno především ve větších obcích .",
      {"price", "increase", "be", "planned", "mainly", "in", "larger",
       "municipalities", "."},
      {"zvýšení", "cena", "být", "plánovat", "především", "v", "velký", "obec", "."});
}

TermLexicon running_lexicon() {
  const Analyzer tgt = Analyzer::lemma_table(
      {{"plánováno", "plánovat"}, {"obcích", "obec"}});
  return lexicon_from_string("planned\tplánováno\nmunicipalities\tobcích\n",
                             LexiconMode::kDictionary, Analyzer::identity(), tgt);
}

}  // namespace

TEST_CASE("lexicon: multi-token entry keys") {
  const auto lex = lexicon_from_string("Term of the Lease\tDoba podnájmu\n",
                                       LexiconMode::kTerminology, Analyzer::identity(),
                                       Analyzer::identity());
  REQUIRE(lex.entries().size() == 1);
  REQUIRE(lex.entries()[0].source_key ==
          std::vector<std::string>{"term", "of", "the", "lease"});
  REQUIRE(lex.entries()[0].target_key == std::vector<std::string>{"doba", "podnájmu"});
}

TEST_CASE("lexicon: empty sides are rejected with the line number") {
  TempDir dir;
  const auto path = dir.file("lex.tsv", "good\tdobrý\nbad\t\n");
  try {
    build_lexicon(path, Analyzer::identity(), Analyzer::identity(),
                  LexiconMode::kDictionary);
    FAIL("expected EmptyEntry");
  } catch (const EmptyEntry& e) {
    REQUIRE(e.line_no == 2);
  }
}

TEST_CASE("lexicon: duplicate lines become separate entries") {
  const auto lex = lexicon_from_string("dog\tpes\ndog\tpes\n", LexiconMode::kDictionary,
                                       Analyzer::identity(), Analyzer::identity());
  REQUIRE(lex.entries().size() == 2);
  REQUIRE(lex.variants_of({"dog"}).size() == 2);
}

TEST_CASE("lexicon: trivial entries are dropped and counted") {
  const auto lex = lexicon_from_string(
      "the\tthe\n"     // copy pair
      "in\tv\n"        // both single tokens of <= 2 characters
      "in\tuvnitř\n"   // kept: target is long enough
      "# a comment\n"
      "dog\tpes\n",
      LexiconMode::kDictionary, Analyzer::identity(), Analyzer::identity());
  REQUIRE(lex.entries().size() == 2);
  REQUIRE(lex.dropped_trivial() == 2);
}

TEST_CASE("lexicon: running example matches on both sides") {
  const auto lex = running_lexicon();
  const auto pair = running_example();
  const auto matches = find_matches(lex, pair, /*require_target=*/true);
  REQUIRE(matches.size() == 2);
  REQUIRE(matches[0].source_span == Span{3, 4});
  REQUIRE(matches[0].target_span == Span{3, 4});
  REQUIRE(matches[1].source_span == Span{7, 8});
  REQUIRE(matches[1].target_span == Span{7, 8});
}

TEST_CASE("lexicon: empty lexicon yields no matches") {
  const auto lex = lexicon_from_string("", LexiconMode::kDictionary, Analyzer::identity(),
                                       Analyzer::identity());
  REQUIRE(find_matches(lex, running_example(), false).empty());
}

TEST_CASE("lexicon: missing lemma layers are reported") {
  const auto lex = running_lexicon();
  auto pair = running_example();
  pair.source_lemmas.reset();
  REQUIRE_THROWS_AS(find_matches(lex, pair, false), MissingLemmaLayer);
  auto pair2 = running_example();
  pair2.target_lemmas.reset();
  REQUIRE_THROWS_AS(find_matches(lex, pair2, true), MissingLemmaLayer);
  REQUIRE_NOTHROW(find_matches(lex, pair2, false));
}

TEST_CASE("lexicon: greedy longest-leftmost matches a brute-force derivation") {
  // toy sentence and nested keys; expected result derived by enumerating all
  // subsequence matches and applying the longest-then-leftmost rule by hand
  const auto lex = lexicon_from_string("a b\txx\nb c\tyy\na\tzz\n",
                                       LexiconMode::kDictionary, Analyzer::identity(),
                                       Analyzer::identity());
  const auto pair =
      make_pair(0, "a b c a d e", "t", {"a", "b", "c", "a", "d", "e"}, {"t"});
  const auto matches = find_matches(lex, pair, false);

  // brute force: all (entry, start) occurrences
  struct Occ {
    std::int32_t entry;
    std::int32_t start, len;
  };
  std::vector<Occ> all;
  const auto& lemmas = *pair.source_lemmas;
  for (const auto& e : lex.entries())
    for (std::size_t i = 0; i + e.source_key.size() <= lemmas.size(); ++i) {
      bool ok = true;
      for (std::size_t j = 0; j < e.source_key.size(); ++j)
        if (lemmas[i + j] != e.source_key[j]) ok = false;
      if (ok)
        all.push_back(Occ{e.entry_id, static_cast<std::int32_t>(i),
                          static_cast<std::int32_t>(e.source_key.size())});
    }
  // greedy: scan left to right, take the longest occurrence at each position
  std::vector<Occ> expected;
  std::int32_t pos = 0;
  while (pos < static_cast<std::int32_t>(lemmas.size())) {
    const Occ* best = nullptr;
    for (const auto& o : all)
      if (o.start == pos && (!best || o.len > best->len)) best = &o;
    if (best) {
      expected.push_back(*best);
      pos += best->len;
    } else {
      ++pos;
    }
  }
  REQUIRE(matches.size() == expected.size());
  for (std::size_t i = 0; i < matches.size(); ++i) {
    REQUIRE(matches[i].source_span.begin == expected[i].start);
    REQUIRE(matches[i].source_span.size() == expected[i].len);
  }
}

TEST_CASE("lexicon: source spans are sorted and non-overlapping") {
  const auto lex = lexicon_from_string("a b\txx\nb\tyy\nc d e\tzz\n",
                                       LexiconMode::kDictionary, Analyzer::identity(),
                                       Analyzer::identity());
  const auto pair = make_pair(0, "a b c d e b a b", "t",
                              {"a", "b", "c", "d", "e", "b", "a", "b"}, {"t"});
  const auto matches = find_matches(lex, pair, false);
  for (std::size_t i = 1; i < matches.size(); ++i) {
    REQUIRE(matches[i - 1].source_span.begin <= matches[i].source_span.begin);
    if (matches[i - 1].source_span != matches[i].source_span)
      REQUIRE(matches[i - 1].source_span.end <= matches[i].source_span.begin);
  }
}

TEST_CASE("lexicon: require_target results are a subset of unfiltered results") {
  std::mt19937 gen(7);
  const std::vector<std::string> vocab{"a", "b", "c", "d"};
  const auto lex = lexicon_from_string("a b\txx yy\nb\tyy\nc\tzz\nd a\tww\n",
                                       LexiconMode::kDictionary, Analyzer::identity(),
                                       Analyzer::identity());
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> src, tgt;
    const auto srclen = 3 + gen() % 6, tgtlen = 2 + gen() % 5;
    for (std::size_t i = 0; i < srclen; ++i) src.push_back(vocab[gen() % vocab.size()]);
    const std::vector<std::string> tvocab{"xx", "yy", "zz", "ww", "qq"};
    for (std::size_t i = 0; i < tgtlen; ++i) tgt.push_back(tvocab[gen() % tvocab.size()]);
    const auto pair = make_pair(trial, lcmt::join(src), lcmt::join(tgt), src, tgt);
    const auto with = find_matches(lex, pair, true);
    const auto without = find_matches(lex, pair, false);
    for (const auto& m : with) {
      bool found = false;
      for (const auto& u : without)
        if (u.entry_id == m.entry_id && u.source_span == m.source_span) found = true;
      REQUIRE(found);
    }
  }
}

TEST_CASE("lexicon: matching is invariant under target surface inflection") {
  // two different surfaces with the same lemma; swapping them in the target
  // leaves the matches unchanged
  const Analyzer tgt_analyzer = Analyzer::lemma_table(
      {{"radikální", "radikální"}, {"radikálnější", "radikální"}});
  const auto lex =
      lexicon_from_string("radical\tradikální\n", LexiconMode::kDictionary,
                          Analyzer::identity(), tgt_analyzer);
  const auto base = make_pair(0, "a radical idea", "to je radikální",
                              {"a", "radical", "idea"},
                              {"to", "být", "radikální"});
  const auto inflected = make_pair(0, "a radical idea", "to je radikálnější",
                                   {"a", "radical", "idea"},
                                   {"to", "být", "radikální"});
  const auto m1 = find_matches(lex, base, true);
  const auto m2 = find_matches(lex, inflected, true);
  REQUIRE(m1.size() == 1);
  REQUIRE(m2.size() == 1);
  REQUIRE(m1[0].entry_id == m2[0].entry_id);
  REQUIRE(m1[0].source_span == m2[0].source_span);
  REQUIRE(m1[0].target_span == m2[0].target_span);
}

TEST_CASE("lexicon: term frequencies match a quadratic scan oracle") {
  const auto lex = lexicon_from_string("a\tA\na b\tAB\nb\tB\nc c\tCC\n",
                                       LexiconMode::kDictionary, Analyzer::identity(),
                                       Analyzer::identity());
  std::mt19937 gen(13);
  Corpus corpus;
  const std::vector<std::string> vocab{"a", "b", "c", "d"};
  for (int i = 0; i < 100; ++i) {
    std::vector<std::string> toks;
    const std::size_t len = 1 + gen() % 12;
    for (std::size_t j = 0; j < len; ++j) toks.push_back(vocab[gen() % vocab.size()]);
    corpus.pairs.push_back(make_pair(i, lcmt::join(toks), "t", toks, {"t"}));
  }
  const auto freqs = term_frequencies(lex, corpus);

  for (const auto& e : lex.entries()) {
    std::int64_t expected = 0;
    for (const auto& p : corpus.pairs) {
      const auto& lemmas = *p.source_lemmas;
      for (std::size_t i = 0; i + e.source_key.size() <= lemmas.size(); ++i) {
        bool ok = true;
        for (std::size_t j = 0; j < e.source_key.size(); ++j)
          if (lemmas[i + j] != e.source_key[j]) ok = false;
        if (ok) ++expected;
      }
    }
    const auto it = freqs.find(e.entry_id);
    REQUIRE((it == freqs.end() ? 0 : it->second) == expected);
  }
}

TEST_CASE("lexicon: absent entries count zero and per-sentence hits accumulate") {
  const auto lex = lexicon_from_string("x y\tXY\nzz\tZZ\n", LexiconMode::kDictionary,
                                       Analyzer::identity(), Analyzer::identity());
  Corpus corpus;
  for (int i = 0; i < 3; ++i)
    corpus.pairs.push_back(make_pair(i, "x y q", "t", {"x", "y", "q"}, {"t"}));
  const auto freqs = term_frequencies(lex, corpus);
  REQUIRE(freqs.at(0) == 3);
  REQUIRE(freqs.count(1) == 0);  // never seen
}
