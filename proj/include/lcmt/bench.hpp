#pragma once

#include <algorithm>
#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "lcmt/corpus.hpp"
#include "lcmt/errors.hpp"
#include "lcmt/lexicon.hpp"
#include "lcmt/rng.hpp"
#include "lcmt/synth.hpp"
#include "lcmt/version.hpp"

namespace lcmt {

// Evaluation set builders: oracle constraints, terminology sets with
// same/diff splits, and rare-word sets with translation-choice policies.
// Seed + inputs fully determine a TestSet; re-runs are byte-identical.

enum class SplitTag { kSame, kDiff };
enum class Policy { kReference, kRandom, kNone };

inline const char* split_tag_name(SplitTag t) {
  return t == SplitTag::kSame ? "same" : "diff";
}

inline const char* policy_name(Policy p) {
  switch (p) {
    case Policy::kReference: return "reference";
    case Policy::kRandom: return "random";
    case Policy::kNone: return "none";
  }
  return "none";
}

struct TestCase {
  std::int64_t pair_id = -1;
  std::string source_line, reference_line;  // canonical single-space joined
  std::vector<Constraint> constraints;
  std::optional<SplitTag> split_tag;
  std::optional<Policy> chosen_policy;
};

struct TestSetManifest {
  std::string kind;  // oracle | terminology | rare
  nlohmann::json params = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::string lexicon_provenance;
  std::size_t trivial_terms_dropped = 0;
};

struct TestSet {
  std::vector<TestCase> cases;
  TestSetManifest manifest;
};

// One case per pair with at least one bilingual dictionary hit; constraints
// carry the reference surface form, the lemma form, and the entry's literal
// target side as canonical. Default emission: surface.
inline TestSet build_oracle(const Corpus& corpus, const TermLexicon& lexicon) {
  TestSet ts;
  ts.manifest.kind = "oracle";
  ts.manifest.lexicon_provenance = lexicon.provenance();
  ts.manifest.trivial_terms_dropped = lexicon.dropped_trivial();
  for (const auto& pair : corpus.pairs) {
    auto matches = find_matches(lexicon, pair, /*require_target=*/true);
    auto constraints = detail::constraints_from_matches(pair, lexicon, matches);
    if (constraints.empty()) continue;
    TestCase tc;
    tc.pair_id = pair.id;
    tc.source_line = pair.source.joined();
    tc.reference_line = pair.target.joined();
    for (auto& c : constraints) c.emit_form = EmitForm::kSurface;
    tc.constraints = std::move(constraints);
    ts.cases.push_back(std::move(tc));
  }
  return ts;
}

// Sequential scan in corpus order. A pair is admitted when it contains at
// least one matched term whose admission counter is still below the cap;
// only constraints of unsaturated terms are attached and counted, so the
// per-term recount is exactly <= cap_per_term. Split tags: a constraint is
// `same` when its reference surface form equals the canonical termbase form
// token-wise; the case tag is diff if any constraint is diff. Default
// emission: canonical.
inline TestSet build_terminology(const Corpus& corpus, const TermLexicon& termbase,
                                 int cap_per_term = 10) {
  if (termbase.mode() != LexiconMode::kTerminology)
    throw ConfigError("build_terminology requires a lexicon in terminology mode");
  TestSet ts;
  ts.manifest.kind = "terminology";
  ts.manifest.params["cap_per_term"] = cap_per_term;
  ts.manifest.lexicon_provenance = termbase.provenance();
  ts.manifest.trivial_terms_dropped = termbase.dropped_trivial();
  std::unordered_map<std::int32_t, int> admitted;
  for (const auto& pair : corpus.pairs) {
    auto matches = find_matches(termbase, pair, /*require_target=*/true);
    auto constraints = detail::constraints_from_matches(pair, termbase, matches);
    if (constraints.empty()) continue;
    std::vector<Constraint> kept;
    for (auto& c : constraints)
      if (admitted[c.entry_id] < cap_per_term) kept.push_back(std::move(c));
    if (kept.empty()) continue;
    TestCase tc;
    tc.pair_id = pair.id;
    tc.source_line = pair.source.joined();
    tc.reference_line = pair.target.joined();
    bool any_diff = false;
    for (auto& c : kept) {
      ++admitted[c.entry_id];
      c.emit_form = EmitForm::kCanonical;
      if (c.surface_tokens != *c.canonical_tokens) any_diff = true;
    }
    tc.split_tag = any_diff ? SplitTag::kDiff : SplitTag::kSame;
    tc.constraints = std::move(kept);
    ts.cases.push_back(std::move(tc));
  }
  return ts;
}

// Rare-word test set: the lexicon is restricted to entries whose source term
// occurs at most max_freq times in the training corpus (freqs from
// term_frequencies over that corpus); eval pairs containing a full rare term
// pair become cases. policy=reference keeps the variant realized in the
// reference; policy=random draws uniformly over all rare variants of the
// matched source term (one draw per constraint, in source span order);
// policy=none emits the cases without constraints. Constraints default to
// lemma emission.
inline TestSet build_rare(const std::unordered_map<std::int32_t, std::int64_t>& corpus_freqs,
                          const TermLexicon& lexicon, const Corpus& eval_corpus,
                          std::int64_t max_freq, Policy policy, std::uint64_t seed) {
  std::vector<std::int32_t> rare_ids;
  for (const auto& e : lexicon.entries()) {
    auto it = corpus_freqs.find(e.entry_id);
    const std::int64_t freq = it == corpus_freqs.end() ? 0 : it->second;
    if (freq <= max_freq) rare_ids.push_back(e.entry_id);
  }
  TermLexicon rare = lexicon.restricted(rare_ids);

  TestSet ts;
  ts.manifest.kind = "rare";
  ts.manifest.params["max_freq"] = max_freq;
  ts.manifest.params["policy"] = policy_name(policy);
  ts.manifest.params["rare_entries"] = rare_ids.size();
  ts.manifest.seed = seed;
  ts.manifest.lexicon_provenance = lexicon.provenance();
  ts.manifest.trivial_terms_dropped = lexicon.dropped_trivial();

  for (const auto& pair : eval_corpus.pairs) {
    auto matches = find_matches(rare, pair, /*require_target=*/true);
    auto constraints = detail::constraints_from_matches(pair, rare, matches);
    if (constraints.empty()) continue;
    TestCase tc;
    tc.pair_id = pair.id;
    tc.source_line = pair.source.joined();
    tc.reference_line = pair.target.joined();
    tc.chosen_policy = policy;
    CounterRng rng(seed, static_cast<std::uint64_t>(pair.id));
    for (auto& c : constraints) {
      c.emit_form = EmitForm::kLemma;
      c.origin = Origin::kDictionary;
      if (policy == Policy::kReference) {
        // constraints_from_matches already picked the lowest-id variant whose
        // target occurs in the reference
        if (!find_subsequence(*pair.target_lemmas, c.lemma_tokens))
          throw NoReferenceVariant(pair.id, join(lexicon.entry(c.entry_id).source_tokens));
        tc.constraints.push_back(std::move(c));
      } else if (policy == Policy::kRandom) {
        auto variants = rare.variants_of(rare.entry(c.entry_id).source_key);
        const auto pick = variants[static_cast<std::size_t>(rng.bounded(variants.size()))];
        const auto& v = rare.entry(pick);
        Constraint rc;
        rc.origin = Origin::kDictionary;
        rc.entry_id = pick;
        rc.emit_form = EmitForm::kLemma;
        rc.source_span = c.source_span;
        rc.lemma_tokens = v.target_key;
        rc.canonical_tokens = v.target_tokens;
        if (auto tspan = find_subsequence(*pair.target_lemmas, v.target_key)) {
          rc.target_span = *tspan;
          for (std::int32_t k = tspan->begin; k < tspan->end; ++k)
            rc.surface_tokens.push_back(
                pair.target.tokens[static_cast<std::size_t>(k)].surface);
        } else {
          rc.surface_tokens = v.target_tokens;  // no reference realization
        }
        tc.constraints.push_back(std::move(rc));
      }
      // policy none: case kept, constraint dropped
    }
    ts.cases.push_back(std::move(tc));
  }
  return ts;
}

// Blacklist consumable by exclude(): normalized reference lines.
inline std::set<std::string> emit_exclusion(const TestSet& ts) {
  std::set<std::string> out;
  for (const auto& tc : ts.cases) out.insert(normalize_line(tc.reference_line));
  return out;
}

// ---- serialization ----

inline nlohmann::json constraint_to_json(const Constraint& c) {
  nlohmann::json j;
  j["surface"] = c.surface_tokens;
  j["lemma"] = c.lemma_tokens;
  if (c.canonical_tokens)
    j["canonical"] = *c.canonical_tokens;
  else
    j["canonical"] = nullptr;
  j["form"] = emit_form_name(c.emit_form);
  if (c.source_span) j["src_span"] = {c.source_span->begin, c.source_span->end};
  if (c.target_span) j["tgt_span"] = {c.target_span->begin, c.target_span->end};
  j["origin"] = origin_name(c.origin);
  if (c.entry_id >= 0) j["entry"] = c.entry_id;
  return j;
}

inline Constraint constraint_from_json(const nlohmann::json& j) {
  Constraint c;
  c.surface_tokens = j.value("surface", std::vector<std::string>{});
  c.lemma_tokens = j.value("lemma", std::vector<std::string>{});
  if (j.contains("canonical") && !j["canonical"].is_null())
    c.canonical_tokens = j["canonical"].get<std::vector<std::string>>();
  const std::string form = j.value("form", "surface");
  c.emit_form = form == "lemma"       ? EmitForm::kLemma
                : form == "canonical" ? EmitForm::kCanonical
                                      : EmitForm::kSurface;
  if (j.contains("src_span"))
    c.source_span =
        Span{j["src_span"][0].get<std::int32_t>(), j["src_span"][1].get<std::int32_t>()};
  if (j.contains("tgt_span"))
    c.target_span =
        Span{j["tgt_span"][0].get<std::int32_t>(), j["tgt_span"][1].get<std::int32_t>()};
  const std::string origin = j.value("origin", "external");
  c.origin = origin == "random"        ? Origin::kRandom
             : origin == "dictionary"  ? Origin::kDictionary
             : origin == "terminology" ? Origin::kTerminology
                                       : Origin::kExternal;
  c.entry_id = j.value("entry", -1);
  return c;
}

inline nlohmann::json test_case_to_json(const TestCase& tc) {
  nlohmann::json j;
  j["id"] = tc.pair_id;
  j["source"] = tc.source_line;
  j["reference"] = tc.reference_line;
  if (tc.split_tag)
    j["split"] = split_tag_name(*tc.split_tag);
  else
    j["split"] = nullptr;
  if (tc.chosen_policy)
    j["policy"] = policy_name(*tc.chosen_policy);
  else
    j["policy"] = nullptr;
  auto arr = nlohmann::json::array();
  for (const auto& c : tc.constraints) arr.push_back(constraint_to_json(c));
  j["constraints"] = std::move(arr);
  return j;
}

inline TestCase test_case_from_json(const nlohmann::json& j) {
  TestCase tc;
  tc.pair_id = j.at("id").get<std::int64_t>();
  tc.source_line = j.at("source").get<std::string>();
  tc.reference_line = j.at("reference").get<std::string>();
  if (j.contains("split") && !j["split"].is_null())
    tc.split_tag = j["split"] == "same" ? SplitTag::kSame : SplitTag::kDiff;
  if (j.contains("policy") && !j["policy"].is_null()) {
    const std::string p = j["policy"];
    tc.chosen_policy = p == "reference" ? Policy::kReference
                       : p == "random"  ? Policy::kRandom
                                        : Policy::kNone;
  }
  for (const auto& cj : j.at("constraints"))
    tc.constraints.push_back(constraint_from_json(cj));
  return tc;
}

inline nlohmann::json manifest_to_json(const TestSetManifest& m) {
  nlohmann::json j;
  j["kind"] = m.kind;
  j["params"] = m.params;
  j["seed"] = m.seed;
  j["lexicon"] = m.lexicon_provenance;
  j["trivial_terms_dropped"] = m.trivial_terms_dropped;
  j["toolkit_version"] = kVersion;
  return j;
}

inline void write_testset(std::ostream& cases_out, const TestSet& ts) {
  for (const auto& tc : ts.cases) cases_out << test_case_to_json(tc).dump() << '\n';
}

inline TestSet read_testset(std::istream& cases_in) {
  TestSet ts;
  std::string line;
  while (std::getline(cases_in, line)) {
    if (trim(line).empty()) continue;
    ts.cases.push_back(test_case_from_json(nlohmann::json::parse(line)));
  }
  return ts;
}

}  // namespace lcmt
