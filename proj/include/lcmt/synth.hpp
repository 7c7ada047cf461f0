#pragma once

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lcmt/corpus.hpp"
#include "lcmt/errors.hpp"
#include "lcmt/lexicon.hpp"
#include "lcmt/rng.hpp"

namespace lcmt {

// Constraint synthesis for training data: random target-span sampling and
// dictionary matching. Pure per-pair functions; the RNG stream is seeded by
// (config seed, pair id), so generation is order-independent and
// reproducible regardless of worker count.

enum class EmitForm { kSurface, kLemma, kCanonical };
enum class Origin { kRandom, kDictionary, kTerminology, kExternal };
enum class FormMode { kSurface, kLemma, kMixed };

inline const char* emit_form_name(EmitForm f) {
  switch (f) {
    case EmitForm::kSurface: return "surface";
    case EmitForm::kLemma: return "lemma";
    case EmitForm::kCanonical: return "canonical";
  }
  return "surface";
}

inline const char* origin_name(Origin o) {
  switch (o) {
    case Origin::kRandom: return "random";
    case Origin::kDictionary: return "dictionary";
    case Origin::kTerminology: return "terminology";
    case Origin::kExternal: return "external";
  }
  return "external";
}

struct Constraint {
  std::vector<std::string> surface_tokens;  // reference-realized form
  std::vector<std::string> lemma_tokens;
  EmitForm emit_form = EmitForm::kSurface;
  std::optional<std::vector<std::string>> canonical_tokens;  // termbase form
  std::optional<Span> target_span, source_span;
  Origin origin = Origin::kExternal;
  std::int32_t entry_id = -1;  // lexicon entry for dictionary/terminology origins
};

struct ConstraintSet {
  std::int64_t pair_id = -1;
  std::vector<Constraint> constraints;
  bool skipped = false;  // sentence intentionally left unconstrained
};

struct SamplerConfig {
  double p_start = 0.3;
  double p_stop = 0.85;
  double skip_ratio = 0.0;
  std::uint64_t seed = 0;
  FormMode form_mode = FormMode::kSurface;
};

// Emission per requested form. `mixed` resolves to lemma when mix_draw is
// set, surface otherwise (the draw is made per sentence by the samplers).
inline const std::vector<std::string>& realize(const Constraint& c, EmitForm form) {
  switch (form) {
    case EmitForm::kSurface:
      if (c.surface_tokens.empty()) throw MissingForm("surface");
      return c.surface_tokens;
    case EmitForm::kLemma:
      if (c.lemma_tokens.empty()) throw MissingForm("lemma");
      return c.lemma_tokens;
    case EmitForm::kCanonical:
      if (!c.canonical_tokens || c.canonical_tokens->empty())
        throw MissingForm("canonical");
      return *c.canonical_tokens;
  }
  throw MissingForm("surface");
}

inline const std::vector<std::string>& realize(const Constraint& c) {
  return realize(c, c.emit_form);
}

namespace detail {

inline void resolve_form(std::vector<Constraint>& constraints, FormMode mode,
                         CounterRng& rng) {
  EmitForm form = EmitForm::kSurface;
  switch (mode) {
    case FormMode::kSurface:
      form = EmitForm::kSurface;
      break;
    case FormMode::kLemma:
      form = EmitForm::kLemma;
      break;
    case FormMode::kMixed:
      // one draw per sentence, made after the shuffle draws
      form = rng.bernoulli(0.5) ? EmitForm::kLemma : EmitForm::kSurface;
      break;
  }
  for (auto& c : constraints) c.emit_form = form;
}

}  // namespace detail

// Random target-span sampling (training constraints). Draw order on the
// per-pair stream: (1) skip, (2) per-token scan left to right -- outside a
// span each token draws start~Bernoulli(p_start); inside, after including
// the current token, stop~Bernoulli(p_stop) unless the token is the last of
// the sentence, which closes the span without a draw -- (3) one Fisher-Yates
// shuffle pass over the constraints, (4) the mixed-form draw if applicable.
inline ConstraintSet sample_random(const SentencePair& pair, const SamplerConfig& cfg) {
  ConstraintSet cs;
  cs.pair_id = pair.id;
  CounterRng rng(cfg.seed, static_cast<std::uint64_t>(pair.id));
  cs.skipped = rng.bernoulli(cfg.skip_ratio);
  if (cs.skipped) return cs;
  const bool need_lemmas = cfg.form_mode != FormMode::kSurface;
  if (need_lemmas && !pair.target_lemmas) throw MissingLemmaLayer("target");

  const auto& tokens = pair.target.tokens;
  const std::size_t n = tokens.size();
  std::vector<Span> spans;
  std::size_t i = 0;
  while (i < n) {
    if (!rng.bernoulli(cfg.p_start)) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (true) {
      if (i == n - 1) {
        ++i;
        break;
      }
      ++i;
      if (rng.bernoulli(cfg.p_stop)) break;
    }
    spans.push_back(Span{static_cast<std::int32_t>(start), static_cast<std::int32_t>(i)});
  }

  cs.constraints.reserve(spans.size());
  for (const Span& s : spans) {
    Constraint c;
    c.origin = Origin::kRandom;
    c.target_span = s;
    for (std::int32_t k = s.begin; k < s.end; ++k)
      c.surface_tokens.push_back(tokens[static_cast<std::size_t>(k)].surface);
    if (pair.target_lemmas)
      c.lemma_tokens.assign(pair.target_lemmas->begin() + s.begin,
                            pair.target_lemmas->begin() + s.end);
    cs.constraints.push_back(std::move(c));
  }
  rng.shuffle(cs.constraints);
  detail::resolve_form(cs.constraints, cfg.form_mode, rng);
  return cs;
}

namespace detail {

// One constraint per greedy source span (lowest entry id wins among
// same-span variants), dropping any whose target span overlaps an earlier
// kept one; keeps ConstraintSet target spans pairwise non-overlapping.
inline std::vector<Constraint> constraints_from_matches(
    const SentencePair& pair, const TermLexicon& lexicon,
    const std::vector<TermMatch>& matches) {
  std::vector<Constraint> out;
  std::optional<Span> last_source;
  for (const auto& m : matches) {
    if (last_source && m.source_span == *last_source) continue;
    if (!m.target_span) continue;
    bool overlap = false;
    for (const auto& c : out)
      if (c.target_span && c.target_span->overlaps(*m.target_span)) {
        overlap = true;
        break;
      }
    if (overlap) continue;
    last_source = m.source_span;
    const auto& entry = lexicon.entry(m.entry_id);
    Constraint c;
    c.origin = lexicon.mode() == LexiconMode::kTerminology ? Origin::kTerminology
                                                           : Origin::kDictionary;
    c.entry_id = m.entry_id;
    c.source_span = m.source_span;
    c.target_span = m.target_span;
    for (std::int32_t k = m.target_span->begin; k < m.target_span->end; ++k)
      c.surface_tokens.push_back(pair.target.tokens[static_cast<std::size_t>(k)].surface);
    c.lemma_tokens.assign(pair.target_lemmas->begin() + m.target_span->begin,
                          pair.target_lemmas->begin() + m.target_span->end);
    c.canonical_tokens = entry.target_tokens;
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace detail

// Dictionary-matched constraints (training). Draw order: skip, shuffle,
// mixed-form draw.
inline ConstraintSet sample_dictionary(const SentencePair& pair,
                                       const TermLexicon& lexicon,
                                       const SamplerConfig& cfg) {
  ConstraintSet cs;
  cs.pair_id = pair.id;
  CounterRng rng(cfg.seed, static_cast<std::uint64_t>(pair.id));
  cs.skipped = rng.bernoulli(cfg.skip_ratio);
  if (cs.skipped) return cs;
  auto matches = find_matches(lexicon, pair, /*require_target=*/true);
  cs.constraints = detail::constraints_from_matches(pair, lexicon, matches);
  rng.shuffle(cs.constraints);
  detail::resolve_form(cs.constraints, cfg.form_mode, rng);
  return cs;
}

// External interface: JSON Lines, one object per pair.
inline nlohmann::json constraint_set_to_json(const ConstraintSet& cs) {
  nlohmann::json j;
  j["id"] = cs.pair_id;
  j["skipped"] = cs.skipped;
  auto arr = nlohmann::json::array();
  for (const auto& c : cs.constraints) {
    nlohmann::json cj;
    cj["tokens"] = realize(c);
    cj["form"] = emit_form_name(c.emit_form);
    if (c.source_span) cj["src_span"] = {c.source_span->begin, c.source_span->end};
    if (c.target_span) cj["tgt_span"] = {c.target_span->begin, c.target_span->end};
    cj["origin"] = origin_name(c.origin);
    arr.push_back(std::move(cj));
  }
  j["constraints"] = std::move(arr);
  return j;
}

inline ConstraintSet constraint_set_from_json(const nlohmann::json& j) {
  ConstraintSet cs;
  cs.pair_id = j.at("id").get<std::int64_t>();
  cs.skipped = j.value("skipped", false);
  for (const auto& cj : j.at("constraints")) {
    Constraint c;
    const std::string form = cj.value("form", "surface");
    std::vector<std::string> tokens = cj.at("tokens").get<std::vector<std::string>>();
    if (form == "lemma") {
      c.emit_form = EmitForm::kLemma;
      c.lemma_tokens = std::move(tokens);
    } else if (form == "canonical") {
      c.emit_form = EmitForm::kCanonical;
      c.canonical_tokens = std::move(tokens);
    } else {
      c.emit_form = EmitForm::kSurface;
      c.surface_tokens = std::move(tokens);
    }
    if (cj.contains("src_span"))
      c.source_span = Span{cj["src_span"][0].get<std::int32_t>(),
                           cj["src_span"][1].get<std::int32_t>()};
    if (cj.contains("tgt_span"))
      c.target_span = Span{cj["tgt_span"][0].get<std::int32_t>(),
                           cj["tgt_span"][1].get<std::int32_t>()};
    const std::string origin = cj.value("origin", "external");
    c.origin = origin == "random"        ? Origin::kRandom
               : origin == "dictionary"  ? Origin::kDictionary
               : origin == "terminology" ? Origin::kTerminology
                                         : Origin::kExternal;
    cs.constraints.push_back(std::move(c));
  }
  return cs;
}

}  // namespace lcmt
