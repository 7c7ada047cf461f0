#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "lcmt/bench.hpp"
#include "lcmt/corpus.hpp"
#include "lcmt/errors.hpp"
#include "lcmt/morph.hpp"
#include "lcmt/rng.hpp"
#include "lcmt/text.hpp"

namespace lcmt {

// Scoring: corpus BLEU with 13a tokenization and exponential smoothing,
// surface/lemma constraint coverage, placement correlation, the
// constraint-shuffle sanity check, and miss bucketing.

// mteval-v13a tokenization: entity unescaping, padding of ASCII punctuation
// (period/comma/dash handled digit-sensitively), whitespace collapse.
inline std::string tokenize_13a(std::string_view line) {
  std::string s(line);
  auto replace_all = [](std::string& str, std::string_view from, std::string_view to) {
    std::size_t pos = 0;
    while ((pos = str.find(from, pos)) != std::string::npos) {
      str.replace(pos, from.size(), to);
      pos += to.size();
    }
  };
  replace_all(s, "<skipped>", "");
  replace_all(s, "-\n", "");
  replace_all(s, "\n", " ");
  if (s.find('&') != std::string::npos) {
    replace_all(s, "&quot;", "\"");
    replace_all(s, "&amp;", "&");
    replace_all(s, "&lt;", "<");
    replace_all(s, "&gt;", ">");
  }
  std::string padded;
  padded.reserve(s.size() * 2 + 2);
  padded += ' ';
  for (char ch : s) {
    const unsigned char c = static_cast<unsigned char>(ch);
    const bool punct = (c >= 0x20 && c <= 0x26) || (c >= 0x28 && c <= 0x2B) ||
                       c == 0x2F || (c >= 0x3A && c <= 0x40) ||
                       (c >= 0x5B && c <= 0x60) || (c >= 0x7B && c <= 0x7E);
    if (punct) {
      padded += ' ';
      padded += ch;
      padded += ' ';
    } else {
      padded += ch;
    }
  }
  padded += ' ';
  static const std::regex re_before(R"(([^0-9])([\.,]))");
  static const std::regex re_after(R"(([\.,])([^0-9]))");
  static const std::regex re_dash(R"(([0-9])(-))");
  padded = std::regex_replace(padded, re_before, "$1 $2 ");
  padded = std::regex_replace(padded, re_after, " $1 $2");
  padded = std::regex_replace(padded, re_dash, "$1 $2 ");
  return join(split_whitespace(padded));
}

namespace detail {

constexpr int kMaxNgramOrder = 4;

struct BleuStats {
  std::int64_t correct[kMaxNgramOrder] = {0, 0, 0, 0};
  std::int64_t total[kMaxNgramOrder] = {0, 0, 0, 0};
  std::int64_t sys_len = 0, ref_len = 0;
};

inline void accumulate_bleu(BleuStats& st, const std::vector<std::string>& hyp,
                            const std::vector<std::string>& ref) {
  st.sys_len += static_cast<std::int64_t>(hyp.size());
  st.ref_len += static_cast<std::int64_t>(ref.size());
  for (int n = 1; n <= kMaxNgramOrder; ++n) {
    const std::size_t un = static_cast<std::size_t>(n);
    if (hyp.size() < un) continue;
    std::unordered_map<std::string, std::int64_t> ref_grams;
    if (ref.size() >= un)
      for (std::size_t i = 0; i + un <= ref.size(); ++i) {
        std::string key;
        for (std::size_t j = 0; j < un; ++j) {
          key += ref[i + j];
          key += '\x1f';
        }
        ++ref_grams[key];
      }
    std::unordered_map<std::string, std::int64_t> hyp_grams;
    for (std::size_t i = 0; i + un <= hyp.size(); ++i) {
      std::string key;
      for (std::size_t j = 0; j < un; ++j) {
        key += hyp[i + j];
        key += '\x1f';
      }
      ++hyp_grams[key];
    }
    for (const auto& [key, cnt] : hyp_grams) {
      st.total[n - 1] += cnt;
      auto it = ref_grams.find(key);
      if (it != ref_grams.end()) st.correct[n - 1] += std::min(cnt, it->second);
    }
  }
}

// Exponential smoothing of zero n-gram matches; effective order caps the
// geometric mean at the longest order with any hypothesis n-grams, so
// score(h, h) is 100 even for very short corpora.
inline double bleu_from_stats(const BleuStats& st) {
  if (st.sys_len == 0) return 0.0;
  double precisions[kMaxNgramOrder] = {0, 0, 0, 0};
  double smooth = 1.0;
  int effective_order = 0;
  for (int n = 0; n < kMaxNgramOrder; ++n) {
    if (st.total[n] == 0) break;
    effective_order = n + 1;
    if (st.correct[n] == 0) {
      smooth *= 2.0;
      precisions[n] = 100.0 / (smooth * static_cast<double>(st.total[n]));
    } else {
      precisions[n] = 100.0 * static_cast<double>(st.correct[n]) /
                      static_cast<double>(st.total[n]);
    }
  }
  if (effective_order == 0) return 0.0;
  double log_sum = 0.0;
  for (int n = 0; n < effective_order; ++n) {
    if (precisions[n] <= 0.0) return 0.0;
    log_sum += std::log(precisions[n]);
  }
  const double bp = st.sys_len < st.ref_len
                        ? std::exp(1.0 - static_cast<double>(st.ref_len) /
                                             static_cast<double>(st.sys_len))
                        : 1.0;
  return bp * std::exp(log_sum / effective_order);
}

}  // namespace detail

// Corpus BLEU, n-grams 1-4, 13a tokenization, exponential smoothing,
// mixed case. Returns a percentage.
inline double bleu(const std::vector<std::string>& hyps,
                   const std::vector<std::string>& refs) {
  if (hyps.size() != refs.size() || hyps.empty())
    throw LengthMismatch(hyps.size(), refs.size());
  detail::BleuStats st;
  for (std::size_t i = 0; i < hyps.size(); ++i)
    detail::accumulate_bleu(st, split_whitespace(tokenize_13a(hyps[i])),
                            split_whitespace(tokenize_13a(refs[i])));
  return detail::bleu_from_stats(st);
}

struct CaseResult {
  std::int64_t pair_id = -1;
  std::vector<bool> satisfied_surface, satisfied_lemma, satisfied_emitted;
  // start character indices for constraints satisfied in BOTH hyp and ref
  std::vector<std::int64_t> hyp_start_chars, ref_start_chars;
};

struct MissBuckets {
  std::int64_t form_mismatch = 0;  // surface miss, lemma hit
  std::int64_t missing = 0;        // lemma miss too
};

struct CoverageResult {
  double cvg = 1.0, cvg_l = 1.0, cvg_emitted = 1.0;
  std::int64_t total_constraints = 0;
  std::int64_t sat_surface = 0, sat_lemma = 0, sat_emitted = 0;
  bool vacuous = false;  // no constraints anywhere
  std::vector<CaseResult> per_case;
};

namespace detail {

// Greedy non-overlapping occurrence starts (token indices) of pat in toks.
// Greedy leftmost matching maximizes the number of disjoint occurrences.
inline std::vector<std::size_t> disjoint_occurrences(
    const std::vector<std::string>& toks, const std::vector<std::string>& pat) {
  std::vector<std::size_t> starts;
  if (pat.empty() || toks.size() < pat.size()) return starts;
  std::size_t i = 0;
  while (i + pat.size() <= toks.size()) {
    bool ok = true;
    for (std::size_t j = 0; j < pat.size(); ++j)
      if (toks[i + j] != pat[j]) {
        ok = false;
        break;
      }
    if (ok) {
      starts.push_back(i);
      i += pat.size();
    } else {
      ++i;
    }
  }
  return starts;
}

inline std::vector<std::int64_t> char_offsets(const std::vector<std::string>& toks) {
  std::vector<std::int64_t> offs(toks.size() + 1, 0);
  for (std::size_t i = 0; i < toks.size(); ++i)
    offs[i + 1] = offs[i] + static_cast<std::int64_t>(utf8_length(toks[i])) + 1;
  return offs;
}

struct GroupKey {
  std::vector<std::string> tokens;
  bool operator<(const GroupKey& o) const { return tokens < o.tokens; }
};

// Multiset satisfaction of patterns against a token sequence: identical
// patterns require distinct non-overlapping occurrences; distinct patterns
// are matched independently. Returns per-constraint satisfaction and the
// start token of the occurrence assigned to each satisfied constraint.
inline void multiset_satisfy(const std::vector<std::vector<std::string>>& patterns,
                             const std::vector<std::string>& toks,
                             std::vector<bool>& satisfied,
                             std::vector<std::size_t>& occ_start) {
  satisfied.assign(patterns.size(), false);
  occ_start.assign(patterns.size(), 0);
  std::map<std::vector<std::string>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < patterns.size(); ++i)
    groups[patterns[i]].push_back(i);
  for (const auto& [pat, members] : groups) {
    const auto occs = disjoint_occurrences(toks, pat);
    const std::size_t m = std::min(members.size(), occs.size());
    for (std::size_t k = 0; k < m; ++k) {
      satisfied[members[k]] = true;
      occ_start[members[k]] = occs[k];
    }
  }
}

}  // namespace detail

// Constraint coverage of hypotheses against a test set. A constraint is
// surface-satisfied when its reference-realized surface token sequence
// occurs in the whitespace-tokenized hypothesis (repeated identical
// constraints need distinct non-overlapping occurrences); lemma-satisfied
// when its lemma sequence occurs in the analyzer-normalized hypothesis.
// Surface-satisfied constraints count as lemma-satisfied through their own
// occurrence; remaining lemma occurrences satisfy the rest in order, which
// keeps cvg <= cvg_l for any context-free analyzer. Emitted-form coverage is
// reported alongside for test sets whose emitted string differs from the
// reference form.
inline CoverageResult coverage(const std::vector<std::string>& hyps,
                               const TestSet& testset, const Analyzer& analyzer) {
  if (hyps.size() != testset.cases.size())
    throw LengthMismatch(hyps.size(), testset.cases.size());
  CoverageResult res;
  for (std::size_t ci = 0; ci < testset.cases.size(); ++ci) {
    const TestCase& tc = testset.cases[ci];
    CaseResult cr;
    cr.pair_id = tc.pair_id;
    const auto hyp_tokens = split_whitespace(hyps[ci]);
    const auto ref_tokens = split_whitespace(tc.reference_line);
    const auto hyp_norm = analyzer.normalize_sequence(hyp_tokens);
    const auto hyp_offs = detail::char_offsets(hyp_tokens);
    const auto ref_offs = detail::char_offsets(ref_tokens);

    const std::size_t n = tc.constraints.size();
    std::vector<std::vector<std::string>> surface_pats(n), lemma_pats(n), emit_pats(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Constraint& c = tc.constraints[i];
      surface_pats[i] = c.surface_tokens;
      lemma_pats[i] = c.lemma_tokens.empty()
                          ? analyzer.normalize_sequence(c.surface_tokens)
                          : c.lemma_tokens;
      emit_pats[i] = realize(c);
    }

    std::vector<std::size_t> hyp_occ, ref_occ, emit_occ;
    std::vector<bool> ref_sat;
    detail::multiset_satisfy(surface_pats, hyp_tokens, cr.satisfied_surface, hyp_occ);
    detail::multiset_satisfy(surface_pats, ref_tokens, ref_sat, ref_occ);
    detail::multiset_satisfy(emit_pats, hyp_tokens, cr.satisfied_emitted, emit_occ);

    // lemma: surface hits keep their own witness; spare disjoint lemma
    // occurrences satisfy the others in constraint order
    cr.satisfied_lemma.assign(n, false);
    std::map<std::vector<std::string>, std::vector<std::size_t>> lemma_groups;
    for (std::size_t i = 0; i < n; ++i) lemma_groups[lemma_pats[i]].push_back(i);
    for (const auto& [pat, members] : lemma_groups) {
      const auto occs = detail::disjoint_occurrences(hyp_norm, pat);
      std::size_t surface_hits = 0;
      for (auto m : members)
        if (cr.satisfied_surface[m]) {
          cr.satisfied_lemma[m] = true;
          ++surface_hits;
        }
      std::size_t spare =
          occs.size() > surface_hits ? occs.size() - surface_hits : 0;
      for (auto m : members) {
        if (cr.satisfied_lemma[m]) continue;
        if (spare == 0) break;
        cr.satisfied_lemma[m] = true;
        --spare;
      }
    }

    for (std::size_t i = 0; i < n; ++i) {
      ++res.total_constraints;
      if (cr.satisfied_surface[i]) ++res.sat_surface;
      if (cr.satisfied_lemma[i]) ++res.sat_lemma;
      if (cr.satisfied_emitted[i]) ++res.sat_emitted;
      if (cr.satisfied_surface[i] && ref_sat[i]) {
        cr.hyp_start_chars.push_back(hyp_offs[hyp_occ[i]]);
        cr.ref_start_chars.push_back(ref_offs[ref_occ[i]]);
      }
    }
    res.per_case.push_back(std::move(cr));
  }
  if (res.total_constraints == 0) {
    res.vacuous = true;  // vacuous truth by convention, flagged
    res.cvg = res.cvg_l = res.cvg_emitted = 1.0;
  } else {
    const double total = static_cast<double>(res.total_constraints);
    res.cvg = static_cast<double>(res.sat_surface) / total;
    res.cvg_l = static_cast<double>(res.sat_lemma) / total;
    res.cvg_emitted = static_cast<double>(res.sat_emitted) / total;
  }
  return res;
}

// Pearson correlation over pooled (hyp, ref) start character indices of
// constraints satisfied on both sides. Undefined (reported as null, never 0)
// with fewer than two pairs or zero variance.
inline std::optional<double> placement_rho(const std::vector<CaseResult>& per_case) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& cr : per_case)
    for (std::size_t i = 0; i < cr.hyp_start_chars.size(); ++i)
      pts.emplace_back(static_cast<double>(cr.hyp_start_chars[i]),
                       static_cast<double>(cr.ref_start_chars[i]));
  if (pts.size() < 2) return std::nullopt;
  double mx = 0, my = 0;
  for (const auto& [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double sxy = 0, sxx = 0, syy = 0;
  for (const auto& [x, y] : pts) {
    sxy += (x - mx) * (y - my);
    sxx += (x - mx) * (x - mx);
    syy += (y - my) * (y - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

struct ShuffleCheckResult {
  std::optional<double> rho_original, rho_shuffled;
};

// Sanity check of the placement metric: every satisfied constraint
// occurrence is removed from the hypothesis and re-inserted at a uniformly
// random token boundary (stream seeded by (seed, pair id), one draw per
// moved constraint in case order), then the correlation is recomputed.
inline ShuffleCheckResult shuffle_check(const std::vector<std::string>& hyps,
                                        const TestSet& testset,
                                        const Analyzer& analyzer, std::uint64_t seed) {
  ShuffleCheckResult out;
  auto cov = coverage(hyps, testset, analyzer);
  out.rho_original = placement_rho(cov.per_case);
  std::vector<std::string> shuffled(hyps.size());
  for (std::size_t ci = 0; ci < testset.cases.size(); ++ci) {
    const TestCase& tc = testset.cases[ci];
    auto toks = split_whitespace(hyps[ci]);
    CounterRng rng(seed, static_cast<std::uint64_t>(tc.pair_id));
    for (const auto& c : tc.constraints) {
      const auto& pat = c.surface_tokens;
      auto occ = find_subsequence(toks, pat);
      if (!occ) continue;
      std::vector<std::string> moved(toks.begin() + occ->begin, toks.begin() + occ->end);
      toks.erase(toks.begin() + occ->begin, toks.begin() + occ->end);
      const std::size_t j = static_cast<std::size_t>(rng.bounded(toks.size() + 1));
      toks.insert(toks.begin() + static_cast<std::ptrdiff_t>(j), moved.begin(),
                  moved.end());
    }
    shuffled[ci] = join(toks);
  }
  auto cov_s = coverage(shuffled, testset, analyzer);
  out.rho_shuffled = placement_rho(cov_s.per_case);
  return out;
}

struct ReviewItem {
  std::int64_t pair_id = -1;
  std::size_t constraint_index = 0;
  std::string bucket;  // FORM_MISMATCH | MISSING
  std::string source, hyp, ref;
  std::vector<std::string> surface, lemma;
  std::optional<std::vector<std::string>> canonical;
};

// Automatic pre-bucketing of surface misses: FORM_MISMATCH when the lemma
// still matched (inflection candidates), MISSING otherwise. The review queue
// carries everything a human needs for CCC/CIC labeling.
inline std::pair<MissBuckets, std::vector<ReviewItem>> bucket_misses(
    const TestSet& testset, const std::vector<std::string>& hyps,
    const std::vector<CaseResult>& per_case) {
  MissBuckets buckets;
  std::vector<ReviewItem> queue;
  for (std::size_t ci = 0; ci < per_case.size(); ++ci) {
    const auto& cr = per_case[ci];
    const auto& tc = testset.cases[ci];
    for (std::size_t i = 0; i < cr.satisfied_surface.size(); ++i) {
      if (cr.satisfied_surface[i]) continue;
      const bool form_mismatch = cr.satisfied_lemma[i];
      (form_mismatch ? buckets.form_mismatch : buckets.missing) += 1;
      ReviewItem item;
      item.pair_id = tc.pair_id;
      item.constraint_index = i;
      item.bucket = form_mismatch ? "FORM_MISMATCH" : "MISSING";
      item.source = tc.source_line;
      item.hyp = hyps[ci];
      item.ref = tc.reference_line;
      item.surface = tc.constraints[i].surface_tokens;
      item.lemma = tc.constraints[i].lemma_tokens;
      item.canonical = tc.constraints[i].canonical_tokens;
      queue.push_back(std::move(item));
    }
  }
  return {buckets, std::move(queue)};
}

struct EvalReport {
  double bleu = 0.0, bleu_l = 0.0;
  CoverageResult cov;
  std::optional<double> placement;
  std::optional<ShuffleCheckResult> shuffle;
  MissBuckets buckets;
  std::vector<ReviewItem> review_queue;
};

inline EvalReport evaluate(const std::vector<std::string>& hyps, const TestSet& testset,
                           const Analyzer& analyzer, bool with_shuffle = false,
                           std::uint64_t shuffle_seed = 0) {
  if (hyps.size() != testset.cases.size())
    throw LengthMismatch(hyps.size(), testset.cases.size());
  EvalReport rep;
  std::vector<std::string> refs;
  refs.reserve(testset.cases.size());
  for (const auto& tc : testset.cases) refs.push_back(tc.reference_line);
  rep.bleu = bleu(hyps, refs);
  std::vector<std::string> hyps_l(hyps.size()), refs_l(refs.size());
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    hyps_l[i] = join(analyzer.normalize_sequence(split_whitespace(hyps[i])));
    refs_l[i] = join(analyzer.normalize_sequence(split_whitespace(refs[i])));
  }
  rep.bleu_l = bleu(hyps_l, refs_l);
  rep.cov = coverage(hyps, testset, analyzer);
  rep.placement = placement_rho(rep.cov.per_case);
  auto [buckets, queue] = bucket_misses(testset, hyps, rep.cov.per_case);
  rep.buckets = buckets;
  rep.review_queue = std::move(queue);
  if (with_shuffle) rep.shuffle = shuffle_check(hyps, testset, analyzer, shuffle_seed);
  return rep;
}

inline nlohmann::json report_to_json(const EvalReport& rep) {
  nlohmann::json j;
  j["bleu"] = rep.bleu;
  j["bleu_l"] = rep.bleu_l;
  j["cvg"] = rep.cov.cvg;
  j["cvg_l"] = rep.cov.cvg_l;
  j["cvg_emitted"] = rep.cov.cvg_emitted;
  j["cvg_vacuous"] = rep.cov.vacuous;
  j["total_constraints"] = rep.cov.total_constraints;
  if (rep.placement)
    j["placement_rho"] = *rep.placement;
  else
    j["placement_rho"] = nullptr;
  if (rep.shuffle) {
    j["shuffle_check"] = {
        {"rho_original",
         rep.shuffle->rho_original ? nlohmann::json(*rep.shuffle->rho_original)
                                   : nlohmann::json(nullptr)},
        {"rho_shuffled",
         rep.shuffle->rho_shuffled ? nlohmann::json(*rep.shuffle->rho_shuffled)
                                   : nlohmann::json(nullptr)}};
  }
  j["miss_buckets"] = {{"FORM_MISMATCH", rep.buckets.form_mismatch},
                       {"MISSING", rep.buckets.missing}};
  auto arr = nlohmann::json::array();
  for (const auto& cr : rep.cov.per_case) {
    nlohmann::json cj;
    cj["id"] = cr.pair_id;
    cj["satisfied_surface"] = cr.satisfied_surface;
    cj["satisfied_lemma"] = cr.satisfied_lemma;
    cj["satisfied_emitted"] = cr.satisfied_emitted;
    cj["hyp_start_chars"] = cr.hyp_start_chars;
    cj["ref_start_chars"] = cr.ref_start_chars;
    arr.push_back(std::move(cj));
  }
  j["per_case"] = std::move(arr);
  return j;
}

inline nlohmann::json review_item_to_json(const ReviewItem& item) {
  nlohmann::json j;
  j["id"] = item.pair_id;
  j["constraint"] = item.constraint_index;
  j["bucket"] = item.bucket;
  j["source"] = item.source;
  j["hyp"] = item.hyp;
  j["ref"] = item.ref;
  j["surface"] = item.surface;
  j["lemma"] = item.lemma;
  if (item.canonical)
    j["canonical"] = *item.canonical;
  else
    j["canonical"] = nullptr;
  return j;
}

// Table-1 style text summary.
inline std::string summary_table(const EvalReport& rep) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << "BLEU\tCvg\tBLEU_L\tCvg_L\tPos rho\n";
  os << rep.bleu << '\t' << 100.0 * rep.cov.cvg << '\t' << rep.bleu_l << '\t'
     << 100.0 * rep.cov.cvg_l << '\t';
  if (rep.placement) {
    os.precision(4);
    os << *rep.placement;
  } else {
    os << "n/a";
  }
  os << '\n';
  if (rep.shuffle) {
    os.precision(4);
    os << "shuffle check: rho ";
    if (rep.shuffle->rho_original)
      os << *rep.shuffle->rho_original;
    else
      os << "n/a";
    os << " -> ";
    if (rep.shuffle->rho_shuffled)
      os << *rep.shuffle->rho_shuffled;
    else
      os << "n/a";
    os << '\n';
  }
  return os.str();
}

}  // namespace lcmt
