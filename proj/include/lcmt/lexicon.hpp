#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "lcmt/corpus.hpp"
#include "lcmt/errors.hpp"
#include "lcmt/morph.hpp"

namespace lcmt {

// Bilingual dictionary / terminology store indexed by normalized (lemma)
// keys. Immutable after build; matching is pure and parallelizes freely.

enum class LexiconMode { kDictionary, kTerminology };

struct TermEntry {
  std::vector<std::string> source_tokens, target_tokens;
  std::vector<std::string> source_key, target_key;
  std::int32_t entry_id = 0;
};

struct TermMatch {
  std::int32_t entry_id = 0;
  Span source_span;
  std::optional<Span> target_span;
};

class TermLexicon {
 public:
  TermLexicon(std::vector<TermEntry> entries, LexiconMode mode,
              std::size_t dropped_trivial = 0, std::string provenance = "")
      : entries_(std::move(entries)),
        mode_(mode),
        dropped_trivial_(dropped_trivial),
        provenance_(std::move(provenance)) {
    nodes_.emplace_back();
    for (const auto& e : entries_) {
      std::int32_t node = 0;
      for (const auto& k : e.source_key) {
        auto [it, inserted] = nodes_[node].next.try_emplace(k, 0);
        if (inserted) {
          it->second = static_cast<std::int32_t>(nodes_.size());
          nodes_.emplace_back();  // invalidates references into nodes_
        }
        node = nodes_[node].next.at(k);
      }
      nodes_[node].entries.push_back(e.entry_id);
    }
    for (auto& n : nodes_) std::sort(n.entries.begin(), n.entries.end());
  }

  const std::vector<TermEntry>& entries() const { return entries_; }
  const TermEntry& entry(std::int32_t id) const { return entries_.at(id); }
  LexiconMode mode() const { return mode_; }
  std::size_t dropped_trivial() const { return dropped_trivial_; }
  const std::string& provenance() const { return provenance_; }

  // Longest key match starting at position i, with the entries terminating
  // there. Returns match length 0 when nothing matches.
  std::pair<std::size_t, const std::vector<std::int32_t>*> longest_match(
      const std::vector<std::string>& lemmas, std::size_t i) const {
    std::int32_t node = 0;
    std::size_t best_len = 0;
    const std::vector<std::int32_t>* best = nullptr;
    for (std::size_t j = i; j < lemmas.size(); ++j) {
      auto it = nodes_[node].next.find(lemmas[j]);
      if (it == nodes_[node].next.end()) break;
      node = it->second;
      if (!nodes_[node].entries.empty()) {
        best_len = j - i + 1;
        best = &nodes_[node].entries;
      }
    }
    return {best_len, best};
  }

  // Every (depth, entries) pair reachable from position i; used for counting
  // all occurrences including nested keys.
  template <class Fn>
  void visit_matches_at(const std::vector<std::string>& lemmas, std::size_t i,
                        Fn&& fn) const {
    std::int32_t node = 0;
    for (std::size_t j = i; j < lemmas.size(); ++j) {
      auto it = nodes_[node].next.find(lemmas[j]);
      if (it == nodes_[node].next.end()) break;
      node = it->second;
      for (std::int32_t id : nodes_[node].entries) fn(id, j - i + 1);
    }
  }

  // Entry ids sharing the given source key (translation variants).
  std::vector<std::int32_t> variants_of(const std::vector<std::string>& source_key) const {
    std::int32_t node = 0;
    for (const auto& k : source_key) {
      auto it = nodes_[node].next.find(k);
      if (it == nodes_[node].next.end()) return {};
      node = it->second;
    }
    return nodes_[node].entries;
  }

  // A copy restricted to the given entries; entry ids are preserved.
  TermLexicon restricted(const std::vector<std::int32_t>& keep) const {
    std::vector<TermEntry> kept;
    kept.reserve(keep.size());
    for (auto id : keep) kept.push_back(entries_.at(id));
    return TermLexicon(std::move(kept), mode_, dropped_trivial_,
                       provenance_ + "#restricted");
  }

 private:
  struct Node {
    std::unordered_map<std::string, std::int32_t> next;
    std::vector<std::int32_t> entries;
  };

  std::vector<TermEntry> entries_;
  std::vector<Node> nodes_;
  LexiconMode mode_;
  std::size_t dropped_trivial_;
  std::string provenance_;

  friend class TermLexiconBuilder;
};

namespace detail {

inline bool is_trivial_entry(const TermEntry& e) {
  if (e.source_key == e.target_key) return true;
  return e.source_key.size() == 1 && e.target_key.size() == 1 &&
         utf8_length(e.source_key[0]) <= 2 && utf8_length(e.target_key[0]) <= 2;
}

}  // namespace detail

// Lexicon file: TSV `source term<TAB>target term`, UTF-8, `#` comments
// ignored. Trivial entries (copy pairs, or single tokens of <=2 characters
// on both sides) are dropped and counted.
inline TermLexicon build_lexicon(const std::string& pairs_file,
                                 const Analyzer& src_analyzer,
                                 const Analyzer& tgt_analyzer, LexiconMode mode) {
  std::ifstream in(pairs_file, std::ios::binary);
  if (!in) throw DataError("cannot open lexicon file: " + pairs_file);
  std::vector<TermEntry> entries;
  std::size_t dropped = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!is_valid_utf8(line)) throw Utf8Error(line_no);
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw EmptyEntry(line_no);
    TermEntry e;
    e.source_tokens = split_whitespace(line.substr(0, tab));
    e.target_tokens = split_whitespace(line.substr(tab + 1));
    if (e.source_tokens.empty() || e.target_tokens.empty()) throw EmptyEntry(line_no);
    e.source_key = src_analyzer.normalize_sequence(e.source_tokens);
    e.target_key = tgt_analyzer.normalize_sequence(e.target_tokens);
    if (detail::is_trivial_entry(e)) {
      ++dropped;
      continue;
    }
    e.entry_id = static_cast<std::int32_t>(entries.size());
    entries.push_back(std::move(e));
  }
  return TermLexicon(std::move(entries), mode, dropped, pairs_file);
}

inline std::optional<Span> find_subsequence(const std::vector<std::string>& haystack,
                                            const std::vector<std::string>& needle,
                                            std::size_t from = 0) {
  if (needle.empty() || haystack.size() < needle.size()) return std::nullopt;
  for (std::size_t i = from; i + needle.size() <= haystack.size(); ++i) {
    bool ok = true;
    for (std::size_t j = 0; j < needle.size(); ++j)
      if (haystack[i + j] != needle[j]) {
        ok = false;
        break;
      }
    if (ok)
      return Span{static_cast<std::int32_t>(i),
                  static_cast<std::int32_t>(i + needle.size())};
  }
  return std::nullopt;
}

// Non-overlapping longest-match source occurrences, left-to-right greedy.
// At each matched span all entries sharing the matched key are reported (a
// dictionary maps one source to many targets). With require_target, only
// entries whose target key occurs in the target lemma layer survive, with
// the leftmost occurrence recorded as target_span; the greedy source scan is
// unaffected by the filter, so the result is a subset of the unfiltered one.
inline std::vector<TermMatch> find_matches(const TermLexicon& lexicon,
                                           const SentencePair& pair,
                                           bool require_target) {
  if (!pair.source_lemmas) throw MissingLemmaLayer("source");
  if (require_target && !pair.target_lemmas) throw MissingLemmaLayer("target");
  const auto& src = *pair.source_lemmas;
  std::vector<TermMatch> out;
  std::size_t i = 0;
  while (i < src.size()) {
    auto [len, ids] = lexicon.longest_match(src, i);
    if (len == 0) {
      ++i;
      continue;
    }
    const Span sspan{static_cast<std::int32_t>(i), static_cast<std::int32_t>(i + len)};
    for (std::int32_t id : *ids) {
      TermMatch m{id, sspan, std::nullopt};
      if (require_target) {
        auto tspan = find_subsequence(*pair.target_lemmas, lexicon.entry(id).target_key);
        if (!tspan) continue;
        m.target_span = *tspan;
      }
      out.push_back(m);
    }
    i += len;
  }
  return out;
}

// Source-side occurrence counts per entry over a corpus. All occurrences
// are counted, independently per entry (nested keys included).
inline std::unordered_map<std::int32_t, std::int64_t> term_frequencies(
    const TermLexicon& lexicon, const Corpus& corpus) {
  std::unordered_map<std::int32_t, std::int64_t> counts;
  for (const auto& p : corpus.pairs) {
    if (!p.source_lemmas) throw MissingLemmaLayer("source");
    const auto& src = *p.source_lemmas;
    for (std::size_t i = 0; i < src.size(); ++i)
      lexicon.visit_matches_at(src, i,
                               [&](std::int32_t id, std::size_t) { ++counts[id]; });
  }
  return counts;
}

}  // namespace lcmt
