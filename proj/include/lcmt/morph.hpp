#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lcmt/corpus.hpp"
#include "lcmt/errors.hpp"
#include "lcmt/text.hpp"

namespace lcmt {

// Normalization backends behind one analyzer contract. All analyzers are
// deterministic, context-free and total; output is always non-empty for
// non-empty input. Analyzer is immutable after construction and normalize()
// is thread-safe.

enum class AnalyzerKind { kIdentity, kLemmaTable, kStemmer };

struct StemRule {
  std::string suffix;
  std::string replacement;  // may be empty
};

class Analyzer {
 public:
  static Analyzer identity() { return Analyzer(AnalyzerKind::kIdentity); }

  static Analyzer lemma_table(std::unordered_map<std::string, std::string> table) {
    Analyzer a(AnalyzerKind::kLemmaTable);
    a.table_ = std::make_shared<const std::unordered_map<std::string, std::string>>(
        std::move(table));
    return a;
  }

  // Rules are applied longest suffix first, repeatedly until none matches
  // (the fixpoint makes stemming idempotent). A rule is applicable only if
  // the result keeps at least 2 code points; replacements must be strictly
  // shorter than their suffix so the loop terminates. Rules never touch
  // tokens without a letter (digits, punctuation).
  static Analyzer stemmer(std::vector<StemRule> rules) {
    for (const auto& r : rules) {
      if (r.suffix.empty()) throw ConfigError("stem rule with empty suffix");
      if (utf8_length(r.replacement) >= utf8_length(r.suffix))
        throw ConfigError("stem rule replacement not shorter than suffix: '" +
                          r.suffix + "' -> '" + r.replacement + "'");
    }
    std::stable_sort(rules.begin(), rules.end(),
                     [](const StemRule& a, const StemRule& b) {
                       return utf8_length(a.suffix) > utf8_length(b.suffix);
                     });
    Analyzer a(AnalyzerKind::kStemmer);
    a.rules_ = std::make_shared<const std::vector<StemRule>>(std::move(rules));
    return a;
  }

  AnalyzerKind kind() const { return kind_; }

  std::string normalize(std::string_view token) const {
    std::string lowered = utf8_lower(token);
    switch (kind_) {
      case AnalyzerKind::kIdentity:
        return lowered;
      case AnalyzerKind::kLemmaTable: {
        auto it = table_->find(lowered);
        return it == table_->end() ? lowered : it->second;
      }
      case AnalyzerKind::kStemmer:
        return stem(std::move(lowered));
    }
    return lowered;
  }

  std::vector<std::string> normalize_sequence(const std::vector<std::string>& tokens) const {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(normalize(t));
    return out;
  }

 private:
  explicit Analyzer(AnalyzerKind k) : kind_(k) {}

  static bool has_letter(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
      const char32_t cp = decode_utf8(s, i);
      if ((cp >= U'a' && cp <= U'z') || (cp >= U'A' && cp <= U'Z') ||
          (cp >= 0xC0 && cp <= 0x24F))
        return true;
    }
    return false;
  }

  std::string stem(std::string word) const {
    if (!has_letter(word)) return word;
    constexpr std::size_t kMinStem = 2;
    bool changed = true;
    while (changed) {
      changed = false;
      const std::size_t len = utf8_length(word);
      for (const auto& r : *rules_) {
        if (r.suffix.size() > word.size()) continue;
        if (word.compare(word.size() - r.suffix.size(), r.suffix.size(), r.suffix) != 0)
          continue;
        const std::size_t new_len =
            len - utf8_length(r.suffix) + utf8_length(r.replacement);
        if (new_len < kMinStem) continue;
        word.replace(word.size() - r.suffix.size(), r.suffix.size(), r.replacement);
        changed = true;
        break;  // restart with the longest rule on the shortened word
      }
    }
    return word;
  }

  AnalyzerKind kind_;
  std::shared_ptr<const std::unordered_map<std::string, std::string>> table_;
  std::shared_ptr<const std::vector<StemRule>> rules_;
};

// Lemma table file: TSV `surface<TAB>lemma`. When the same surface appears
// with several lemmas the most frequent mapping wins, ties resolved by first
// occurrence in file order.
inline Analyzer load_lemma_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open lemma table: " + path);
  struct Cand {
    std::string lemma;
    std::int64_t count = 0;
    std::size_t first = 0;
  };
  std::unordered_map<std::string, std::vector<Cand>> cands;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw DataError("lemma table line " + std::to_string(line_no) + " has no tab");
    const std::string surface = utf8_lower(trim(line.substr(0, tab)));
    const std::string lemma = utf8_lower(trim(line.substr(tab + 1)));
    if (surface.empty() || lemma.empty())
      throw DataError("lemma table line " + std::to_string(line_no) + " has an empty field");
    auto& v = cands[surface];
    auto it = std::find_if(v.begin(), v.end(),
                           [&](const Cand& c) { return c.lemma == lemma; });
    if (it == v.end())
      v.push_back(Cand{lemma, 1, line_no});
    else
      ++it->count;
  }
  std::unordered_map<std::string, std::string> table;
  table.reserve(cands.size());
  for (auto& [surface, v] : cands) {
    const Cand* best = &v[0];
    for (const auto& c : v)
      if (c.count > best->count || (c.count == best->count && c.first < best->first))
        best = &c;
    table.emplace(surface, best->lemma);
  }
  return Analyzer::lemma_table(std::move(table));
}

struct LemmaTableStats {
  std::size_t surfaces = 0;
  std::size_t ambiguous_surfaces = 0;  // surfaces seen with >1 distinct lemma
  std::int64_t conflict_tokens = 0;    // tokens whose sidecar lemma lost the vote
};

// Builds a context-free lemma table from a corpus lemma sidecar; the most
// frequent (surface, lemma) mapping wins. The stats report how much
// contextual ambiguity the flattening discarded.
inline std::pair<Analyzer, LemmaTableStats> build_lemma_table(const Corpus& corpus,
                                                              Side side) {
  std::unordered_map<std::string, std::unordered_map<std::string, std::int64_t>> counts;
  for (const auto& p : corpus.pairs) {
    const auto& lemmas = side == Side::kSource ? p.source_lemmas : p.target_lemmas;
    if (!lemmas) throw MissingLemmaLayer(side_name(side));
    const auto& sent = side == Side::kSource ? p.source : p.target;
    for (std::size_t i = 0; i < sent.size(); ++i)
      ++counts[utf8_lower(sent.tokens[i].surface)][(*lemmas)[i]];
  }
  LemmaTableStats stats;
  std::unordered_map<std::string, std::string> table;
  table.reserve(counts.size());
  for (auto& [surface, lemma_counts] : counts) {
    ++stats.surfaces;
    if (lemma_counts.size() > 1) ++stats.ambiguous_surfaces;
    const std::string* best = nullptr;
    std::int64_t best_count = -1, total = 0;
    for (const auto& [lemma, n] : lemma_counts) {
      total += n;
      if (n > best_count || (n == best_count && lemma < *best)) {
        best = &lemma;
        best_count = n;
      }
    }
    stats.conflict_tokens += total - best_count;
    table.emplace(surface, *best);
  }
  return {Analyzer::lemma_table(std::move(table)), stats};
}

// Stemmer rule file: ordered lines `suffix<TAB>replacement`; replacement may
// be absent. `#` comments and blank lines are ignored.
inline std::vector<StemRule> load_stem_rules(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open stemmer rules: " + path);
  std::vector<StemRule> rules;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    StemRule r;
    if (tab == std::string::npos) {
      r.suffix = trim(line);
    } else {
      r.suffix = trim(line.substr(0, tab));
      r.replacement = trim(line.substr(tab + 1));
    }
    if (r.suffix.empty()) continue;
    rules.push_back(std::move(r));
  }
  return rules;
}

}  // namespace lcmt
