#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "lcmt/errors.hpp"
#include "lcmt/text.hpp"

namespace lcmt {

// Parallel corpus ingestion. Sentences are whitespace-tokenized; metric
// tokenization (13a) lives in eval and is applied only there. A Corpus is
// immutable after load and safe to share across threads; all operations
// below return new corpora.

struct Span {
  std::int32_t begin = 0;
  std::int32_t end = 0;  // half-open [begin, end)
  bool operator==(const Span&) const = default;
  bool overlaps(const Span& o) const { return begin < o.end && o.begin < end; }
  std::int32_t size() const { return end - begin; }
};

struct Token {
  std::string surface;
  std::int32_t index = 0;       // 0-based token position
  std::int64_t char_start = 0;  // code point offset in the space-joined sentence
};

struct Sentence {
  std::vector<Token> tokens;
  std::string raw;

  static Sentence from_line(std::string line) {
    Sentence s;
    s.raw = std::move(line);
    std::int64_t off = 0;
    for (auto& tok : split_whitespace(s.raw)) {
      const auto len = static_cast<std::int64_t>(utf8_length(tok));
      s.tokens.push_back(Token{std::move(tok),
                               static_cast<std::int32_t>(s.tokens.size()), off});
      off += len + 1;  // single separating space
    }
    return s;
  }

  std::size_t size() const { return tokens.size(); }

  std::vector<std::string> surfaces() const {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(t.surface);
    return out;
  }

  std::string joined() const {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (i) out += ' ';
      out += tokens[i].surface;
    }
    return out;
  }
};

struct SentencePair {
  std::int64_t id = 0;
  Sentence source, target;
  std::optional<std::vector<std::string>> source_lemmas, target_lemmas;
};

enum class Side { kSource, kTarget };

inline const char* side_name(Side s) {
  return s == Side::kSource ? "source" : "target";
}

enum class ParallelFormat { kMoses2Files, kTsv };
enum class SidecarFormat { kConllu, kTsvTokenLemma };

struct Corpus {
  std::vector<SentencePair> pairs;
  std::string provenance;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
};

namespace detail {

inline std::vector<std::string> read_lines_utf8(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!is_valid_utf8(line)) throw Utf8Error(lines.size());
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace detail

inline Corpus load_parallel(const std::string& source_path,
                            const std::string& target_path,
                            ParallelFormat format = ParallelFormat::kMoses2Files) {
  Corpus c;
  if (format == ParallelFormat::kMoses2Files) {
    auto src = detail::read_lines_utf8(source_path);
    auto tgt = detail::read_lines_utf8(target_path);
    if (src.size() != tgt.size()) throw LineCountMismatch(src.size(), tgt.size());
    c.pairs.reserve(src.size());
    for (std::size_t i = 0; i < src.size(); ++i)
      c.pairs.push_back(SentencePair{static_cast<std::int64_t>(i),
                                     Sentence::from_line(std::move(src[i])),
                                     Sentence::from_line(std::move(tgt[i])),
                                     std::nullopt, std::nullopt});
    c.provenance = "moses-2-files:" + source_path + "+" + target_path;
  } else {
    // tsv: one file, `source<TAB>target` per line; source_path names it.
    auto lines = detail::read_lines_utf8(source_path);
    c.pairs.reserve(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const auto tab = lines[i].find('\t');
      if (tab == std::string::npos)
        throw DataError("tsv line " + std::to_string(i) + " has no tab: " + source_path);
      c.pairs.push_back(SentencePair{static_cast<std::int64_t>(i),
                                     Sentence::from_line(lines[i].substr(0, tab)),
                                     Sentence::from_line(lines[i].substr(tab + 1)),
                                     std::nullopt, std::nullopt});
    }
    c.provenance = "tsv:" + source_path;
  }
  return c;
}

inline void save_parallel(const Corpus& corpus, const std::string& source_path,
                          const std::string& target_path) {
  std::ofstream src(source_path, std::ios::binary), tgt(target_path, std::ios::binary);
  if (!src || !tgt) throw DataError("cannot open output files for corpus");
  for (const auto& p : corpus.pairs) {
    src << p.source.raw << '\n';
    tgt << p.target.raw << '\n';
  }
}

// Sidecar parsing. conllu: standard 10-column CoNLL-U, column 2 = form,
// column 3 = lemma; multiword ranges ("3-4") and empty nodes ("8.1") are
// skipped. tsv-token-lemma: `token<TAB>lemma` per line, blank line between
// sentences. Lemmas are lowercased at ingestion.
inline std::vector<std::vector<std::string>> read_lemma_sidecar(
    const std::string& path, SidecarFormat format) {
  auto lines = detail::read_lines_utf8(path);
  std::vector<std::vector<std::string>> sentences;
  std::vector<std::string> cur;
  auto flush = [&] {
    if (!cur.empty()) {
      sentences.push_back(std::move(cur));
      cur.clear();
    }
  };
  for (auto& line : lines) {
    if (trim(line).empty()) {
      flush();
      continue;
    }
    if (line[0] == '#') continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (format == SidecarFormat::kConllu) {
      if (cols.size() < 3)
        throw DataError("conllu line with fewer than 3 columns: " + line);
      const auto& id = cols[0];
      if (id.find('-') != std::string::npos || id.find('.') != std::string::npos)
        continue;  // multiword token range or empty node
      cur.push_back(utf8_lower(cols[2]));
    } else {
      if (cols.size() < 2)
        throw DataError("token-lemma line with no tab: " + line);
      cur.push_back(utf8_lower(cols[1]));
    }
  }
  flush();
  return sentences;
}

inline Corpus attach_lemmas(Corpus corpus, Side side, const std::string& sidecar_path,
                            SidecarFormat format) {
  auto sentences = read_lemma_sidecar(sidecar_path, format);
  if (sentences.size() != corpus.pairs.size())
    throw MissingSentence(static_cast<std::int64_t>(
        std::min(sentences.size(), corpus.pairs.size())));
  for (std::size_t i = 0; i < corpus.pairs.size(); ++i) {
    auto& pair = corpus.pairs[i];
    const auto& sent = side == Side::kSource ? pair.source : pair.target;
    if (sentences[i].size() != sent.size())
      throw TokenCountMismatch(pair.id, sent.size(), sentences[i].size());
    if (side == Side::kSource)
      pair.source_lemmas = std::move(sentences[i]);
    else
      pair.target_lemmas = std::move(sentences[i]);
  }
  return corpus;
}

// Drops pairs whose normalized target line is blacklisted. Ids of survivors
// are preserved.
inline Corpus exclude(const Corpus& corpus, const std::set<std::string>& blacklist) {
  Corpus out;
  out.provenance = corpus.provenance;
  out.pairs.reserve(corpus.pairs.size());
  for (const auto& p : corpus.pairs)
    if (!blacklist.count(normalize_line(p.target.raw))) out.pairs.push_back(p);
  return out;
}

}  // namespace lcmt
