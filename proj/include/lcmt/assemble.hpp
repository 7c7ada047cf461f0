#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lcmt/corpus.hpp"
#include "lcmt/errors.hpp"
#include "lcmt/synth.hpp"

namespace lcmt {

// Model-input serialization: suffix (optionally with the positional shift),
// prefix (mirror layout) and factored formats. Pure functions, parallel over
// pairs.

inline constexpr std::string_view kSepToken = "<sep>";
inline constexpr std::string_view kConstraintSep = "<c>";
inline constexpr std::int32_t kShiftBase = 1024;

enum class ExampleFormat { kSuffix, kSuffixShift, kPrefix, kFactored };
enum class FactorLabel : std::uint8_t { kO, kSrc, kTgt };

inline const char* factor_label_name(FactorLabel l) {
  // "0" for plain source tokens, matching the factored annotation scheme
  switch (l) {
    case FactorLabel::kO: return "0";
    case FactorLabel::kSrc: return "SRC";
    case FactorLabel::kTgt: return "TGT";
  }
  return "0";
}

inline const char* example_format_name(ExampleFormat f) {
  switch (f) {
    case ExampleFormat::kSuffix: return "suffix";
    case ExampleFormat::kSuffixShift: return "suffix-shift";
    case ExampleFormat::kPrefix: return "prefix";
    case ExampleFormat::kFactored: return "factored";
  }
  return "suffix";
}

struct AnnotatedExample {
  std::int64_t pair_id = -1;
  std::vector<std::string> input_tokens;
  std::string target_line;
  std::vector<std::int32_t> positions;  // one per input token
  std::optional<std::vector<FactorLabel>> factor_labels;
  ExampleFormat format = ExampleFormat::kSuffix;

  std::string input_line() const { return join(input_tokens); }
};

namespace detail {

// constraint block: c1 <c> c2 <c> ... (no leading <sep>)
inline std::vector<std::string> constraint_block(const ConstraintSet& cs) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < cs.constraints.size(); ++i) {
    if (i) out.emplace_back(kConstraintSep);
    const auto& toks = realize(cs.constraints[i]);
    out.insert(out.end(), toks.begin(), toks.end());
  }
  return out;
}

}  // namespace detail

// source ++ <sep> ++ constraints. Positions run 0..n-1 over the source; the
// suffix block continues at n, or starts at exactly 1024 when shift is set
// (<sep> itself takes 1024) and continues monotonically.
inline AnnotatedExample assemble_suffix(const SentencePair& pair,
                                        const ConstraintSet& cs, bool shift) {
  AnnotatedExample ex;
  ex.pair_id = pair.id;
  ex.format = shift ? ExampleFormat::kSuffixShift : ExampleFormat::kSuffix;
  ex.target_line = pair.target.raw;
  ex.input_tokens = pair.source.surfaces();
  const auto n = static_cast<std::int32_t>(ex.input_tokens.size());
  ex.positions.resize(ex.input_tokens.size());
  for (std::int32_t i = 0; i < n; ++i) ex.positions[static_cast<std::size_t>(i)] = i;
  if (cs.skipped || cs.constraints.empty()) return ex;
  auto block = detail::constraint_block(cs);
  ex.input_tokens.emplace_back(kSepToken);
  ex.input_tokens.insert(ex.input_tokens.end(), block.begin(), block.end());
  std::int32_t pos = shift ? kShiftBase : n;
  for (std::size_t i = static_cast<std::size_t>(n); i < ex.input_tokens.size(); ++i)
    ex.positions.push_back(pos++);
  return ex;
}

// constraints ++ <sep> ++ source (mirror of the suffix layout); positions
// monotone from 0.
inline AnnotatedExample assemble_prefix(const SentencePair& pair,
                                        const ConstraintSet& cs) {
  AnnotatedExample ex;
  ex.pair_id = pair.id;
  ex.format = ExampleFormat::kPrefix;
  ex.target_line = pair.target.raw;
  if (!cs.skipped && !cs.constraints.empty()) {
    ex.input_tokens = detail::constraint_block(cs);
    ex.input_tokens.emplace_back(kSepToken);
  }
  auto src = pair.source.surfaces();
  ex.input_tokens.insert(ex.input_tokens.end(), src.begin(), src.end());
  ex.positions.resize(ex.input_tokens.size());
  for (std::size_t i = 0; i < ex.positions.size(); ++i)
    ex.positions[i] = static_cast<std::int32_t>(i);
  return ex;
}

// Source walk with translations spliced in right after each matched span:
// span tokens labeled SRC, inserted translation tokens TGT, the rest O.
inline AnnotatedExample assemble_factored(const SentencePair& pair,
                                          const ConstraintSet& cs) {
  AnnotatedExample ex;
  ex.pair_id = pair.id;
  ex.format = ExampleFormat::kFactored;
  ex.target_line = pair.target.raw;
  std::vector<FactorLabel> labels;

  struct Placed {
    Span span;
    const Constraint* c;
  };
  std::vector<Placed> placed;
  if (!cs.skipped) {
    for (std::size_t i = 0; i < cs.constraints.size(); ++i) {
      const auto& c = cs.constraints[i];
      if (!c.source_span) throw MissingSourceSpan(i);
      if (c.source_span->begin < 0 ||
          c.source_span->end > static_cast<std::int32_t>(pair.source.size()) ||
          c.source_span->begin >= c.source_span->end)
        throw DataError("pair " + std::to_string(pair.id) +
                        ": constraint source span out of bounds");
      placed.push_back(Placed{*c.source_span, &c});
    }
    std::sort(placed.begin(), placed.end(),
              [](const Placed& a, const Placed& b) { return a.span.begin < b.span.begin; });
    for (std::size_t i = 1; i < placed.size(); ++i)
      if (placed[i - 1].span.end > placed[i].span.begin)
        throw DataError("pair " + std::to_string(pair.id) +
                        ": overlapping source spans in factored format");
  }

  std::size_t next = 0;
  for (std::int32_t i = 0; i < static_cast<std::int32_t>(pair.source.size()); ++i) {
    const bool in_span = next < placed.size() && i >= placed[next].span.begin &&
                         i < placed[next].span.end;
    ex.input_tokens.push_back(pair.source.tokens[static_cast<std::size_t>(i)].surface);
    labels.push_back(in_span ? FactorLabel::kSrc : FactorLabel::kO);
    if (next < placed.size() && i + 1 == placed[next].span.end) {
      for (const auto& tok : realize(*placed[next].c)) {
        ex.input_tokens.push_back(tok);
        labels.push_back(FactorLabel::kTgt);
      }
      ++next;
    }
  }
  ex.positions.resize(ex.input_tokens.size());
  for (std::size_t i = 0; i < ex.positions.size(); ++i)
    ex.positions[i] = static_cast<std::int32_t>(i);
  ex.factor_labels = std::move(labels);
  return ex;
}

inline AnnotatedExample assemble(const SentencePair& pair, const ConstraintSet& cs,
                                 ExampleFormat format) {
  switch (format) {
    case ExampleFormat::kSuffix: return assemble_suffix(pair, cs, false);
    case ExampleFormat::kSuffixShift: return assemble_suffix(pair, cs, true);
    case ExampleFormat::kPrefix: return assemble_prefix(pair, cs);
    case ExampleFormat::kFactored: return assemble_factored(pair, cs);
  }
  throw ConfigError("unknown example format");
}

// Factored text output: token|LABEL per token; tokens containing '|' are
// rejected upfront.
inline std::string factored_line(const AnnotatedExample& ex) {
  if (!ex.factor_labels) throw DataError("example has no factor labels");
  std::string out;
  for (std::size_t i = 0; i < ex.input_tokens.size(); ++i) {
    if (ex.input_tokens[i].find('|') != std::string::npos)
      throw DataError("token contains '|', cannot emit factored format: " +
                      ex.input_tokens[i]);
    if (i) out += ' ';
    out += ex.input_tokens[i];
    out += '|';
    out += factor_label_name((*ex.factor_labels)[i]);
  }
  return out;
}

inline nlohmann::json positions_to_json(const AnnotatedExample& ex) {
  nlohmann::json j;
  j["id"] = ex.pair_id;
  j["pos"] = ex.positions;
  return j;
}

// Inverse of the assembly step: recovers the source token sequence.
inline std::vector<std::string> strip_source(const AnnotatedExample& ex) {
  std::vector<std::string> out;
  switch (ex.format) {
    case ExampleFormat::kSuffix:
    case ExampleFormat::kSuffixShift: {
      for (const auto& t : ex.input_tokens) {
        if (t == kSepToken) break;
        out.push_back(t);
      }
      return out;
    }
    case ExampleFormat::kPrefix: {
      auto it = std::find(ex.input_tokens.begin(), ex.input_tokens.end(),
                          std::string(kSepToken));
      out.assign(it == ex.input_tokens.end() ? ex.input_tokens.begin() : it + 1,
                 ex.input_tokens.end());
      return out;
    }
    case ExampleFormat::kFactored: {
      if (!ex.factor_labels) throw DataError("example has no factor labels");
      for (std::size_t i = 0; i < ex.input_tokens.size(); ++i)
        if ((*ex.factor_labels)[i] != FactorLabel::kTgt)
          out.push_back(ex.input_tokens[i]);
      return out;
    }
  }
  return out;
}

// Rejects corpora that already contain the literal marker tokens; collisions
// must be explicit, not silent.
inline void check_no_special_tokens(const Corpus& corpus) {
  for (const auto& p : corpus.pairs)
    for (const auto* sent : {&p.source, &p.target})
      for (const auto& t : sent->tokens)
        if (t.surface == kSepToken || t.surface == kConstraintSep)
          throw DataError("pair " + std::to_string(p.id) +
                          " already contains marker token '" + t.surface + "'");
}

}  // namespace lcmt
