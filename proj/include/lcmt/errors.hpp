#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lcmt {

// Base of all toolkit errors. ConfigError maps to exit code 1, DataError to 2.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct DataError : Error {
  using Error::Error;
};

struct LineCountMismatch : DataError {
  std::size_t source_lines, target_lines;
  LineCountMismatch(std::size_t s, std::size_t t)
      : DataError("line count mismatch: source has " + std::to_string(s) +
                  " lines, target has " + std::to_string(t)),
        source_lines(s),
        target_lines(t) {}
};

struct Utf8Error : DataError {
  std::size_t line_no;
  explicit Utf8Error(std::size_t line)
      : DataError("invalid UTF-8 on line " + std::to_string(line)),
        line_no(line) {}
};

struct TokenCountMismatch : DataError {
  std::int64_t pair_id;
  TokenCountMismatch(std::int64_t id, std::size_t tokens, std::size_t lemmas)
      : DataError("pair " + std::to_string(id) + ": sentence has " +
                  std::to_string(tokens) + " tokens but sidecar has " +
                  std::to_string(lemmas) + " lemmas"),
        pair_id(id) {}
};

struct MissingSentence : DataError {
  std::int64_t pair_id;
  explicit MissingSentence(std::int64_t id)
      : DataError("sidecar sentence count does not match corpus; first "
                  "unmatched pair id " +
                  std::to_string(id)),
        pair_id(id) {}
};

struct MissingLemmaLayer : DataError {
  std::string side;
  explicit MissingLemmaLayer(std::string s)
      : DataError("missing lemma layer on " + s + " side"), side(std::move(s)) {}
};

struct EmptyEntry : DataError {
  std::size_t line_no;
  explicit EmptyEntry(std::size_t line)
      : DataError("empty lexicon entry on line " + std::to_string(line)),
        line_no(line) {}
};

struct MissingForm : DataError {
  std::string form;
  explicit MissingForm(std::string f)
      : DataError("constraint has no tokens for requested form '" + f + "'"),
        form(std::move(f)) {}
};

struct MissingSourceSpan : DataError {
  std::size_t constraint_index;
  explicit MissingSourceSpan(std::size_t idx)
      : DataError("constraint " + std::to_string(idx) +
                  " has no source span (required by factored format)"),
        constraint_index(idx) {}
};

struct NoReferenceVariant : DataError {
  std::int64_t pair_id;
  std::string term;
  NoReferenceVariant(std::int64_t id, std::string t)
      : DataError("pair " + std::to_string(id) +
                  ": no dictionary variant of '" + t +
                  "' found in the reference"),
        pair_id(id),
        term(std::move(t)) {}
};

struct ConstraintTokenOutOfVocab : DataError {
  std::string token;
  explicit ConstraintTokenOutOfVocab(std::string t)
      : DataError("constraint token out of scorer vocabulary: '" + t + "'"),
        token(std::move(t)) {}
};

struct EmptyCorpus : DataError {
  EmptyCorpus() : DataError("corpus is empty") {}
};

struct LengthMismatch : DataError {
  std::size_t hyps, refs;
  LengthMismatch(std::size_t h, std::size_t r)
      : DataError("hypothesis/reference count mismatch: " + std::to_string(h) +
                  " vs " + std::to_string(r)),
        hyps(h),
        refs(r) {}
};

}  // namespace lcmt
