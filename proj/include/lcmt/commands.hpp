#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "lcmt/assemble.hpp"
#include "lcmt/bench.hpp"
#include "lcmt/config.hpp"
#include "lcmt/corpus.hpp"
#include "lcmt/decode.hpp"
#include "lcmt/eval.hpp"
#include "lcmt/lexicon.hpp"
#include "lcmt/manifest.hpp"
#include "lcmt/morph.hpp"
#include "lcmt/subprocess.hpp"
#include "lcmt/synth.hpp"

namespace lcmt {

// Subcommand drivers shared by the CLI and the test suite. Exit codes:
// 0 success, 1 usage/config error (ConfigError), 2 data error (DataError),
// 3 empty-result warning.

inline constexpr int kExitOk = 0;
inline constexpr int kExitEmpty = 3;

namespace detail {

// Deterministic parallel map: results land in per-index slots, output order
// never depends on the worker count. The first worker exception is rethrown
// on the calling thread.
template <class Fn>
inline void parallel_for(std::size_t n, int workers, Fn&& fn) {
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto run = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int count = std::min<int>(workers, static_cast<int>(n));
  pool.reserve(static_cast<std::size_t>(count));
  for (int w = 0; w < count; ++w) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline int worker_count(const Options& opt) {
  const auto n = opt.get_int("workers", 0);
  if (n > 0) return static_cast<int>(n);
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

inline Analyzer analyzer_from(const Options& opt, const std::string& prefix) {
  const std::string kind = opt.get(prefix + "-analyzer", "identity");
  if (kind == "identity") return Analyzer::identity();
  if (kind == "lemma-table")
    return load_lemma_table(opt.get(prefix + "-analyzer-data"));
  if (kind == "stemmer")
    return Analyzer::stemmer(load_stem_rules(opt.get(prefix + "-analyzer-data")));
  throw ConfigError("unknown analyzer kind '" + kind + "' (identity|lemma-table|stemmer)");
}

inline ParallelFormat parallel_format_from(const Options& opt) {
  const std::string f = opt.get("corpus-format", "moses-2-files");
  if (f == "moses-2-files") return ParallelFormat::kMoses2Files;
  if (f == "tsv") return ParallelFormat::kTsv;
  throw ConfigError("unknown corpus format '" + f + "' (moses-2-files|tsv)");
}

inline SidecarFormat sidecar_format_from(const Options& opt) {
  const std::string f = opt.get("sidecar-format", "tsv-token-lemma");
  if (f == "conllu") return SidecarFormat::kConllu;
  if (f == "tsv-token-lemma") return SidecarFormat::kTsvTokenLemma;
  throw ConfigError("unknown sidecar format '" + f + "' (conllu|tsv-token-lemma)");
}

// Loads the parallel corpus named by src/tgt keys, attaches lemma sidecars
// when given, otherwise derives lemma layers from the configured analyzers
// when `derive_lemmas` is set.
inline Corpus load_corpus(const Options& opt, const std::string& src_key,
                          const std::string& tgt_key, const std::string& src_lemmas_key,
                          const std::string& tgt_lemmas_key, bool derive_lemmas,
                          std::vector<std::string>* inputs) {
  const std::string src = opt.get(src_key);
  const auto fmt = parallel_format_from(opt);
  const std::string tgt = fmt == ParallelFormat::kTsv ? src : opt.get(tgt_key);
  Corpus corpus = load_parallel(src, tgt, fmt);
  if (inputs) {
    inputs->push_back(src);
    if (tgt != src) inputs->push_back(tgt);
  }
  const auto sidecar_fmt = sidecar_format_from(opt);
  if (opt.has(src_lemmas_key)) {
    corpus = attach_lemmas(std::move(corpus), Side::kSource, opt.get(src_lemmas_key),
                           sidecar_fmt);
    if (inputs) inputs->push_back(opt.get(src_lemmas_key));
  }
  if (opt.has(tgt_lemmas_key)) {
    corpus = attach_lemmas(std::move(corpus), Side::kTarget, opt.get(tgt_lemmas_key),
                           sidecar_fmt);
    if (inputs) inputs->push_back(opt.get(tgt_lemmas_key));
  }
  if (derive_lemmas) {
    const Analyzer src_an = analyzer_from(opt, "src");
    const Analyzer tgt_an = analyzer_from(opt, "tgt");
    for (auto& p : corpus.pairs) {
      if (!p.source_lemmas) p.source_lemmas = src_an.normalize_sequence(p.source.surfaces());
      if (!p.target_lemmas) p.target_lemmas = tgt_an.normalize_sequence(p.target.surfaces());
    }
  }
  return corpus;
}

inline TermLexicon load_lexicon_from(const Options& opt, LexiconMode mode,
                                     std::vector<std::string>* inputs) {
  const std::string path = opt.get("lexicon");
  if (inputs) inputs->push_back(path);
  return build_lexicon(path, analyzer_from(opt, "src"), analyzer_from(opt, "tgt"), mode);
}

inline FormMode form_mode_from(const std::string& s) {
  if (s == "surface") return FormMode::kSurface;
  if (s == "lemma") return FormMode::kLemma;
  if (s == "mixed") return FormMode::kMixed;
  throw ConfigError("unknown form '" + s + "' (surface|lemma|mixed)");
}

inline ExampleFormat example_format_from(const std::string& s) {
  if (s == "suffix") return ExampleFormat::kSuffix;
  if (s == "suffix-shift") return ExampleFormat::kSuffixShift;
  if (s == "prefix") return ExampleFormat::kPrefix;
  if (s == "factored") return ExampleFormat::kFactored;
  throw ConfigError("unknown format '" + s + "' (suffix|suffix-shift|prefix|factored)");
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << content;
}

struct ManifestScope {
  RunManifest m;
  std::string path;

  ManifestScope(std::string subcommand, const Options& opt, std::string out_prefix)
      : path(std::move(out_prefix)) {
    m.subcommand = std::move(subcommand);
    m.options = opt;
    m.started = iso8601_now();
  }

  void add_inputs(const std::vector<std::string>& paths) {
    for (const auto& p : paths) m.input_digests[p] = file_digest(p);
  }

  void add_output(const std::string& p) { m.output_digests[p] = file_digest(p); }

  void finish() {
    m.finished = iso8601_now();
    write_manifest(m, path + ".manifest.json");
  }
};

inline TestSet load_testset(const Options& opt, std::vector<std::string>* inputs) {
  const std::string path = opt.get("testset");
  if (inputs) inputs->push_back(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open testset: " + path);
  return read_testset(in);
}

}  // namespace detail

inline int run_synth(const Options& opt) {
  const std::string out_prefix = opt.get("out");
  detail::ManifestScope manifest("synth", opt, out_prefix);
  std::vector<std::string> inputs;
  Corpus corpus = detail::load_corpus(opt, "src", "tgt", "src-lemmas", "tgt-lemmas",
                                      /*derive_lemmas=*/true, &inputs);
  check_no_special_tokens(corpus);

  SamplerConfig cfg;
  cfg.p_start = opt.get_double("p-start", 0.3);
  cfg.p_stop = opt.get_double("p-stop", 0.85);
  cfg.skip_ratio = opt.get_double("skip-ratio", 0.0);
  if (cfg.p_start < 0 || cfg.p_start > 1 || cfg.p_stop < 0 || cfg.p_stop > 1 ||
      cfg.skip_ratio < 0 || cfg.skip_ratio > 1)
    throw ConfigError("probabilities must lie in [0, 1]");
  cfg.seed = opt.require_seed();
  cfg.form_mode = detail::form_mode_from(opt.get("form", "surface"));

  const std::string sampler = opt.get("sampler", "random");
  std::unique_ptr<TermLexicon> lexicon;
  if (sampler == "dict")
    lexicon = std::make_unique<TermLexicon>(
        detail::load_lexicon_from(opt, LexiconMode::kDictionary, &inputs));
  else if (sampler != "random")
    throw ConfigError("unknown sampler '" + sampler + "' (random|dict)");

  std::vector<std::string> lines(corpus.size());
  detail::parallel_for(corpus.size(), detail::worker_count(opt), [&](std::size_t i) {
    const auto& pair = corpus.pairs[i];
    const ConstraintSet cs = lexicon ? sample_dictionary(pair, *lexicon, cfg)
                                     : sample_random(pair, cfg);
    lines[i] = constraint_set_to_json(cs).dump();
  });

  std::string body;
  for (const auto& l : lines) {
    body += l;
    body += '\n';
  }
  const std::string out_path = out_prefix + ".constraints.jsonl";
  detail::write_file(out_path, body);
  manifest.add_inputs(inputs);
  manifest.add_output(out_path);
  manifest.finish();
  return corpus.empty() ? kExitEmpty : kExitOk;
}

inline int run_assemble(const Options& opt) {
  const std::string out_prefix = opt.get("out");
  detail::ManifestScope manifest("assemble", opt, out_prefix);
  std::vector<std::string> inputs;
  Corpus corpus = detail::load_corpus(opt, "src", "tgt", "src-lemmas", "tgt-lemmas",
                                      /*derive_lemmas=*/false, &inputs);
  check_no_special_tokens(corpus);
  const ExampleFormat format = detail::example_format_from(opt.get("format", "suffix"));

  const std::string cpath = opt.get("constraints");
  inputs.push_back(cpath);
  std::vector<ConstraintSet> sets;
  {
    std::ifstream in(cpath, std::ios::binary);
    if (!in) throw DataError("cannot open constraints file: " + cpath);
    std::string line;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      sets.push_back(constraint_set_from_json(nlohmann::json::parse(line)));
    }
  }
  if (sets.size() != corpus.size())
    throw LineCountMismatch(corpus.size(), sets.size());
  for (std::size_t i = 0; i < sets.size(); ++i)
    if (sets[i].pair_id != corpus.pairs[i].id)
      throw DataError("constraint set " + std::to_string(i) + " has pair id " +
                      std::to_string(sets[i].pair_id) + ", expected " +
                      std::to_string(corpus.pairs[i].id));

  std::vector<AnnotatedExample> examples(corpus.size());
  detail::parallel_for(corpus.size(), detail::worker_count(opt), [&](std::size_t i) {
    examples[i] = assemble(corpus.pairs[i], sets[i], format);
  });

  std::string input_body, target_body, pos_body;
  for (const auto& ex : examples) {
    input_body += format == ExampleFormat::kFactored ? factored_line(ex) : ex.input_line();
    input_body += '\n';
    target_body += ex.target_line;
    target_body += '\n';
    pos_body += positions_to_json(ex).dump();
    pos_body += '\n';
  }
  const std::string input_path = out_prefix + ".input.txt";
  const std::string target_path = out_prefix + ".target.txt";
  const std::string pos_path = out_prefix + ".pos.jsonl";
  detail::write_file(input_path, input_body);
  detail::write_file(target_path, target_body);
  detail::write_file(pos_path, pos_body);
  manifest.add_inputs(inputs);
  manifest.add_output(input_path);
  manifest.add_output(target_path);
  manifest.add_output(pos_path);
  manifest.finish();
  return corpus.empty() ? kExitEmpty : kExitOk;
}

inline int run_testset(const Options& opt) {
  const std::string out_prefix = opt.get("out");
  detail::ManifestScope manifest("testset", opt, out_prefix);
  std::vector<std::string> inputs;
  const std::string kind = opt.get("kind");

  TestSet ts;
  if (kind == "oracle") {
    Corpus corpus = detail::load_corpus(opt, "src", "tgt", "src-lemmas", "tgt-lemmas",
                                        /*derive_lemmas=*/true, &inputs);
    auto lexicon = detail::load_lexicon_from(opt, LexiconMode::kDictionary, &inputs);
    ts = build_oracle(corpus, lexicon);
  } else if (kind == "terminology") {
    Corpus corpus = detail::load_corpus(opt, "src", "tgt", "src-lemmas", "tgt-lemmas",
                                        /*derive_lemmas=*/true, &inputs);
    auto termbase = detail::load_lexicon_from(opt, LexiconMode::kTerminology, &inputs);
    ts = build_terminology(corpus, termbase,
                           static_cast<int>(opt.get_int("cap-per-term", 10)));
  } else if (kind == "rare") {
    Corpus eval_corpus = detail::load_corpus(opt, "src", "tgt", "src-lemmas",
                                             "tgt-lemmas", /*derive_lemmas=*/true, &inputs);
    Corpus train = detail::load_corpus(opt, "train-src", "train-tgt", "train-src-lemmas",
                                       "train-tgt-lemmas", /*derive_lemmas=*/true, &inputs);
    auto lexicon = detail::load_lexicon_from(opt, LexiconMode::kDictionary, &inputs);
    const auto freqs = term_frequencies(lexicon, train);
    const std::string policy_str = opt.get("policy", "reference");
    const Policy policy = policy_str == "reference" ? Policy::kReference
                          : policy_str == "random"  ? Policy::kRandom
                          : policy_str == "none"
                              ? Policy::kNone
                              : throw ConfigError("unknown policy '" + policy_str + "'");
    const std::uint64_t seed = policy == Policy::kRandom ? opt.require_seed()
                                                         : opt.get_int("seed", 0);
    ts = build_rare(freqs, lexicon, eval_corpus, opt.get_int("max-freq", 50), policy,
                    seed);
  } else {
    throw ConfigError("unknown testset kind '" + kind + "' (oracle|terminology|rare)");
  }

  std::ostringstream cases;
  write_testset(cases, ts);
  const std::string cases_path = out_prefix + ".cases.jsonl";
  detail::write_file(cases_path, cases.str());
  const std::string tsman_path = out_prefix + ".testset-manifest.json";
  detail::write_file(tsman_path, manifest_to_json(ts.manifest).dump(2) + "\n");
  std::string excl_body;
  for (const auto& line : emit_exclusion(ts)) {
    excl_body += line;
    excl_body += '\n';
  }
  const std::string excl_path = out_prefix + ".exclusion.txt";
  detail::write_file(excl_path, excl_body);

  manifest.add_inputs(inputs);
  manifest.add_output(cases_path);
  manifest.add_output(tsman_path);
  manifest.add_output(excl_path);
  manifest.finish();
  if (ts.cases.empty()) {
    std::cerr << "warning: test set is empty\n";
    return kExitEmpty;
  }
  return kExitOk;
}

inline int run_eval(const Options& opt, std::ostream& out = std::cout) {
  const std::string out_prefix = opt.get("out");
  detail::ManifestScope manifest("eval", opt, out_prefix);
  std::vector<std::string> inputs;
  TestSet ts = detail::load_testset(opt, &inputs);
  const std::string hyps_path = opt.get("hyps");
  inputs.push_back(hyps_path);
  const auto hyps = detail::read_lines(hyps_path);
  const Analyzer analyzer = detail::analyzer_from(opt, "tgt");
  if (opt.has("tgt-analyzer-data")) inputs.push_back(opt.get("tgt-analyzer-data"));

  const bool with_shuffle = opt.get_bool("shuffle-check", false);
  const std::uint64_t seed = with_shuffle ? opt.require_seed() : 0;
  const EvalReport rep = evaluate(hyps, ts, analyzer, with_shuffle, seed);

  const std::string report_path = out_prefix + ".report.json";
  detail::write_file(report_path, report_to_json(rep).dump(2) + "\n");
  std::string review_body;
  for (const auto& item : rep.review_queue) {
    review_body += review_item_to_json(item).dump();
    review_body += '\n';
  }
  const std::string review_path = out_prefix + ".review.jsonl";
  detail::write_file(review_path, review_body);
  out << summary_table(rep);

  manifest.add_inputs(inputs);
  manifest.add_output(report_path);
  manifest.add_output(review_path);
  manifest.finish();
  return ts.cases.empty() ? kExitEmpty : kExitOk;
}

inline int run_decode(const Options& opt) {
  const std::string out_prefix = opt.get("out");
  detail::ManifestScope manifest("decode", opt, out_prefix);
  std::vector<std::string> inputs;
  TestSet ts = detail::load_testset(opt, &inputs);

  std::unique_ptr<Scorer> scorer;
  bool scorer_parallel = true;
  if (opt.has("scorer-cmd")) {
    const std::string vocab_path = opt.get("vocab");
    inputs.push_back(vocab_path);
    scorer = std::make_unique<ProcessScorer>(opt.get("scorer-cmd"), load_vocab(vocab_path));
    scorer_parallel = false;  // single pipe, keep requests ordered
  } else {
    const std::string lm_text = opt.get("lm-text");
    inputs.push_back(lm_text);
    Corpus mono;
    {
      auto lines = detail::read_lines(lm_text);
      mono.pairs.reserve(lines.size());
      for (std::size_t i = 0; i < lines.size(); ++i) {
        SentencePair p;
        p.id = static_cast<std::int64_t>(i);
        p.target = Sentence::from_line(lines[i]);
        mono.pairs.push_back(std::move(p));
      }
    }
    scorer = std::make_unique<NGramLM>(
        train_ngram(mono, static_cast<int>(opt.get_int("ngram-order", 3)),
                    opt.get_double("discount", 0.75)));
  }

  const std::string form_str = opt.get("form", "canonical");
  const EmitForm form = form_str == "surface"     ? EmitForm::kSurface
                        : form_str == "lemma"     ? EmitForm::kLemma
                        : form_str == "canonical" ? EmitForm::kCanonical
                                                  : throw ConfigError(
                                                        "unknown decode form '" +
                                                        form_str + "'");
  const int beam = static_cast<int>(opt.get_int("beam", 8));
  const int max_len = static_cast<int>(opt.get_int("max-len", 64));

  std::vector<std::string> hyps(ts.cases.size());
  std::atomic<std::size_t> unsatisfied{0};
  const int workers = scorer_parallel ? detail::worker_count(opt) : 1;
  detail::parallel_for(ts.cases.size(), workers, [&](std::size_t i) {
    const auto& tc = ts.cases[i];
    std::vector<std::vector<TokenId>> constraints;
    for (const auto& c : tc.constraints) {
      std::vector<TokenId> ids;
      for (const auto& tok : realize(c, form)) {
        auto it = scorer->vocab().token_to_id.find(tok);
        if (it == scorer->vocab().token_to_id.end())
          throw ConstraintTokenOutOfVocab(tok);
        ids.push_back(it->second);
      }
      constraints.push_back(std::move(ids));
    }
    auto res = constrained_beam_search(*scorer, constraints, beam, max_len);
    if (!res.satisfied) ++unsatisfied;
    hyps[i] = res.text(scorer->vocab());
  });

  std::string body;
  for (const auto& h : hyps) {
    body += h;
    body += '\n';
  }
  const std::string hyp_path = out_prefix + ".hyp.txt";
  detail::write_file(hyp_path, body);
  if (unsatisfied > 0)
    std::cerr << "warning: " << unsatisfied
              << " case(s) returned partial hypotheses (constraints unsatisfied)\n";
  manifest.add_inputs(inputs);
  manifest.add_output(hyp_path);
  manifest.finish();
  return ts.cases.empty() ? kExitEmpty : kExitOk;
}

inline int run_stats(const Options& opt, std::ostream& out = std::cout) {
  nlohmann::json j;
  std::vector<std::string> inputs;
  if (opt.has("src")) {
    Corpus corpus = detail::load_corpus(opt, "src", "tgt", "src-lemmas", "tgt-lemmas",
                                        /*derive_lemmas=*/false, &inputs);
    std::int64_t src_tokens = 0, tgt_tokens = 0;
    for (const auto& p : corpus.pairs) {
      src_tokens += static_cast<std::int64_t>(p.source.size());
      tgt_tokens += static_cast<std::int64_t>(p.target.size());
    }
    j["corpus"] = {{"pairs", corpus.size()},
                   {"source_tokens", src_tokens},
                   {"target_tokens", tgt_tokens}};
    if (!corpus.empty() && corpus.pairs.front().target_lemmas) {
      auto [analyzer, stats] = build_lemma_table(corpus, Side::kTarget);
      (void)analyzer;
      j["target_lemma_table"] = {
          {"surfaces", stats.surfaces},
          {"ambiguous_surfaces", stats.ambiguous_surfaces},
          {"conflict_tokens", stats.conflict_tokens},
          {"ambiguity_rate",
           stats.surfaces == 0 ? 0.0
                               : static_cast<double>(stats.ambiguous_surfaces) /
                                     static_cast<double>(stats.surfaces)}};
    }
    if (opt.has("lexicon")) {
      auto lexicon = detail::load_lexicon_from(opt, LexiconMode::kDictionary, &inputs);
      j["lexicon"] = {{"entries", lexicon.entries().size()},
                      {"trivial_dropped", lexicon.dropped_trivial()}};
      if (!corpus.empty() && corpus.pairs.front().source_lemmas) {
        const auto freqs = term_frequencies(lexicon, corpus);
        std::int64_t total = 0, max = 0;
        for (const auto& [id, n] : freqs) {
          total += n;
          max = std::max(max, n);
        }
        j["term_frequencies"] = {{"entries_with_hits", freqs.size()},
                                 {"total_occurrences", total},
                                 {"max_occurrences", max}};
      }
    }
  } else if (opt.has("lexicon")) {
    auto lexicon = detail::load_lexicon_from(opt, LexiconMode::kDictionary, &inputs);
    j["lexicon"] = {{"entries", lexicon.entries().size()},
                    {"trivial_dropped", lexicon.dropped_trivial()}};
  } else {
    throw ConfigError("stats needs --src (and optionally --lexicon)");
  }
  out << j.dump(2) << '\n';
  return kExitOk;
}

}  // namespace lcmt
