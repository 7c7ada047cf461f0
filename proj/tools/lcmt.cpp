// lcmt: corpus synthesis and evaluation toolkit for lexically constrained MT.
// Subcommands: synth, assemble, testset, eval, decode, stats.

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "lcmt/commands.hpp"
#include "lcmt/config.hpp"
#include "lcmt/version.hpp"

namespace {

struct FlagSpec {
  std::string key;   // option key
  std::string help;
};

void add_common_flags(CLI::App* cmd, std::map<std::string, std::string>* values,
                      const std::vector<FlagSpec>& specs) {
  for (const auto& s : specs)
    cmd->add_option("--" + s.key, (*values)[s.key], s.help);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lexically constrained MT data toolkit"};
  app.set_version_flag("--version", lcmt::kVersion);
  app.require_subcommand(1);

  std::map<std::string, std::map<std::string, std::string>> values;
  std::map<std::string, std::string> config_paths;

  const std::vector<FlagSpec> corpus_flags = {
      {"src", "source-side corpus file"},
      {"tgt", "target-side corpus file"},
      {"src-lemmas", "source lemma sidecar"},
      {"tgt-lemmas", "target lemma sidecar"},
      {"corpus-format", "moses-2-files|tsv"},
      {"sidecar-format", "conllu|tsv-token-lemma"},
      {"src-analyzer", "identity|lemma-table|stemmer"},
      {"src-analyzer-data", "lemma table / rule file for the source analyzer"},
      {"tgt-analyzer", "identity|lemma-table|stemmer"},
      {"tgt-analyzer-data", "lemma table / rule file for the target analyzer"},
  };
  const std::vector<FlagSpec> run_flags = {
      {"seed", "seed for randomized stages (required there)"},
      {"workers", "worker threads (default: hardware)"},
      {"out", "output path prefix"},
  };

  auto* synth = app.add_subcommand("synth", "generate constraint sets");
  add_common_flags(synth, &values["synth"], corpus_flags);
  add_common_flags(synth, &values["synth"], run_flags);
  add_common_flags(synth, &values["synth"],
                   {{"sampler", "random|dict"},
                    {"lexicon", "dictionary TSV for the dict sampler"},
                    {"p-start", "constraint start probability (default 0.3)"},
                    {"p-stop", "constraint stop probability (default 0.85)"},
                    {"skip-ratio", "fraction of sentences left unconstrained"},
                    {"form", "surface|lemma|mixed"}});

  auto* assemble = app.add_subcommand("assemble", "serialize model input lines");
  add_common_flags(assemble, &values["assemble"], corpus_flags);
  add_common_flags(assemble, &values["assemble"], run_flags);
  add_common_flags(assemble, &values["assemble"],
                   {{"constraints", "constraints JSONL from synth"},
                    {"format", "suffix|suffix-shift|prefix|factored"}});

  auto* testset = app.add_subcommand("testset", "build evaluation sets");
  add_common_flags(testset, &values["testset"], corpus_flags);
  add_common_flags(testset, &values["testset"], run_flags);
  add_common_flags(testset, &values["testset"],
                   {{"kind", "oracle|terminology|rare"},
                    {"lexicon", "dictionary / termbase TSV"},
                    {"cap-per-term", "terminology admission cap (default 10)"},
                    {"max-freq", "rare-word training frequency cap (default 50)"},
                    {"policy", "reference|random|none"},
                    {"train-src", "training corpus source side (rare)"},
                    {"train-tgt", "training corpus target side (rare)"},
                    {"train-src-lemmas", "training source lemma sidecar"},
                    {"train-tgt-lemmas", "training target lemma sidecar"}});

  auto* eval = app.add_subcommand("eval", "score hypotheses against a test set");
  add_common_flags(eval, &values["eval"], corpus_flags);
  add_common_flags(eval, &values["eval"], run_flags);
  add_common_flags(eval, &values["eval"],
                   {{"testset", "cases JSONL from testset"},
                    {"hyps", "hypothesis file, one line per case"}});
  eval->add_flag_callback(
      "--shuffle-check", [&values] { values["eval"]["shuffle-check"] = "true"; },
      "also run the constraint-shuffle sanity check (needs seed)");

  auto* decode = app.add_subcommand("decode", "constrained beam search decoding");
  add_common_flags(decode, &values["decode"], run_flags);
  add_common_flags(decode, &values["decode"],
                   {{"testset", "cases JSONL from testset"},
                    {"form", "surface|lemma|canonical"},
                    {"beam", "beam size (default 8)"},
                    {"max-len", "maximum output length (default 64)"},
                    {"lm-text", "text file to train the built-in n-gram LM"},
                    {"ngram-order", "LM order (default 3)"},
                    {"discount", "absolute discount in (0,1) (default 0.75)"},
                    {"scorer-cmd", "external scorer command (JSON line protocol)"},
                    {"vocab", "vocabulary file for the external scorer"}});

  auto* stats = app.add_subcommand("stats", "corpus / lexicon statistics");
  add_common_flags(stats, &values["stats"], corpus_flags);
  add_common_flags(stats, &values["stats"], run_flags);
  add_common_flags(stats, &values["stats"], {{"lexicon", "dictionary TSV"}});

  for (auto* cmd : {synth, assemble, testset, eval, decode, stats})
    cmd->add_option("--config", config_paths[cmd->get_name()],
                    "key=value config file with per-subcommand sections");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);  // prints help / error text
    return rc == 0 ? 0 : 1;     // 0 for --help/--version, 1 for usage errors
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    lcmt::Options flags;
    for (const auto& [k, v] : values[sub])
      if (!v.empty()) flags.set(k, v);
    std::map<std::string, lcmt::Options> file_sections;
    if (!config_paths[sub].empty())
      file_sections = lcmt::parse_config_file(config_paths[sub]);
    const lcmt::Options opt = lcmt::resolve_options(file_sections, sub, flags);

    if (sub == "synth") return lcmt::run_synth(opt);
    if (sub == "assemble") return lcmt::run_assemble(opt);
    if (sub == "testset") return lcmt::run_testset(opt);
    if (sub == "eval") return lcmt::run_eval(opt);
    if (sub == "decode") return lcmt::run_decode(opt);
    if (sub == "stats") return lcmt::run_stats(opt);
    std::cerr << "unknown subcommand: " << sub << '\n';
    return 1;
  } catch (const lcmt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const lcmt::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
