#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <map>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "lcmt/bench.hpp"
#include "lcmt/corpus.hpp"
#include "lcmt/errors.hpp"
#include "lcmt/synth.hpp"

namespace lcmt {

// Reference lexically constrained beam search: hypotheses are banked by the
// number of constraint tokens completed and the k beam slots are shared
// across banks, so any number of constraints fits in a constant beam width.
// The token scorer is pluggable; a built-in n-gram LM covers desk-scale
// experiments and a line-delimited JSON protocol covers external scorers.

using TokenId = std::int32_t;

struct Vocab {
  std::vector<std::string> id_to_token;
  std::unordered_map<std::string, TokenId> token_to_id;
  TokenId unk = 0, bos = 1, eos = 2;

  static Vocab with_specials() {
    Vocab v;
    v.add("<unk>");
    v.add("<s>");
    v.add("</s>");
    return v;
  }

  TokenId add(const std::string& tok) {
    auto it = token_to_id.find(tok);
    if (it != token_to_id.end()) return it->second;
    const TokenId id = static_cast<TokenId>(id_to_token.size());
    id_to_token.push_back(tok);
    token_to_id.emplace(tok, id);
    return id;
  }

  TokenId lookup(const std::string& tok) const {
    auto it = token_to_id.find(tok);
    return it == token_to_id.end() ? unk : it->second;
  }

  std::size_t size() const { return id_to_token.size(); }
};

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

// Contract: score_next returns one log-probability per vocabulary id for
// the continuation of `prefix` (generated tokens only, <s> implied);
// probabilities over all ids except <s> sum to 1, the <s> entry is -inf.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::vector<double> score_next(const std::vector<TokenId>& prefix) const = 0;
  virtual const Vocab& vocab() const = 0;
};

// Interpolated absolute discounting n-gram model. Every training sentence
// contributes its tokens plus one sentence-end event at each order; unseen
// contexts back off through lower orders down to uniform over the
// predictable vocabulary (everything except <s>).
class NGramLM : public Scorer {
 public:
  NGramLM(int order, double discount) : order_(order), discount_(discount) {
    if (order < 1) throw ConfigError("n-gram order must be >= 1");
    if (discount <= 0.0 || discount >= 1.0)
      throw ConfigError("discount must lie in (0, 1)");
    contexts_.resize(static_cast<std::size_t>(order));
  }

  void add_sentence(const std::vector<TokenId>& tokens) {
    std::vector<TokenId> padded;
    padded.reserve(tokens.size() + static_cast<std::size_t>(order_));
    for (int i = 0; i + 1 < order_; ++i) padded.push_back(vocab_.bos);
    padded.insert(padded.end(), tokens.begin(), tokens.end());
    padded.push_back(vocab_.eos);
    const std::size_t lead = static_cast<std::size_t>(order_ - 1);
    for (std::size_t t = lead; t < padded.size(); ++t) {
      for (int k = 1; k <= order_; ++k) {
        const std::size_t uk = static_cast<std::size_t>(k);
        auto& ctx = contexts_[uk - 1][encode(&padded[t - (uk - 1)], uk - 1)];
        ++ctx.total;
        ++ctx.cont[padded[t]];
      }
    }
  }

  std::vector<double> score_next(const std::vector<TokenId>& prefix) const override {
    std::vector<const Context*> chain(static_cast<std::size_t>(order_), nullptr);
    std::vector<TokenId> padded;
    padded.reserve(prefix.size() + static_cast<std::size_t>(order_ - 1));
    for (int i = 0; i + 1 < order_; ++i) padded.push_back(vocab_.bos);
    padded.insert(padded.end(), prefix.begin(), prefix.end());
    for (int k = 1; k <= order_; ++k) {
      const std::size_t uk = static_cast<std::size_t>(k);
      const auto& level = contexts_[uk - 1];
      auto it = level.find(encode(padded.data() + padded.size() - (uk - 1), uk - 1));
      if (it != level.end()) chain[uk - 1] = &it->second;
    }
    const double uniform = 1.0 / static_cast<double>(vocab_.size() - 1);
    std::vector<double> out(vocab_.size());
    for (TokenId w = 0; w < static_cast<TokenId>(vocab_.size()); ++w) {
      if (w == vocab_.bos) {
        out[static_cast<std::size_t>(w)] = kLogZero;
        continue;
      }
      double p = uniform;
      for (int k = 1; k <= order_; ++k) {
        const Context* ctx = chain[static_cast<std::size_t>(k - 1)];
        if (!ctx || ctx->total == 0) continue;  // back off: p_k = p_{k-1}
        const double c = static_cast<double>(ctx->total);
        const double types = static_cast<double>(ctx->cont.size());
        auto it = ctx->cont.find(w);
        const double cnt = it == ctx->cont.end() ? 0.0 : static_cast<double>(it->second);
        p = std::max(cnt - discount_, 0.0) / c + (discount_ * types / c) * p;
      }
      out[static_cast<std::size_t>(w)] = std::log(p);
    }
    return out;
  }

  const Vocab& vocab() const override { return vocab_; }
  Vocab& mutable_vocab() { return vocab_; }
  int order() const { return order_; }
  double discount() const { return discount_; }

 private:
  struct Context {
    std::int64_t total = 0;
    std::unordered_map<TokenId, std::int64_t> cont;
  };

  static std::string encode(const TokenId* ids, std::size_t n) {
    return std::string(reinterpret_cast<const char*>(ids), n * sizeof(TokenId));
  }

  int order_;
  double discount_;
  Vocab vocab_ = Vocab::with_specials();
  std::vector<std::unordered_map<std::string, Context>> contexts_;
};

inline NGramLM train_ngram(const Corpus& corpus, int order, double discount,
                           Side side = Side::kTarget) {
  if (corpus.empty()) throw EmptyCorpus();
  NGramLM lm(order, discount);
  // deterministic ids: sorted unique tokens after the specials
  std::vector<std::string> toks;
  for (const auto& p : corpus.pairs) {
    const auto& sent = side == Side::kTarget ? p.target : p.source;
    for (const auto& t : sent.tokens) toks.push_back(t.surface);
  }
  std::sort(toks.begin(), toks.end());
  toks.erase(std::unique(toks.begin(), toks.end()), toks.end());
  for (const auto& t : toks) lm.mutable_vocab().add(t);
  for (const auto& p : corpus.pairs) {
    const auto& sent = side == Side::kTarget ? p.target : p.source;
    std::vector<TokenId> ids;
    ids.reserve(sent.size());
    for (const auto& t : sent.tokens) ids.push_back(lm.vocab().lookup(t.surface));
    lm.add_sentence(ids);
  }
  return lm;
}

namespace detail {

// KMP automaton per unique constraint pattern; resetting on completion makes
// the completed count the greedy-maximal number of disjoint occurrences in
// the generated prefix, so tokens_met certifies exactly the multiset
// containment the evaluator checks.
struct PatternAutomaton {
  std::vector<TokenId> pattern;
  std::vector<std::int32_t> fail;  // classic prefix function
  std::int32_t needed = 0;         // multiset count of this pattern

  explicit PatternAutomaton(std::vector<TokenId> pat, std::int32_t count)
      : pattern(std::move(pat)), fail(pattern.size(), 0), needed(count) {
    for (std::size_t i = 1; i < pattern.size(); ++i) {
      std::int32_t s = fail[i - 1];
      while (s > 0 && pattern[static_cast<std::size_t>(s)] != pattern[i])
        s = fail[static_cast<std::size_t>(s - 1)];
      if (pattern[static_cast<std::size_t>(s)] == pattern[i]) ++s;
      fail[i] = s;
    }
  }

  // advances state by token t; returns (new_state, completed_now)
  std::pair<std::int32_t, bool> step(std::int32_t s, TokenId t) const {
    while (s > 0 && pattern[static_cast<std::size_t>(s)] != t)
      s = fail[static_cast<std::size_t>(s - 1)];
    if (pattern[static_cast<std::size_t>(s)] == t) ++s;
    if (s == static_cast<std::int32_t>(pattern.size())) return {0, true};
    return {s, false};
  }
};

struct Hyp {
  std::vector<TokenId> tokens;
  double logprob = 0.0;
  std::vector<std::int32_t> states;     // per pattern automaton
  std::vector<std::int32_t> completed;  // per pattern
  std::int32_t tokens_met = 0;
};

inline bool better(const Hyp& a, const Hyp& b) {
  if (a.logprob != b.logprob) return a.logprob > b.logprob;
  return a.tokens < b.tokens;  // deterministic tie-break
}

}  // namespace detail

struct DecodeResult {
  std::vector<TokenId> tokens;  // includes the final </s> when satisfied
  double logprob = 0.0;
  bool satisfied = false;  // all constraints covered and </s> reached

  std::string text(const Vocab& v) const {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (tokens[i] == v.eos) continue;
      if (!out.empty()) out += ' ';
      out += v.id_to_token[static_cast<std::size_t>(tokens[i])];
    }
    return out;
  }
};

// Dynamic-bank constrained beam search. Banks are indexed by tokens_met in
// [0, C_total]; each step every live hypothesis expands by its top-scoring
// ordinary tokens and by every token advancing a constraint, k slots are
// split evenly over non-empty banks with remainders going to banks with more
// tokens met, and </s> is permitted only once every constraint is covered.
// If nothing finishes within max_len the best partial comes back with
// satisfied=false.
inline DecodeResult constrained_beam_search(
    const Scorer& scorer, const std::vector<std::vector<TokenId>>& constraints,
    int beam_size, int max_len) {
  if (beam_size < 1) throw ConfigError("beam size must be >= 1");
  const Vocab& vocab = scorer.vocab();
  for (const auto& pat : constraints) {
    if (pat.empty()) throw ConfigError("empty constraint token sequence");
    for (TokenId t : pat) {
      if (t < 0 || t >= static_cast<TokenId>(vocab.size()))
        throw ConstraintTokenOutOfVocab("#" + std::to_string(t));
      if (t == vocab.bos || t == vocab.eos)
        throw ConstraintTokenOutOfVocab(vocab.id_to_token[static_cast<std::size_t>(t)]);
    }
  }

  // unique patterns with multiset counts
  std::vector<detail::PatternAutomaton> automata;
  for (const auto& pat : constraints) {
    auto it = std::find_if(automata.begin(), automata.end(),
                           [&](const auto& a) { return a.pattern == pat; });
    if (it == automata.end())
      automata.emplace_back(pat, 1);
    else
      ++it->needed;
  }
  std::int32_t c_total = 0;
  for (const auto& a : automata)
    c_total += static_cast<std::int32_t>(a.pattern.size()) * a.needed;

  auto met_of = [&](const detail::Hyp& h) {
    std::int32_t met = 0;
    for (std::size_t u = 0; u < automata.size(); ++u)
      met += static_cast<std::int32_t>(automata[u].pattern.size()) *
             std::min(h.completed[u], automata[u].needed);
    return met;
  };

  detail::Hyp root;
  root.states.assign(automata.size(), 0);
  root.completed.assign(automata.size(), 0);
  std::vector<detail::Hyp> live{root};
  std::optional<detail::Hyp> best_finished;

  std::vector<TokenId> cand_tokens;
  for (int step = 0; step < max_len && !live.empty(); ++step) {
    std::vector<detail::Hyp> candidates;
    for (const auto& h : live) {
      const auto scores = scorer.score_next(h.tokens);
      cand_tokens.clear();
      // top beam_size ordinary tokens
      std::vector<TokenId> order;
      order.reserve(vocab.size());
      for (TokenId t = 0; t < static_cast<TokenId>(vocab.size()); ++t)
        if (t != vocab.bos && t != vocab.eos &&
            scores[static_cast<std::size_t>(t)] > kLogZero)
          order.push_back(t);
      const std::size_t keep = std::min<std::size_t>(order.size(),
                                                     static_cast<std::size_t>(beam_size));
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep),
                        order.end(), [&](TokenId a, TokenId b) {
                          const double sa = scores[static_cast<std::size_t>(a)];
                          const double sb = scores[static_cast<std::size_t>(b)];
                          if (sa != sb) return sa > sb;
                          return a < b;
                        });
      order.resize(keep);
      cand_tokens = order;
      // every token advancing an unfinished constraint from the current state
      for (std::size_t u = 0; u < automata.size(); ++u)
        if (h.completed[u] < automata[u].needed)
          cand_tokens.push_back(
              automata[u].pattern[static_cast<std::size_t>(h.states[u])]);
      std::sort(cand_tokens.begin(), cand_tokens.end());
      cand_tokens.erase(std::unique(cand_tokens.begin(), cand_tokens.end()),
                        cand_tokens.end());

      if (h.tokens_met == c_total && scores[static_cast<std::size_t>(vocab.eos)] > kLogZero) {
        detail::Hyp fin = h;
        fin.tokens.push_back(vocab.eos);
        fin.logprob += scores[static_cast<std::size_t>(vocab.eos)];
        if (!best_finished || detail::better(fin, *best_finished))
          best_finished = std::move(fin);
      }

      for (TokenId t : cand_tokens) {
        const double s = scores[static_cast<std::size_t>(t)];
        if (s <= kLogZero) continue;
        detail::Hyp nh = h;
        nh.tokens.push_back(t);
        nh.logprob += s;
        for (std::size_t u = 0; u < automata.size(); ++u) {
          auto [ns, done] = automata[u].step(nh.states[u], t);
          nh.states[u] = ns;
          if (done) ++nh.completed[u];
        }
        nh.tokens_met = met_of(nh);
        candidates.push_back(std::move(nh));
      }
    }
    if (candidates.empty()) break;

    // bank allocation over non-empty banks; remainders to higher banks
    std::map<std::int32_t, std::vector<detail::Hyp*>> banks;
    for (auto& c : candidates) banks[c.tokens_met].push_back(&c);
    const std::size_t nb = banks.size();
    const std::size_t base = static_cast<std::size_t>(beam_size) / nb;
    std::size_t rem = static_cast<std::size_t>(beam_size) % nb;
    std::vector<detail::Hyp> next;
    for (auto it = banks.rbegin(); it != banks.rend(); ++it) {
      std::size_t slots = base + (rem > 0 ? 1 : 0);
      if (rem > 0) --rem;
      auto& bank = it->second;
      std::sort(bank.begin(), bank.end(), [](const detail::Hyp* a, const detail::Hyp* b) {
        return detail::better(*a, *b);
      });
      for (std::size_t i = 0; i < bank.size() && i < slots; ++i)
        next.push_back(std::move(*bank[i]));
    }
    live = std::move(next);

    if (best_finished) {
      double best_live = kLogZero;
      for (const auto& h : live) best_live = std::max(best_live, h.logprob);
      if (best_live <= best_finished->logprob) break;
    }
  }

  DecodeResult res;
  if (best_finished) {
    res.tokens = std::move(best_finished->tokens);
    res.logprob = best_finished->logprob;
    res.satisfied = true;
    return res;
  }
  // no finished hypothesis within max_len
  const detail::Hyp* best = nullptr;
  for (const auto& h : live)
    if (!best || h.tokens_met > best->tokens_met ||
        (h.tokens_met == best->tokens_met && detail::better(h, *best)))
      best = &h;
  if (best) {
    res.tokens = best->tokens;
    res.logprob = best->logprob;
  }
  res.satisfied = false;
  return res;
}

// Realizes each case's constraints in the requested form, decodes, and
// returns one hypothesis line per case.
inline std::vector<std::string> decode_corpus(const Scorer& scorer, const TestSet& testset,
                                              EmitForm emit_form, int beam_size,
                                              int max_len,
                                              std::size_t* unsatisfied = nullptr) {
  const Vocab& vocab = scorer.vocab();
  std::vector<std::string> out;
  out.reserve(testset.cases.size());
  std::size_t failures = 0;
  for (const auto& tc : testset.cases) {
    std::vector<std::vector<TokenId>> constraints;
    for (const auto& c : tc.constraints) {
      std::vector<TokenId> ids;
      for (const auto& tok : realize(c, emit_form)) {
        auto it = vocab.token_to_id.find(tok);
        if (it == vocab.token_to_id.end()) throw ConstraintTokenOutOfVocab(tok);
        ids.push_back(it->second);
      }
      constraints.push_back(std::move(ids));
    }
    auto res = constrained_beam_search(scorer, constraints, beam_size, max_len);
    if (!res.satisfied) ++failures;
    out.push_back(res.text(vocab));
  }
  if (unsatisfied) *unsatisfied = failures;
  return out;
}

// External scorer protocol: one request line `{"prefix":[ids]}` out, one
// response line `{"logprobs":{"<id>":lp,...}}` back. Ids missing from the
// response are treated as impossible.
class StreamScorer : public Scorer {
 public:
  StreamScorer(std::istream& in, std::ostream& out, Vocab vocab)
      : in_(in), out_(out), vocab_(std::move(vocab)) {}

  std::vector<double> score_next(const std::vector<TokenId>& prefix) const override {
    nlohmann::json req;
    req["prefix"] = prefix;
    out_ << req.dump() << '\n';
    out_.flush();
    std::string line;
    if (!std::getline(in_, line))
      throw DataError("external scorer closed the stream");
    const auto resp = nlohmann::json::parse(line);
    std::vector<double> scores(vocab_.size(), kLogZero);
    for (const auto& [key, val] : resp.at("logprobs").items()) {
      const auto id = static_cast<TokenId>(std::stol(key));
      if (id >= 0 && id < static_cast<TokenId>(vocab_.size()))
        scores[static_cast<std::size_t>(id)] = val.get<double>();
    }
    scores[static_cast<std::size_t>(vocab_.bos)] = kLogZero;
    return scores;
  }

  const Vocab& vocab() const override { return vocab_; }

 private:
  std::istream& in_;
  std::ostream& out_;
  Vocab vocab_;
};

// Vocabulary file for external scorers: one token per line; ids 0..2 are
// reserved for <unk>, <s>, </s>.
inline Vocab load_vocab(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open vocab file: " + path);
  Vocab v = Vocab::with_specials();
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    v.add(line);
  }
  return v;
}

}  // namespace lcmt
