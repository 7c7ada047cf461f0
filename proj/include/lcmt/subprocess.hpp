#pragma once

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "lcmt/decode.hpp"
#include "lcmt/errors.hpp"

namespace lcmt {

// Runs an external scorer process and speaks the line-delimited JSON
// protocol over its stdin/stdout. The command is run through /bin/sh.
class ProcessScorer : public Scorer {
 public:
  ProcessScorer(const std::string& command, Vocab vocab) : vocab_(std::move(vocab)) {
    int to_child[2], from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0)
      throw Error("cannot create pipes for external scorer");
    pid_ = fork();
    if (pid_ < 0) throw Error("cannot fork external scorer");
    if (pid_ == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    out_ = fdopen(to_child[1], "w");
    in_ = fdopen(from_child[0], "r");
    if (!out_ || !in_) throw Error("cannot open pipe streams for external scorer");
  }

  ProcessScorer(const ProcessScorer&) = delete;
  ProcessScorer& operator=(const ProcessScorer&) = delete;

  ~ProcessScorer() override {
    if (out_) fclose(out_);
    if (in_) fclose(in_);
    if (pid_ > 0) waitpid(pid_, nullptr, 0);
  }

  std::vector<double> score_next(const std::vector<TokenId>& prefix) const override {
    nlohmann::json req;
    req["prefix"] = prefix;
    const std::string line = req.dump();
    if (fprintf(out_, "%s\n", line.c_str()) < 0 || fflush(out_) != 0)
      throw DataError("cannot write to external scorer");
    std::string resp_line;
    int ch;
    while ((ch = fgetc(in_)) != EOF && ch != '\n') resp_line.push_back(static_cast<char>(ch));
    if (resp_line.empty() && ch == EOF)
      throw DataError("external scorer closed the stream");
    const auto resp = nlohmann::json::parse(resp_line);
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
  Vocab vocab_;
  pid_t pid_ = -1;
  FILE* out_ = nullptr;
  FILE* in_ = nullptr;
};

}  // namespace lcmt
