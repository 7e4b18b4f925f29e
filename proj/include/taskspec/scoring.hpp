#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "taskspec/corpus.hpp"

namespace taskspec::scoring {

// Version tags for the prompt assembly. They are folded into every cache
// key: changing a template silently changes scores, so it must invalidate.
inline constexpr const char* kCondTemplateId = "cond-v1";
inline constexpr const char* kUncondTemplateId = "uncond-v1";

// Conditioned prefix: "{instruction}\n\n{input}\n\n", input block omitted
// when input is empty. Only the continuation (output) tokens are scored.
std::string assemble_cond_prefix(std::string_view instruction, std::string_view input);
// Instruction-stripped prefix for the unconditioned pass: "{input}\n\n",
// or "" when input is empty.
std::string assemble_uncond_prefix(std::string_view input);

struct TokenScores {
    std::vector<double> logprobs;  // one entry per continuation token, nats
};

// The frozen model p(Y | prefix): pure likelihood evaluation, never
// sampling. Implementations must be deterministic and thread-safe.
class ConditionalScorer {
  public:
    virtual ~ConditionalScorer() = default;
    virtual std::string backend_id() const = 0;
    virtual TokenScores score_tokens(std::string_view prefix,
                                     std::string_view continuation) const = 0;
};

struct ScoreRecord {
    std::string key;
    double sum_logprob = 0.0;  // log p(Y|prefix), nats
    long long n_tokens = 0;    // |Y| under the backend tokenization
    long long n_floored = 0;   // tokens clamped at the underflow floor
    std::string created_at;    // ISO-8601 UTC
};

std::string score_key(std::string_view backend_id, std::string_view template_id,
                      std::string_view instruction, std::string_view input,
                      std::string_view output);

// Length-normalized log-likelihood sum/n. Requires n_tokens >= 1.
double normalized_loglik(const ScoreRecord& record);

// Append-only JSONL score log keyed by hex hash. Concurrent put() calls
// are serialized; last write wins on identical keys.
class ScoreCache {
  public:
    ScoreCache() = default;
    explicit ScoreCache(const std::filesystem::path& file);

    void open(const std::filesystem::path& file);
    bool is_open() const { return !path_.empty(); }

    std::optional<ScoreRecord> get(const std::string& key) const;
    void put(const ScoreRecord& record);
    size_t size() const;

    const std::filesystem::path& path() const { return path_; }

    // Union of several shard logs into one store (offline compaction).
    static void merge(const std::vector<std::filesystem::path>& shards,
                      const std::filesystem::path& out);

  private:
    void load_();

    std::filesystem::path path_;
    std::map<std::string, ScoreRecord> records_;
    mutable std::mutex mu_;
};

// Reference scorer for desk-scale runs and tests: additive-smoothing
// cache language model over whitespace tokens.
//   p(t | c) = (count(t in c) + beta) / (len(c) + beta * V)
class ToyCacheModel final : public ConditionalScorer {
  public:
    ToyCacheModel(std::vector<std::string> vocab, double beta = 1.0);
    static ToyCacheModel from_corpus(const std::vector<corpus::InstructionExample>& corpus,
                                     double beta = 1.0);

    std::string backend_id() const override { return backend_id_; }
    TokenScores score_tokens(std::string_view prefix,
                             std::string_view continuation) const override;

    double token_prob(const std::vector<std::string>& context,
                      const std::string& token) const;
    size_t vocab_size() const { return vocab_.size(); }
    double beta() const { return beta_; }

  private:
    std::vector<std::string> vocab_;
    double beta_;
    std::string backend_id_;
};

// Scoring front door: prompt assembly + cache + retry-transparent backend
// calls + the -100 nats/token underflow floor. Thread-safe.
class ScoringService {
  public:
    ScoringService(std::shared_ptr<ConditionalScorer> scorer, ScoreCache* cache,
                   double floor_logprob = -100.0);

    // log p(Y | I, X): conditioned template.
    ScoreRecord score_output(std::string_view instruction, std::string_view input,
                             std::string_view output);
    // log p(Y | X): instruction stripped (IFD denominator).
    ScoreRecord score_output_uncond(std::string_view input, std::string_view output);

    uint64_t backend_calls() const { return backend_calls_; }
    uint64_t cache_hits() const { return cache_hits_; }
    std::string backend_id() const { return scorer_->backend_id(); }

  private:
    ScoreRecord score_(std::string_view template_id, std::string_view instruction,
                       std::string_view prefix, std::string_view input,
                       std::string_view output);

    std::shared_ptr<ConditionalScorer> scorer_;
    ScoreCache* cache_;
    double floor_;
    std::atomic<uint64_t> backend_calls_{0};
    std::atomic<uint64_t> cache_hits_{0};
};

}  // namespace taskspec::scoring
