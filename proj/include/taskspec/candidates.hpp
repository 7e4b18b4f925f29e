#pragma once

#include <string>
#include <vector>

#include "taskspec/altgen.hpp"
#include "taskspec/corpus.hpp"
#include "taskspec/scoring.hpp"

namespace taskspec::candidates {

// Text -> unit-norm vector backend.
class Embedder {
  public:
    virtual ~Embedder() = default;
    virtual std::string backend_id() const = 0;
    virtual int dim() const = 0;
    virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) = 0;
};

// Deterministic test embedder: feature-hashed bag of lowercased whitespace
// tokens, L2-normalized. Oracle-computable by hand.
class HashedBowEmbedder final : public Embedder {
  public:
    explicit HashedBowEmbedder(int dim = 256);
    std::string backend_id() const override;
    int dim() const override { return dim_; }
    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;

  private:
    int dim_;
};

// Exact brute-force cosine index over the corpus instructions.
// Single-writer build phase, then read-only queries.
class EmbeddingIndex {
  public:
    struct Entry {
        std::string id;
        std::string text;
        std::vector<double> vec;  // unit norm
    };

    void build(const std::vector<corpus::InstructionExample>& corpus, Embedder& embedder);

    size_t size() const { return entries_.size(); }
    const Entry* find(const std::string& id) const;
    const std::vector<Entry>& entries() const { return entries_; }

  private:
    std::vector<Entry> entries_;
    std::map<std::string, size_t> by_id_;
};

// The n nearest distinct instruction texts to the query example's own
// instruction, excluding that instruction's text. Exact search; ties break
// on insertion order. n larger than the pool returns everything and warns.
std::vector<std::string> knn_retrieve(const EmbeddingIndex& index,
                                      const std::string& query_id, int n,
                                      std::vector<std::string>* warnings = nullptr);

// Candidate pool C(X): generated alternatives followed by retrieved
// neighbours, deduped under normalization, true instruction excluded.
std::vector<std::string> build_pool(const corpus::InstructionExample& ex,
                                    const altgen::AlternativeSet& alts,
                                    const EmbeddingIndex* index, int n_retrieved);

struct HardNegative {
    std::string text;
    double normalized_score = 0.0;  // (1/|Y|) log p(Y | candidate, X)
};

// Hard set H(X): sorted descending by normalized score.
struct HardSet {
    std::string example_id;
    std::vector<HardNegative> negatives;
};

// Scores Y under every candidate instruction and keeps the m most
// confusable ones. m > |pool| uses the whole pool with a warning.
HardSet mine_hard(const corpus::InstructionExample& ex,
                  const std::vector<std::string>& pool,
                  scoring::ScoringService& scorer, int m,
                  std::vector<std::string>* warnings = nullptr);

}  // namespace taskspec::candidates
