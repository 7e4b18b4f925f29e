#include "taskspec/candidates.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "taskspec/errors.hpp"
#include "taskspec/text.hpp"

namespace taskspec::candidates {

HashedBowEmbedder::HashedBowEmbedder(int dim) : dim_(dim) {
    if (dim < 1) throw std::invalid_argument("HashedBowEmbedder: dim must be >= 1");
}

std::string HashedBowEmbedder::backend_id() const {
    return "hashed-bow:d=" + std::to_string(dim_);
}

std::vector<std::vector<double>> HashedBowEmbedder::embed(
    const std::vector<std::string>& texts) {
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        std::vector<double> v(static_cast<size_t>(dim_), 0.0);
        auto tokens = text::whitespace_tokens(text::to_lower(t));
        if (tokens.empty()) tokens.push_back("");
        for (const auto& tok : tokens)
            v[text::fnv1a64(tok) % static_cast<uint64_t>(dim_)] += 1.0;
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
        out.push_back(std::move(v));
    }
    return out;
}

void EmbeddingIndex::build(const std::vector<corpus::InstructionExample>& corpus,
                           Embedder& embedder) {
    entries_.clear();
    by_id_.clear();
    std::vector<std::string> texts;
    texts.reserve(corpus.size());
    for (const auto& ex : corpus) texts.push_back(ex.instruction);
    auto vectors = embedder.embed(texts);
    if (vectors.size() != corpus.size())
        throw ContractViolation("embedder returned wrong vector count");
    entries_.reserve(corpus.size());
    for (size_t i = 0; i < corpus.size(); ++i) {
        by_id_.emplace(corpus[i].id, entries_.size());
        entries_.push_back({corpus[i].id, corpus[i].instruction, std::move(vectors[i])});
    }
}

const EmbeddingIndex::Entry* EmbeddingIndex::find(const std::string& id) const {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &entries_[it->second];
}

namespace {
double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}
}  // namespace

std::vector<std::string> knn_retrieve(const EmbeddingIndex& index,
                                      const std::string& query_id, int n,
                                      std::vector<std::string>* warnings) {
    if (n <= 0) return {};
    const auto* query = index.find(query_id);
    if (!query) throw std::invalid_argument("knn_retrieve: unknown query id " + query_id);

    // Distinct instruction texts only; duplicates share the first slot.
    struct Scored {
        double sim;
        size_t order;
        const std::string* text;
    };
    std::vector<Scored> scored;
    std::map<std::string, size_t> text_slot;
    for (size_t i = 0; i < index.entries().size(); ++i) {
        const auto& entry = index.entries()[i];
        if (entry.text == query->text) continue;
        auto [it, inserted] = text_slot.emplace(entry.text, scored.size());
        if (!inserted) continue;
        scored.push_back({dot(query->vec, entry.vec), i, &entry.text});
    }

    if (static_cast<size_t>(n) > scored.size() && warnings) {
        warnings->push_back("knn: requested " + std::to_string(n) + " neighbours, only " +
                            std::to_string(scored.size()) + " distinct instructions");
    }
    size_t keep = std::min<size_t>(static_cast<size_t>(n), scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<long>(keep),
                      scored.end(), [](const Scored& a, const Scored& b) {
                          if (a.sim != b.sim) return a.sim > b.sim;
                          return a.order < b.order;
                      });
    std::vector<std::string> out;
    out.reserve(keep);
    for (size_t i = 0; i < keep; ++i) out.push_back(*scored[i].text);
    return out;
}

std::vector<std::string> build_pool(const corpus::InstructionExample& ex,
                                    const altgen::AlternativeSet& alts,
                                    const EmbeddingIndex* index, int n_retrieved) {
    std::vector<std::string> pool;
    std::set<std::string> seen;
    const std::string true_norm = text::normalize_instruction(ex.instruction);
    auto admit = [&](const std::string& candidate) {
        std::string norm = text::normalize_instruction(candidate);
        if (norm.empty() || norm == true_norm) return;
        if (!seen.insert(norm).second) return;
        pool.push_back(candidate);
    };
    for (const auto& alt : alts.alternatives) admit(alt.text);
    if (index && n_retrieved > 0)
        for (const auto& t : knn_retrieve(*index, ex.id, n_retrieved)) admit(t);
    return pool;
}

HardSet mine_hard(const corpus::InstructionExample& ex,
                  const std::vector<std::string>& pool,
                  scoring::ScoringService& scorer, int m,
                  std::vector<std::string>* warnings) {
    if (pool.empty()) throw std::invalid_argument("mine_hard: empty candidate pool");
    if (m < 1) throw std::invalid_argument("mine_hard: m must be >= 1");
    if (static_cast<size_t>(m) > pool.size()) {
        if (warnings)
            warnings->push_back("mine_hard: m=" + std::to_string(m) + " > pool size " +
                                std::to_string(pool.size()) + ", using whole pool");
        m = static_cast<int>(pool.size());
    }

    struct Scored {
        double score;
        size_t order;
    };
    std::vector<Scored> scored;
    scored.reserve(pool.size());
    for (size_t i = 0; i < pool.size(); ++i) {
        auto rec = scorer.score_output(pool[i], ex.input, ex.output);
        scored.push_back({scoring::normalized_loglik(rec), i});
    }
    std::stable_sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        return a.score > b.score;  // stable: pool order breaks ties
    });

    HardSet hard;
    hard.example_id = ex.id;
    hard.negatives.reserve(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i)
        hard.negatives.push_back({pool[scored[i].order], scored[i].score});
    return hard;
}

}  // namespace taskspec::candidates
