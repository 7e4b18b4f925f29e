#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "taskspec/altgen.hpp"
#include "taskspec/candidates.hpp"
#include "taskspec/config.hpp"
#include "taskspec/scoring.hpp"
#include "taskspec/selection.hpp"

namespace taskspec::pipeline {

struct StageStats {
    size_t processed = 0;  // records produced this run
    size_t skipped = 0;    // already present (resume)
    size_t failed = 0;     // reported to the sidecar
    uint64_t backend_calls = 0;
    uint64_t cache_hits = 0;
    std::vector<std::string> warnings;

    int exit_code() const { return failed == 0 ? 0 : 2; }
};

// Orchestrates the stages over files in out_dir. Every stage is resumable:
// a torn trailing record is dropped, present records are skipped, missing
// ones are appended in corpus order, so an interrupted-then-resumed run
// converges to the same bytes as an uninterrupted one.
class Pipeline {
  public:
    explicit Pipeline(config::RunConfig cfg);

    StageStats ingest();
    StageStats gen_alts();
    StageStats build_pools();
    StageStats score();
    StageStats select();
    StageStats weight();
    StageStats report();

    // File layout under out_dir.
    std::filesystem::path corpus_path() const;
    std::filesystem::path alternatives_path() const;
    std::filesystem::path pools_path() const;
    std::filesystem::path scores_path() const;
    std::filesystem::path tokens_path() const;
    std::filesystem::path unscorable_path() const;
    std::filesystem::path manifests_dir() const;
    std::filesystem::path subsets_dir() const;
    std::filesystem::path weights_dir() const;
    std::filesystem::path report_path() const;
    std::filesystem::path manifest_path(const std::string& method, double rho) const;
    std::filesystem::path weights_path(const std::string& method) const;

    const config::RunConfig& cfg() const { return cfg_; }

    // Resolved lazily; the toy scorer id depends on the corpus vocabulary.
    std::string scoring_backend_id();
    std::string score_config_hash();

  private:
    scoring::ScoringService& scoring_service_();
    altgen::Generator& generator_();
    candidates::Embedder& embedder_();
    const std::vector<corpus::InstructionExample>& corpus_();
    const candidates::EmbeddingIndex& index_();

    config::RunConfig cfg_;
    std::filesystem::path out_;

    std::vector<corpus::InstructionExample> corpus_cache_;
    bool corpus_loaded_ = false;

    std::shared_ptr<scoring::ConditionalScorer> scorer_;
    std::unique_ptr<scoring::ScoreCache> cache_;
    std::unique_ptr<scoring::ScoringService> service_;
    std::unique_ptr<altgen::Generator> generator_impl_;
    uint64_t gen_calls_ = 0;
    std::unique_ptr<candidates::Embedder> embedder_impl_;
    std::unique_ptr<candidates::EmbeddingIndex> index_impl_;
};

}  // namespace taskspec::pipeline
