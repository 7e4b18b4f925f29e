#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "taskspec/corpus.hpp"
#include "taskspec/selection.hpp"
#include "taskspec/specificity.hpp"

namespace taskspec::config {

using json = nlohmann::json;

// One scoring / generation / embedding backend. `kind` selects the
// implementation: "toy" | "http" for scoring, "stub" | "http" for
// generation, "hashed_bow" | "http" for embeddings. Auth tokens come from
// the environment variable named in auth_env, never from the config file.
struct BackendSpec {
    std::string kind;
    std::string backend_id;  // defaults to a kind-derived id
    std::string url;
    std::string auth_env;
    double beta = 1.0;       // toy scorer smoothing
    int dim = 256;           // hashed_bow dimension
    double temperature = 0.7;
    int timeout_ms = 30000;
    int max_retries = 3;
};

struct DatasetSpec {
    std::string path;
    corpus::FieldMapping mapping;
};

struct SelectionSpec {
    std::vector<std::string> methods = {"random", "ppl",    "ifd",      "tss",
                                        "tss_exp", "tsspp", "tsspp_exp"};
    std::vector<double> rho_grid = {0.05, 0.15, 0.45, 0.75, 1.0};
    selection::BudgetMode budget_mode = selection::BudgetMode::example_count;
    double lambda = 1.0;
    double w_max = 10.0;
    uint64_t seed = 17;
};

struct RunConfig {
    DatasetSpec dataset;
    BackendSpec scoring{.kind = "toy"};
    BackendSpec generation{.kind = "stub"};
    BackendSpec embedding{.kind = "hashed_bow"};
    specificity::SpecificityConfig spec;
    int n_retrieved = 8;
    SelectionSpec selection;
    std::string cache_dir = "cache";
    std::string out_dir = "out";
    int max_inflight = 4;
    int gen_retries = 2;
};

RunConfig from_json(const json& j);
json to_json(const RunConfig& cfg);
RunConfig load(const std::filesystem::path& path);

// Effective backend id (explicit or kind-derived; the toy scorer id is
// resolved only once the corpus vocabulary is known).
std::string backend_id(const BackendSpec& spec, std::string_view fallback);

// Stage hashes. Downstream artifacts embed the hash of everything they
// depend on, so sweeping a downstream knob never invalidates upstream files.
std::string run_hash(const RunConfig& cfg);
std::string gen_stage_hash(const RunConfig& cfg, std::string_view gen_backend_id);
std::string pool_stage_hash(const RunConfig& cfg, std::string_view gen_backend_id,
                            std::string_view scoring_backend_id,
                            std::string_view embed_backend_id);
std::string score_stage_hash(const RunConfig& cfg, std::string_view scoring_backend_id);

}  // namespace taskspec::config
