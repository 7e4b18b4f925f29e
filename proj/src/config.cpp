#include "taskspec/config.hpp"

#include <fstream>

#include "taskspec/errors.hpp"
#include "taskspec/hash.hpp"
#include "taskspec/scoring.hpp"

namespace taskspec::config {

namespace {

BackendSpec backend_from_json(const json& j, const std::string& default_kind) {
    BackendSpec spec;
    spec.kind = j.value("kind", default_kind);
    spec.backend_id = j.value("backend_id", std::string{});
    spec.url = j.value("url", std::string{});
    spec.auth_env = j.value("auth_env", std::string{});
    spec.beta = j.value("beta", 1.0);
    spec.dim = j.value("dim", 256);
    spec.temperature = j.value("temperature", 0.7);
    spec.timeout_ms = j.value("timeout_ms", 30000);
    spec.max_retries = j.value("max_retries", 3);
    return spec;
}

json backend_to_json(const BackendSpec& s) {
    return json{{"kind", s.kind},       {"backend_id", s.backend_id},
                {"url", s.url},         {"auth_env", s.auth_env},
                {"beta", s.beta},       {"dim", s.dim},
                {"temperature", s.temperature},
                {"timeout_ms", s.timeout_ms},
                {"max_retries", s.max_retries}};
}

}  // namespace

RunConfig from_json(const json& j) {
    RunConfig cfg;
    if (j.contains("dataset")) {
        const auto& d = j.at("dataset");
        cfg.dataset.path = d.value("path", std::string{});
        if (d.contains("mapping")) {
            const auto& m = d.at("mapping");
            cfg.dataset.mapping.instruction_key = m.value("instruction", "instruction");
            cfg.dataset.mapping.input_key = m.value("input", "input");
            cfg.dataset.mapping.output_key = m.value("output", "output");
        }
        cfg.dataset.mapping.source_tag = d.value("source", std::string{});
    }
    if (j.contains("scoring_backend"))
        cfg.scoring = backend_from_json(j.at("scoring_backend"), "toy");
    if (j.contains("generation_backend"))
        cfg.generation = backend_from_json(j.at("generation_backend"), "stub");
    if (j.contains("embedding_backend"))
        cfg.embedding = backend_from_json(j.at("embedding_backend"), "hashed_bow");
    if (j.contains("specificity")) {
        const auto& s = j.at("specificity");
        cfg.spec.k = s.value("k", 4);
        cfg.spec.m = s.value("m", 4);
        cfg.spec.tau = s.value("tau", 1.0);
        cfg.spec.alpha = s.value("alpha", 0.5);
        cfg.spec.normalize_eq1 = s.value("normalize_eq1", false);
    }
    cfg.n_retrieved = j.value("n_retrieved", 8);
    if (j.contains("selection")) {
        const auto& s = j.at("selection");
        if (s.contains("methods"))
            cfg.selection.methods = s.at("methods").get<std::vector<std::string>>();
        if (s.contains("rho_grid"))
            cfg.selection.rho_grid = s.at("rho_grid").get<std::vector<double>>();
        cfg.selection.budget_mode =
            s.value("budget_mode", std::string("example_count")) == "token_count"
                ? selection::BudgetMode::token_count
                : selection::BudgetMode::example_count;
        cfg.selection.lambda = s.value("lambda", 1.0);
        cfg.selection.w_max = s.value("w_max", 10.0);
        cfg.selection.seed = s.value("seed", 17ULL);
    }
    cfg.cache_dir = j.value("cache_dir", std::string("cache"));
    cfg.out_dir = j.value("out_dir", std::string("out"));
    cfg.max_inflight = j.value("max_inflight", 4);
    cfg.gen_retries = j.value("gen_retries", 2);

    if (cfg.spec.k < 1 || cfg.spec.m < 1)
        throw FatalError("config: k and m must be >= 1");
    if (cfg.spec.tau <= 0.0) throw FatalError("config: tau must be > 0");
    if (cfg.spec.alpha < 0.0) throw FatalError("config: alpha must be >= 0");
    if (cfg.max_inflight < 1) throw FatalError("config: max_inflight must be >= 1");
    for (double rho : cfg.selection.rho_grid)
        if (!(rho > 0.0 && rho <= 1.0)) throw FatalError("config: rho must be in (0,1]");
    return cfg;
}

json to_json(const RunConfig& cfg) {
    return json{
        {"dataset",
         {{"path", cfg.dataset.path},
          {"mapping",
           {{"instruction", cfg.dataset.mapping.instruction_key},
            {"input", cfg.dataset.mapping.input_key},
            {"output", cfg.dataset.mapping.output_key}}},
          {"source", cfg.dataset.mapping.source_tag}}},
        {"scoring_backend", backend_to_json(cfg.scoring)},
        {"generation_backend", backend_to_json(cfg.generation)},
        {"embedding_backend", backend_to_json(cfg.embedding)},
        {"specificity",
         {{"k", cfg.spec.k},
          {"m", cfg.spec.m},
          {"tau", cfg.spec.tau},
          {"alpha", cfg.spec.alpha},
          {"normalize_eq1", cfg.spec.normalize_eq1}}},
        {"n_retrieved", cfg.n_retrieved},
        {"selection",
         {{"methods", cfg.selection.methods},
          {"rho_grid", cfg.selection.rho_grid},
          {"budget_mode", selection::to_string(cfg.selection.budget_mode)},
          {"lambda", cfg.selection.lambda},
          {"w_max", cfg.selection.w_max},
          {"seed", cfg.selection.seed}}},
        {"cache_dir", cfg.cache_dir},
        {"out_dir", cfg.out_dir},
        {"max_inflight", cfg.max_inflight},
        {"gen_retries", cfg.gen_retries}};
}

RunConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FatalError("cannot open config file: " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw FatalError("config file is not valid JSON: " + path.string());
    return from_json(j);
}

std::string backend_id(const BackendSpec& spec, std::string_view fallback) {
    if (!spec.backend_id.empty()) return spec.backend_id;
    return std::string(fallback);
}

std::string run_hash(const RunConfig& cfg) { return hash::sha256_hex(to_json(cfg).dump()); }

std::string gen_stage_hash(const RunConfig& cfg, std::string_view gen_backend_id) {
    json j{{"gen_backend_id", std::string(gen_backend_id)},
           {"k", cfg.spec.k},
           {"temperature", cfg.generation.temperature},
           {"prompt_version", "altgen-v1"}};
    return hash::sha256_hex(j.dump());
}

std::string pool_stage_hash(const RunConfig& cfg, std::string_view gen_backend_id,
                            std::string_view scoring_backend_id,
                            std::string_view embed_backend_id) {
    json j{{"gen_stage", gen_stage_hash(cfg, gen_backend_id)},
           {"scoring_backend_id", std::string(scoring_backend_id)},
           {"template_id", scoring::kCondTemplateId},
           {"embed_backend_id", std::string(embed_backend_id)},
           {"n_retrieved", cfg.n_retrieved},
           {"m", cfg.spec.m}};
    return hash::sha256_hex(j.dump());
}

std::string score_stage_hash(const RunConfig& cfg, std::string_view scoring_backend_id) {
    return specificity::config_hash(cfg.spec, scoring_backend_id,
                                    scoring::kCondTemplateId);
}

}  // namespace taskspec::config
