// taskspec: score instruction-tuning corpora by task specificity and
// select or reweight them under explicit budgets.
//
//   taskspec ingest    --config run.json
//   taskspec gen-alts  --config run.json
//   taskspec build-pool --config run.json
//   taskspec score     --config run.json
//   taskspec select    --config run.json
//   taskspec weight    --config run.json
//   taskspec report    --config run.json

#include <iostream>

#include <CLI11.hpp>

#include "taskspec/config.hpp"
#include "taskspec/errors.hpp"
#include "taskspec/pipeline.hpp"

namespace {

struct Overrides {
    std::string dataset_path;
    std::string out_dir;
    std::string cache_dir;
    std::string source_tag;
    int k = -1;
    int m = -1;
    double tau = -1.0;
    double alpha = -1.0;
    double lambda = -1.0;
    int n_retrieved = -1;
    int max_inflight = -1;
    int64_t seed = -1;
    std::string budget_mode;
    std::vector<double> rho_grid;
    std::vector<std::string> methods;
};

void apply(const Overrides& ov, taskspec::config::RunConfig& cfg) {
    if (!ov.dataset_path.empty()) cfg.dataset.path = ov.dataset_path;
    if (!ov.out_dir.empty()) cfg.out_dir = ov.out_dir;
    if (!ov.cache_dir.empty()) cfg.cache_dir = ov.cache_dir;
    if (!ov.source_tag.empty()) cfg.dataset.mapping.source_tag = ov.source_tag;
    if (ov.k > 0) cfg.spec.k = ov.k;
    if (ov.m > 0) cfg.spec.m = ov.m;
    if (ov.tau > 0) cfg.spec.tau = ov.tau;
    if (ov.alpha >= 0) cfg.spec.alpha = ov.alpha;
    if (ov.lambda >= 0) cfg.selection.lambda = ov.lambda;
    if (ov.n_retrieved >= 0) cfg.n_retrieved = ov.n_retrieved;
    if (ov.max_inflight > 0) cfg.max_inflight = ov.max_inflight;
    if (ov.seed >= 0) cfg.selection.seed = static_cast<uint64_t>(ov.seed);
    if (!ov.budget_mode.empty())
        cfg.selection.budget_mode = ov.budget_mode == "token_count"
                                        ? taskspec::selection::BudgetMode::token_count
                                        : taskspec::selection::BudgetMode::example_count;
    if (!ov.rho_grid.empty()) cfg.selection.rho_grid = ov.rho_grid;
    if (!ov.methods.empty()) cfg.selection.methods = ov.methods;
}

void add_override_flags(CLI::App* cmd, Overrides& ov) {
    cmd->add_option("--dataset", ov.dataset_path, "Dataset JSONL path");
    cmd->add_option("--out-dir", ov.out_dir, "Artifact output directory");
    cmd->add_option("--cache-dir", ov.cache_dir, "Score cache directory");
    cmd->add_option("--source", ov.source_tag, "Dataset source tag");
    cmd->add_option("--k", ov.k, "Alternatives per example");
    cmd->add_option("--m", ov.m, "Hard-set size");
    cmd->add_option("--tau", ov.tau, "Contrast temperature");
    cmd->add_option("--alpha", ov.alpha, "Quality-term weight");
    cmd->add_option("--lambda", ov.lambda, "Exponential weighting scale");
    cmd->add_option("--n-retrieved", ov.n_retrieved, "KNN neighbours in the pool");
    cmd->add_option("--max-inflight", ov.max_inflight, "Max concurrent backend calls");
    cmd->add_option("--seed", ov.seed, "Selection seed");
    cmd->add_option("--budget-mode", ov.budget_mode,
                    "example_count or token_count");
    cmd->add_option("--rho", ov.rho_grid, "Retention fractions (repeatable)");
    cmd->add_option("--method", ov.methods, "Selection methods (repeatable)");
}

int report_stats(const std::string& stage, const taskspec::pipeline::StageStats& stats) {
    std::cout << stage << ": " << stats.processed << " processed, " << stats.skipped
              << " skipped, " << stats.failed << " failed";
    if (stats.backend_calls || stats.cache_hits)
        std::cout << " (" << stats.backend_calls << " backend calls, " << stats.cache_hits
                  << " cache hits)";
    std::cout << "\n";
    constexpr size_t kMaxWarnings = 20;
    for (size_t i = 0; i < stats.warnings.size() && i < kMaxWarnings; ++i)
        std::cerr << "warning: " << stats.warnings[i] << "\n";
    if (stats.warnings.size() > kMaxWarnings)
        std::cerr << "... and " << stats.warnings.size() - kMaxWarnings
                  << " more warnings\n";
    if (stats.failed > 0)
        std::cerr << stage << ": " << stats.failed
                  << " examples failed; see the failure sidecar in the out dir\n";
    return stats.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Task-specificity scoring and budgeted selection for instruction data"};
    app.require_subcommand(1);

    std::string config_path;
    Overrides ov;

    struct Cmd {
        CLI::App* sub;
        taskspec::pipeline::StageStats (taskspec::pipeline::Pipeline::*stage)();
        const char* name;
    };
    std::vector<Cmd> cmds;
    auto add = [&](const char* name, const char* help, auto stage) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "Run config JSON")->required();
        add_override_flags(sub, ov);
        cmds.push_back({sub, stage, name});
    };

    using P = taskspec::pipeline::Pipeline;
    add("ingest", "Normalize a dataset into the canonical corpus", &P::ingest);
    add("gen-alts", "Generate alternative instructions per example", &P::gen_alts);
    add("build-pool", "Build candidate pools and mine hard negatives", &P::build_pools);
    add("score", "Compute TSS / TSS++ / PPL / IFD scores", &P::score);
    add("select", "Emit budgeted selection manifests and subsets", &P::select);
    add("weight", "Emit exponential importance weights", &P::weight);
    add("report", "Write the summary report", &P::report);

    CLI11_PARSE(app, argc, argv);

    try {
        auto cfg = taskspec::config::load(config_path);
        apply(ov, cfg);
        taskspec::pipeline::Pipeline pipeline(std::move(cfg));
        for (const auto& cmd : cmds) {
            if (cmd.sub->parsed()) {
                auto stats = (pipeline.*(cmd.stage))();
                return report_stats(cmd.name, stats);
            }
        }
    } catch (const taskspec::ConfigMismatch& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
