#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "taskspec/specificity.hpp"

namespace taskspec::selection {

using json = nlohmann::json;

enum class Direction { desc, asc };  // asc for lower-is-better scores (PPL)

enum class BudgetMode { example_count, token_count };

std::string to_string(BudgetMode m);

struct Totals {
    long long n_examples = 0;
    long long n_tokens = 0;
};

// The reproducible record of a budgeted decision: either a retained id
// list or per-example weights.
struct SelectionManifest {
    std::string method;
    double rho = 1.0;
    std::optional<double> tau_rho;      // threshold; absent for random/weights
    std::vector<std::string> retained_ids;  // in selection order
    std::map<std::string, double> weights;  // weighting mode only
    BudgetMode budget_mode = BudgetMode::example_count;
    uint64_t seed = 0;
    Totals totals;
    std::string config_hash;
    std::vector<std::string> warnings;
};

// Top-rho filtering: retains exactly round(rho*N) examples, tie-break on
// (score, then id). tau_rho is the score of the last retained example,
// i.e. the (1-rho)-quantile under the "higher" interpolation rule.
SelectionManifest select_top_rho(const std::map<std::string, double>& scores,
                                 double rho, Direction direction,
                                 const std::map<std::string, long long>* token_counts = nullptr);

// Greedy token-budgeted selection in score order; stops at the first
// example that would exceed the budget.
SelectionManifest select_token_budget(const std::map<std::string, double>& scores,
                                      const std::map<std::string, long long>& token_counts,
                                      long long budget_tokens, Direction direction);

// w_i = min(exp(lambda * score_i), w_max).
std::map<std::string, double> exp_weights(const std::map<std::string, double>& scores,
                                          double lambda, double w_max);

// Uniform sample without replacement of round(rho*N) ids. Hand-rolled
// Fisher-Yates so results are stable across standard libraries.
SelectionManifest random_baseline(const std::vector<std::string>& ids, double rho,
                                  uint64_t seed,
                                  const std::map<std::string, long long>* token_counts = nullptr);

// Spearman rank correlation with average ranks on ties.
double spearman(std::span<const double> a, std::span<const double> b);

struct Report {
    std::string markdown;
    // filename -> CSV body
    std::vector<std::pair<std::string, std::string>> csv_files;
};

// Per-method score histograms, manifest budget accounting, the
// rank-correlation matrix between scoring methods and the MI estimate.
Report make_report(const std::vector<specificity::SpecificityScores>& scores,
                   const std::vector<SelectionManifest>& manifests);

json to_json(const SelectionManifest& m);
SelectionManifest manifest_from_json(const json& j);

}  // namespace taskspec::selection
