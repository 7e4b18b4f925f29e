#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace taskspec::specificity {

using json = nlohmann::json;

// Max-shift stabilized log(sum(exp(x_i))) / log(mean(exp(x_i))).
double log_sum_exp(std::span<const double> xs);
double log_mean_exp(std::span<const double> xs);

// Task-specificity: s_true - log((1/K) sum_k exp(s_k)).
// Raw (unnormalized) log-likelihoods by default.
double tss(double s_true, std::span<const double> s_alts);

// InfoNCE contrast against hard negatives, on length-normalized scores:
//   -log(1 + sum_h exp((s_h - s_plus) / tau))
// Always negative; stable for arbitrarily large score gaps.
double tss_nce(double s_plus, std::span<const double> hard_scores, double tau);

// Quality-aware variant: tss_nce + alpha * s_plus.
double tss_pp(double s_plus, std::span<const double> hard_scores, double tau,
              double alpha);

// exp(-s_plus); lower is better, selection ranks ascending.
double ppl_score(double s_plus);

// Instruction-following difficulty: (-s_cond) / (-s_uncond), both
// length-normalized. Throws std::domain_error when s_uncond == 0.
double ifd_score(double s_cond, double s_uncond);

// Monte Carlo estimate of the instruction/output mutual information given
// the input: corpus mean of per-example TSS.
double mi_estimate(std::span<const double> tss_values);

struct SpecificityConfig {
    int k = 4;             // generated alternatives per example
    int m = 4;             // hard-set size
    double tau = 1.0;      // contrast temperature
    double alpha = 0.5;    // quality-term weight
    bool normalize_eq1 = false;  // score TSS on length-normalized sums
};

struct SpecificityScores {
    std::string example_id;
    double s_true = 0.0;               // log p(Y|I,X), nats
    std::vector<double> s_alts;        // log p(Y|I_k,X), length K
    double tss = 0.0;
    double s_plus = 0.0;               // (1/|Y|) log p(Y|I,X)
    std::vector<double> hard_scores;   // normalized, length m, descending
    double tss_nce = 0.0;
    double tss_pp = 0.0;
    double ppl = 0.0;
    std::optional<double> ifd;         // absent when undefined (flagged)
    std::string config_hash;
};

std::string config_hash(const SpecificityConfig& cfg, std::string_view backend_id,
                        std::string_view template_id);

json to_json(const SpecificityScores& s);
SpecificityScores scores_from_json(const json& j);

}  // namespace taskspec::specificity
