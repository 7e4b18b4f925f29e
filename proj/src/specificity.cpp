#include "taskspec/specificity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "taskspec/hash.hpp"

namespace taskspec::specificity {

double log_sum_exp(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("log_sum_exp: empty input");
    double m = *std::max_element(xs.begin(), xs.end());
    if (!std::isfinite(m)) return m;  // all -inf, or an inf dominates
    double sum = 0.0;
    for (double x : xs) sum += std::exp(x - m);
    return m + std::log(sum);
}

double log_mean_exp(std::span<const double> xs) {
    return log_sum_exp(xs) - std::log(static_cast<double>(xs.size()));
}

double tss(double s_true, std::span<const double> s_alts) {
    if (s_alts.empty()) throw std::invalid_argument("tss: no alternative scores");
    return s_true - log_mean_exp(s_alts);
}

double tss_nce(double s_plus, std::span<const double> hard_scores, double tau) {
    if (hard_scores.empty()) throw std::invalid_argument("tss_nce: no hard scores");
    if (tau <= 0.0) throw std::invalid_argument("tss_nce: tau must be > 0");

    double max_diff = -std::numeric_limits<double>::infinity();
    for (double h : hard_scores) max_diff = std::max(max_diff, (h - s_plus) / tau);

    if (max_diff <= 0.0) {
        // log1p keeps precision when the sum vanishes (easy negatives).
        double sum = 0.0;
        for (double h : hard_scores) sum += std::exp((h - s_plus) / tau);
        return -std::log1p(sum);
    }
    // A hard score above s_plus: shift by the max so nothing overflows.
    double sum = std::exp(-max_diff);  // the implicit "1" term
    for (double h : hard_scores) sum += std::exp((h - s_plus) / tau - max_diff);
    return -(max_diff + std::log(sum));
}

double tss_pp(double s_plus, std::span<const double> hard_scores, double tau,
              double alpha) {
    if (alpha < 0.0) throw std::invalid_argument("tss_pp: alpha must be >= 0");
    return tss_nce(s_plus, hard_scores, tau) + alpha * s_plus;
}

double ppl_score(double s_plus) {
    if (!std::isfinite(s_plus)) throw std::invalid_argument("ppl_score: non-finite input");
    return std::exp(-s_plus);
}

double ifd_score(double s_cond, double s_uncond) {
    if (s_uncond == 0.0)
        throw std::domain_error("ifd_score: zero unconditioned loss, ratio undefined");
    return (-s_cond) / (-s_uncond);
}

double mi_estimate(std::span<const double> tss_values) {
    if (tss_values.empty()) throw std::invalid_argument("mi_estimate: no scores");
    double sum = 0.0;
    for (double v : tss_values) sum += v;
    return sum / static_cast<double>(tss_values.size());
}

std::string config_hash(const SpecificityConfig& cfg, std::string_view backend_id,
                        std::string_view template_id) {
    json j{{"k", cfg.k},         {"m", cfg.m},
           {"tau", cfg.tau},     {"alpha", cfg.alpha},
           {"normalize_eq1", cfg.normalize_eq1},
           {"backend_id", std::string(backend_id)},
           {"template_id", std::string(template_id)}};
    return hash::sha256_hex(j.dump());
}

json to_json(const SpecificityScores& s) {
    json j{{"example_id", s.example_id},
           {"s_true", s.s_true},
           {"s_alts", s.s_alts},
           {"tss", s.tss},
           {"s_plus", s.s_plus},
           {"hard_scores", s.hard_scores},
           {"tss_nce", s.tss_nce},
           {"tss_pp", s.tss_pp},
           {"ppl", s.ppl},
           {"config_hash", s.config_hash}};
    j["ifd"] = s.ifd ? json(*s.ifd) : json(nullptr);
    return j;
}

SpecificityScores scores_from_json(const json& j) {
    SpecificityScores s;
    s.example_id = j.at("example_id").get<std::string>();
    s.s_true = j.at("s_true").get<double>();
    s.s_alts = j.at("s_alts").get<std::vector<double>>();
    s.tss = j.at("tss").get<double>();
    s.s_plus = j.at("s_plus").get<double>();
    s.hard_scores = j.at("hard_scores").get<std::vector<double>>();
    s.tss_nce = j.at("tss_nce").get<double>();
    s.tss_pp = j.at("tss_pp").get<double>();
    s.ppl = j.at("ppl").get<double>();
    if (j.contains("ifd") && !j.at("ifd").is_null()) s.ifd = j.at("ifd").get<double>();
    s.config_hash = j.at("config_hash").get<std::string>();
    return s;
}

}  // namespace taskspec::specificity
