#include "taskspec/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace taskspec::selection {

std::string to_string(BudgetMode m) {
    return m == BudgetMode::example_count ? "example_count" : "token_count";
}

namespace {

struct Ranked {
    const std::string* id;
    double score;
};

// Total order used by every filtering method: score in the requested
// direction, then id. Fully deterministic.
std::vector<Ranked> rank(const std::map<std::string, double>& scores,
                         Direction direction) {
    std::vector<Ranked> ranked;
    ranked.reserve(scores.size());
    for (const auto& [id, score] : scores) ranked.push_back({&id, score});
    std::sort(ranked.begin(), ranked.end(), [&](const Ranked& a, const Ranked& b) {
        if (a.score != b.score)
            return direction == Direction::desc ? a.score > b.score : a.score < b.score;
        return *a.id < *b.id;
    });
    return ranked;
}

long long round_count(double rho, size_t n) {
    return std::llround(rho * static_cast<double>(n));
}

Totals totals_for(const std::vector<std::string>& ids,
                  const std::map<std::string, long long>* token_counts) {
    Totals t;
    t.n_examples = static_cast<long long>(ids.size());
    if (token_counts) {
        for (const auto& id : ids) {
            auto it = token_counts->find(id);
            if (it != token_counts->end()) t.n_tokens += it->second;
        }
    }
    return t;
}

void require_rho(double rho) {
    if (!(rho > 0.0 && rho <= 1.0))
        throw std::invalid_argument("rho must be in (0, 1]");
}

}  // namespace

SelectionManifest select_top_rho(const std::map<std::string, double>& scores,
                                 double rho, Direction direction,
                                 const std::map<std::string, long long>* token_counts) {
    require_rho(rho);
    if (scores.empty()) throw std::invalid_argument("select_top_rho: no scores");

    auto ranked = rank(scores, direction);
    size_t keep = static_cast<size_t>(
        std::clamp<long long>(round_count(rho, ranked.size()), 0,
                              static_cast<long long>(ranked.size())));

    SelectionManifest m;
    m.rho = rho;
    m.retained_ids.reserve(keep);
    for (size_t i = 0; i < keep; ++i) m.retained_ids.push_back(*ranked[i].id);
    // (1-rho)-quantile under the "higher" rule: the last retained score.
    if (keep > 0) m.tau_rho = ranked[keep - 1].score;
    m.totals = totals_for(m.retained_ids, token_counts);
    return m;
}

SelectionManifest select_token_budget(const std::map<std::string, double>& scores,
                                      const std::map<std::string, long long>& token_counts,
                                      long long budget_tokens, Direction direction) {
    if (scores.empty()) throw std::invalid_argument("select_token_budget: no scores");

    SelectionManifest m;
    m.budget_mode = BudgetMode::token_count;

    long long max_single = 0;
    for (const auto& [id, score] : scores) {
        auto it = token_counts.find(id);
        if (it == token_counts.end())
            throw std::invalid_argument("select_token_budget: missing token count for " + id);
        max_single = std::max(max_single, it->second);
    }
    if (budget_tokens < max_single) {
        m.warnings.push_back("budget " + std::to_string(budget_tokens) +
                             " below largest example (" + std::to_string(max_single) +
                             " tokens); selection may be empty");
    }

    long long used = 0;
    for (const auto& r : rank(scores, direction)) {
        long long cost = token_counts.at(*r.id);
        if (used + cost > budget_tokens) break;  // greedy prefix, stop at first overflow
        used += cost;
        m.retained_ids.push_back(*r.id);
        m.tau_rho = r.score;
    }
    m.totals.n_examples = static_cast<long long>(m.retained_ids.size());
    m.totals.n_tokens = used;
    return m;
}

std::map<std::string, double> exp_weights(const std::map<std::string, double>& scores,
                                          double lambda, double w_max) {
    if (lambda < 0.0) throw std::invalid_argument("exp_weights: lambda must be >= 0");
    if (w_max <= 0.0) throw std::invalid_argument("exp_weights: w_max must be > 0");
    std::map<std::string, double> weights;
    for (const auto& [id, score] : scores)
        weights.emplace(id, std::min(std::exp(lambda * score), w_max));
    return weights;
}

namespace {
// Unbiased bounded draw; avoids the implementation-defined distribution
// of std::uniform_int_distribution so manifests replay across toolchains.
uint64_t bounded_draw(std::mt19937_64& gen, uint64_t bound) {
    uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        uint64_t x = gen();
        if (x >= threshold) return x % bound;
    }
}
}  // namespace

SelectionManifest random_baseline(const std::vector<std::string>& ids, double rho,
                                  uint64_t seed,
                                  const std::map<std::string, long long>* token_counts) {
    require_rho(rho);
    SelectionManifest m;
    m.method = "random";
    m.rho = rho;
    m.seed = seed;

    std::vector<std::string> shuffled(ids);
    std::mt19937_64 gen(seed);
    for (size_t i = shuffled.size(); i > 1; --i)
        std::swap(shuffled[i - 1], shuffled[bounded_draw(gen, i)]);

    size_t keep = static_cast<size_t>(
        std::clamp<long long>(round_count(rho, ids.size()), 0,
                              static_cast<long long>(ids.size())));
    m.retained_ids.assign(shuffled.begin(), shuffled.begin() + static_cast<long>(keep));
    m.totals = totals_for(m.retained_ids, token_counts);
    return m;
}

namespace {
// Average ranks on ties.
std::vector<double> ranks_of(std::span<const double> xs) {
    std::vector<size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(xs.size());
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
        double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}
}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2)
        throw std::invalid_argument("spearman: need two equal-length columns");
    auto ra = ranks_of(a), rb = ranks_of(b);
    double n = static_cast<double>(a.size());
    double mean = (n + 1.0) / 2.0;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double da = ra[i] - mean, db = rb[i] - mean;
        cov += da * db;
        va += da * da;
        vb += db * db;
    }
    if (va == 0.0 || vb == 0.0) return 0.0;  // a constant column has no ranking
    return cov / std::sqrt(va * vb);
}

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

struct Column {
    std::string name;
    std::vector<double> values;
};

}  // namespace

Report make_report(const std::vector<specificity::SpecificityScores>& scores,
                   const std::vector<SelectionManifest>& manifests) {
    Report report;
    std::ostringstream md;
    md << "# Selection report\n\n";
    md << "Examples scored: " << scores.size() << "\n\n";

    std::vector<Column> cols = {{"tss", {}}, {"tss_nce", {}}, {"tss_pp", {}},
                                {"ppl", {}}, {"ifd", {}},     {"s_plus", {}}};
    for (const auto& s : scores) {
        cols[0].values.push_back(s.tss);
        cols[1].values.push_back(s.tss_nce);
        cols[2].values.push_back(s.tss_pp);
        cols[3].values.push_back(s.ppl);
        cols[4].values.push_back(s.ifd.value_or(std::numeric_limits<double>::quiet_NaN()));
        cols[5].values.push_back(s.s_plus);
    }

    if (!scores.empty()) {
        md << "## Mutual-information estimate\n\n";
        md << "Mean TSS over the corpus: " << fmt(specificity::mi_estimate(cols[0].values))
           << "\n\n";
    }

    // Histograms: 20 fixed bins per column.
    std::ostringstream hist_csv;
    hist_csv << "column,bin_low,bin_high,count\n";
    md << "## Score histograms\n\n";
    for (const auto& col : cols) {
        std::vector<double> vals;
        for (double v : col.values)
            if (std::isfinite(v)) vals.push_back(v);
        if (vals.empty()) continue;
        auto [lo_it, hi_it] = std::minmax_element(vals.begin(), vals.end());
        double lo = *lo_it, hi = *hi_it;
        double width = (hi - lo) == 0.0 ? 1.0 : (hi - lo) / 20.0;
        std::vector<size_t> bins(20, 0);
        for (double v : vals) {
            size_t b = std::min<size_t>(19, static_cast<size_t>((v - lo) / width));
            ++bins[b];
        }
        md << "- `" << col.name << "`: min " << fmt(lo) << ", max " << fmt(hi) << ", n "
           << vals.size() << "\n";
        for (size_t b = 0; b < bins.size(); ++b) {
            hist_csv << col.name << ',' << fmt(lo + width * static_cast<double>(b)) << ','
                     << fmt(lo + width * static_cast<double>(b + 1)) << ',' << bins[b]
                     << '\n';
        }
    }
    md << "\n";
    report.csv_files.emplace_back("report_histograms.csv", hist_csv.str());

    // Rank-correlation matrix between scoring methods.
    if (scores.size() >= 2) {
        std::vector<const Column*> usable;
        for (const auto& col : cols) {
            bool finite = std::all_of(col.values.begin(), col.values.end(),
                                      [](double v) { return std::isfinite(v); });
            if (finite) usable.push_back(&col);
        }
        std::ostringstream corr_csv;
        corr_csv << "method";
        for (const auto* c : usable) corr_csv << ',' << c->name;
        corr_csv << '\n';
        md << "## Spearman rank correlations\n\n";
        md << "|        |";
        for (const auto* c : usable) md << ' ' << c->name << " |";
        md << "\n|--------|";
        for (size_t i = 0; i < usable.size(); ++i) md << "---|";
        md << "\n";
        for (const auto* a : usable) {
            corr_csv << a->name;
            md << "| " << a->name << " |";
            for (const auto* b : usable) {
                double r = spearman(a->values, b->values);
                corr_csv << ',' << fmt(r);
                md << ' ' << fmt(r) << " |";
            }
            corr_csv << '\n';
            md << "\n";
        }
        md << "\n";
        report.csv_files.emplace_back("report_correlations.csv", corr_csv.str());
    }

    // Budget accounting per manifest.
    std::ostringstream man_csv;
    man_csv << "method,rho,budget_mode,tau_rho,n_examples,n_tokens\n";
    md << "## Manifests\n\n";
    md << "| method | rho | mode | tau_rho | examples | tokens |\n";
    md << "|--------|-----|------|---------|----------|--------|\n";
    for (const auto& m : manifests) {
        std::string tau = m.tau_rho ? fmt(*m.tau_rho) : "";
        man_csv << m.method << ',' << fmt(m.rho) << ',' << to_string(m.budget_mode) << ','
                << tau << ',' << m.totals.n_examples << ',' << m.totals.n_tokens << '\n';
        md << "| " << m.method << " | " << fmt(m.rho) << " | " << to_string(m.budget_mode)
           << " | " << tau << " | " << m.totals.n_examples << " | " << m.totals.n_tokens
           << " |\n";
    }
    report.csv_files.emplace_back("report_manifests.csv", man_csv.str());

    report.markdown = md.str();
    return report;
}

json to_json(const SelectionManifest& m) {
    json j{{"method", m.method},
           {"rho", m.rho},
           {"seed", m.seed},
           {"budget_mode", to_string(m.budget_mode)},
           {"retained_ids", m.retained_ids},
           {"totals", {{"n_examples", m.totals.n_examples}, {"n_tokens", m.totals.n_tokens}}},
           {"config_hash", m.config_hash}};
    j["tau_rho"] = m.tau_rho ? json(*m.tau_rho) : json(nullptr);
    if (!m.weights.empty()) j["weights"] = m.weights;
    if (!m.warnings.empty()) j["warnings"] = m.warnings;
    return j;
}

SelectionManifest manifest_from_json(const json& j) {
    SelectionManifest m;
    m.method = j.at("method").get<std::string>();
    m.rho = j.at("rho").get<double>();
    m.seed = j.value("seed", 0ULL);
    m.budget_mode = j.value("budget_mode", std::string("example_count")) == "token_count"
                        ? BudgetMode::token_count
                        : BudgetMode::example_count;
    m.retained_ids = j.at("retained_ids").get<std::vector<std::string>>();
    if (j.contains("tau_rho") && !j.at("tau_rho").is_null())
        m.tau_rho = j.at("tau_rho").get<double>();
    if (j.contains("weights"))
        m.weights = j.at("weights").get<std::map<std::string, double>>();
    if (j.contains("totals")) {
        m.totals.n_examples = j.at("totals").value("n_examples", 0LL);
        m.totals.n_tokens = j.at("totals").value("n_tokens", 0LL);
    }
    m.config_hash = j.value("config_hash", std::string{});
    if (j.contains("warnings"))
        m.warnings = j.at("warnings").get<std::vector<std::string>>();
    return m;
}

}  // namespace taskspec::selection
