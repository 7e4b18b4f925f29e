#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "taskspec/selection.hpp"

using namespace taskspec::selection;

namespace {

std::map<std::string, double> random_scores(std::mt19937& rng, int n) {
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    std::map<std::string, double> scores;
    for (int i = 0; i < n; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "id%06d", i);
        scores.emplace(buf, dist(rng));
    }
    return scores;
}

}  // namespace

TEST_CASE("top-rho keeps the best round(rho*N) examples") {
    std::map<std::string, double> scores = {
        {"a", 3.0}, {"b", 1.0}, {"c", 2.0}, {"d", 5.0}, {"e", 4.0}};
    auto m = select_top_rho(scores, 0.4, Direction::desc);
    CHECK(m.retained_ids == std::vector<std::string>{"d", "e"});
    CHECK(m.tau_rho.value() == 4.0);
    for (const auto& id : m.retained_ids) CHECK(scores.at(id) >= m.tau_rho.value());

    auto all = select_top_rho(scores, 1.0, Direction::desc);
    CHECK(all.retained_ids.size() == 5);
    CHECK(all.tau_rho.value() == 1.0);  // the minimum score

    auto asc = select_top_rho(scores, 0.4, Direction::asc);
    CHECK(asc.retained_ids == std::vector<std::string>{"b", "c"});

    CHECK_THROWS_AS(select_top_rho(scores, 0.0, Direction::desc), std::invalid_argument);
    CHECK_THROWS_AS(select_top_rho(scores, 1.5, Direction::desc), std::invalid_argument);
    CHECK_THROWS_AS(select_top_rho({}, 0.5, Direction::desc), std::invalid_argument);
}

TEST_CASE("top-rho matches a full-sort oracle on 10k random scores") {
    std::mt19937 rng(777);
    auto scores = random_scores(rng, 10000);
    auto m = select_top_rho(scores, 0.05, Direction::desc);
    CHECK(m.retained_ids.size() == 500);

    // Oracle: independent full sort by (score desc, id asc).
    std::vector<std::pair<std::string, double>> rows(scores.begin(), scores.end());
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::set<std::string> oracle;
    for (size_t i = 0; i < 500; ++i) oracle.insert(rows[i].first);
    std::set<std::string> got(m.retained_ids.begin(), m.retained_ids.end());
    CHECK(got == oracle);

    // Threshold form of the same statement.
    size_t above = 0;
    for (const auto& [id, s] : scores)
        if (s >= m.tau_rho.value()) ++above;
    CHECK(above == 500);  // continuous scores: no ties at the threshold
}

TEST_CASE("budget grids are nested") {
    std::mt19937 rng(778);
    auto scores = random_scores(rng, 1000);
    std::vector<double> grid = {0.05, 0.15, 0.45, 0.75, 1.0};
    std::vector<SelectionManifest> manifests;
    for (double rho : grid) manifests.push_back(select_top_rho(scores, rho, Direction::desc));
    for (size_t i = 1; i < manifests.size(); ++i) {
        std::set<std::string> smaller(manifests[i - 1].retained_ids.begin(),
                                      manifests[i - 1].retained_ids.end());
        std::set<std::string> larger(manifests[i].retained_ids.begin(),
                                     manifests[i].retained_ids.end());
        CHECK(std::includes(larger.begin(), larger.end(), smaller.begin(), smaller.end()));
    }
}

TEST_CASE("token budget is greedy in score order and never exceeded") {
    std::map<std::string, double> scores = {{"a", 2.0}, {"b", 1.0}};
    std::map<std::string, long long> tokens = {{"a", 10}, {"b", 10}};
    auto m = select_token_budget(scores, tokens, 10, Direction::desc);
    CHECK(m.retained_ids == std::vector<std::string>{"a"});
    CHECK(m.totals.n_tokens == 10);

    auto all = select_token_budget(scores, tokens, 100, Direction::desc);
    CHECK(all.retained_ids.size() == 2);

    auto tiny = select_token_budget(scores, tokens, 5, Direction::desc);
    CHECK(tiny.retained_ids.empty());
    CHECK(!tiny.warnings.empty());
}

TEST_CASE("token budget matches a replay oracle on a 500-example fixture") {
    std::mt19937 rng(4242);
    auto scores = random_scores(rng, 500);
    std::map<std::string, long long> tokens;
    long long total = 0;
    for (const auto& [id, s] : scores) {
        tokens[id] = 20 + static_cast<long long>(rng() % 200);
        total += tokens[id];
    }
    long long budget = total / 20;  // 5% of total tokens
    auto m = select_token_budget(scores, tokens, budget, Direction::desc);

    CHECK(m.totals.n_tokens <= budget);
    // Replay: walk the same order and stop at the first overflow.
    std::vector<std::pair<std::string, double>> rows(scores.begin(), scores.end());
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::vector<std::string> oracle;
    long long used = 0;
    for (const auto& [id, s] : rows) {
        if (used + tokens[id] > budget) break;
        used += tokens[id];
        oracle.push_back(id);
    }
    CHECK(m.retained_ids == oracle);
    CHECK(m.totals.n_tokens == used);
    // Maximal under the greedy order: the next candidate would overflow.
    if (oracle.size() < rows.size())
        CHECK(used + tokens[rows[oracle.size()].first] > budget);
}

TEST_CASE("exponential weights") {
    std::map<std::string, double> zero_lambda = {{"a", -2.0}, {"b", 3.0}};
    for (const auto& [id, w] : exp_weights(zero_lambda, 0.0, 10.0)) CHECK(w == 1.0);

    std::map<std::string, double> scores = {{"a", 0.0}, {"b", 1.0}};
    auto w = exp_weights(scores, 1.0, 10.0);
    CHECK(w.at("a") == doctest::Approx(1.0));
    CHECK(w.at("b") == doctest::Approx(2.718281828459045));

    std::map<std::string, double> big = {{"a", 5.0}};
    CHECK(exp_weights(big, 1.0, 10.0).at("a") == 10.0);  // exp(5) ~ 148.41, clipped

    CHECK_THROWS_AS(exp_weights(scores, -1.0, 10.0), std::invalid_argument);
}

TEST_CASE("weights preserve score order") {
    std::mt19937 rng(5);
    auto scores = random_scores(rng, 200);
    auto weights = exp_weights(scores, 2.0, 1e9);
    for (const auto& [i, si] : scores)
        for (const auto& [j, sj] : scores)
            if (si > sj) CHECK(weights.at(i) >= weights.at(j));
}

TEST_CASE("extreme lambda concentrates normalized weights on the top example") {
    // lambda * score stays below the exp overflow threshold (~709).
    std::map<std::string, double> scores = {
        {"a", 0.11}, {"b", 0.32}, {"c", 0.57}, {"d", 0.70}, {"e", 0.64}};
    auto weights = exp_weights(scores, 1e3, std::numeric_limits<double>::max());
    double total = 0.0;
    for (const auto& [id, w] : weights) total += w;
    CHECK(weights.at("d") / total > 0.999999);
}

TEST_CASE("random baseline is seed-deterministic") {
    std::vector<std::string> ids;
    for (int i = 0; i < 100; ++i) ids.push_back("id" + std::to_string(i));
    auto m1 = random_baseline(ids, 0.3, 42);
    auto m2 = random_baseline(ids, 0.3, 42);
    CHECK(m1.retained_ids == m2.retained_ids);
    CHECK(m1.retained_ids.size() == 30);
    CHECK(random_baseline(ids, 0.3, 43).retained_ids != m1.retained_ids);
    CHECK(random_baseline(ids, 1.0, 7).retained_ids.size() == ids.size());
}

TEST_CASE("random baseline inclusion frequency is near rho") {
    std::vector<std::string> ids;
    for (int i = 0; i < 2000; ++i) ids.push_back("id" + std::to_string(i));
    std::map<std::string, int> hits;
    const int seeds = 300;
    for (int s = 0; s < seeds; ++s)
        for (const auto& id : random_baseline(ids, 0.5, 9000 + s).retained_ids) ++hits[id];
    // Binomial sigma at 300 seeds is ~0.029; 0.35/0.65 is a 5-sigma band.
    for (const auto& id : ids) {
        double freq = static_cast<double>(hits[id]) / seeds;
        CHECK(freq > 0.35);
        CHECK(freq < 0.65);
    }
}

TEST_CASE("spearman correlation") {
    std::vector<double> a = {1.0, 2.0, 3.0, 4.0};
    CHECK(spearman(a, a) == doctest::Approx(1.0));
    std::vector<double> rev = {4.0, 3.0, 2.0, 1.0};
    CHECK(spearman(a, rev) == doctest::Approx(-1.0));

    // Monotone transform: rank correlation stays exactly 1.
    std::vector<double> exp_a;
    for (double v : a) exp_a.push_back(std::exp(v));
    CHECK(spearman(a, exp_a) == doctest::Approx(1.0));

    std::mt19937 rng(606);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    std::vector<double> x(10000), y(10000);
    for (size_t i = 0; i < x.size(); ++i) {
        x[i] = dist(rng);
        y[i] = dist(rng);
    }
    CHECK(std::abs(spearman(x, y)) < 0.05);
}

TEST_CASE("report covers scores-only inputs and correlation of identical columns") {
    std::vector<taskspec::specificity::SpecificityScores> rows;
    std::mt19937 rng(8);
    std::uniform_real_distribution<double> dist(-3.0, 0.0);
    for (int i = 0; i < 40; ++i) {
        taskspec::specificity::SpecificityScores s;
        s.example_id = "e" + std::to_string(i);
        s.s_plus = dist(rng);
        s.tss = -s.s_plus;          // identical ranking to tss_pp below
        s.tss_pp = -s.s_plus;       // two identical columns
        s.tss_nce = dist(rng);
        s.ppl = std::exp(-s.s_plus);
        s.ifd = 0.5;
        rows.push_back(s);
    }
    auto report = make_report(rows, {});
    CHECK(report.markdown.find("Mutual-information estimate") != std::string::npos);
    CHECK(report.markdown.find("Manifests") != std::string::npos);
    bool has_correlations = false;
    for (const auto& [name, body] : report.csv_files) {
        if (name == "report_correlations.csv") {
            has_correlations = true;
            CHECK(body.find("tss") != std::string::npos);
        }
    }
    CHECK(has_correlations);
    // Identical columns correlate at exactly 1.
    std::vector<double> col_a, col_b;
    for (const auto& r : rows) {
        col_a.push_back(r.tss);
        col_b.push_back(r.tss_pp);
    }
    CHECK(spearman(col_a, col_b) == doctest::Approx(1.0));
}

TEST_CASE("manifest serde round trip") {
    SelectionManifest m;
    m.method = "tss";
    m.rho = 0.15;
    m.tau_rho = 1.25;
    m.retained_ids = {"b", "a"};
    m.weights = {{"a", 1.5}, {"b", 2.5}};
    m.budget_mode = BudgetMode::token_count;
    m.seed = 99;
    m.totals = {2, 123};
    m.config_hash = "cafe";
    auto back = manifest_from_json(to_json(m));
    CHECK(back.method == m.method);
    CHECK(back.rho == m.rho);
    CHECK(back.tau_rho.value() == 1.25);
    CHECK(back.retained_ids == m.retained_ids);
    CHECK(back.weights == m.weights);
    CHECK(back.budget_mode == BudgetMode::token_count);
    CHECK(back.totals.n_tokens == 123);

    m.tau_rho.reset();
    CHECK(!manifest_from_json(to_json(m)).tau_rho.has_value());
}
