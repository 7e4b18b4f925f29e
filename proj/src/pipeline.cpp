#include "taskspec/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <thread>

#include "taskspec/errors.hpp"
#include "taskspec/hash.hpp"
#include "taskspec/http_backends.hpp"
#include "taskspec/jsonl.hpp"
#include "taskspec/text.hpp"

namespace taskspec::pipeline {

namespace {

constexpr int kBlockSize = 64;

// Runs fn(i) for i in [0, n) with at most `workers` threads in flight,
// block by block so callers can flush results in input order between
// blocks (resume-friendly: an interrupt loses at most one block).
template <typename Fn>
void for_each_block(size_t n, int workers, int block_size,
                    const std::function<void(size_t, size_t)>& flush, Fn&& fn) {
    size_t block_start = 0;
    while (block_start < n) {
        size_t block_end = std::min(n, block_start + static_cast<size_t>(block_size));
        if (workers <= 1) {
            for (size_t i = block_start; i < block_end; ++i) fn(i);
        } else {
            std::atomic<size_t> next{block_start};
            std::vector<std::thread> pool;
            int n_threads = std::min<int>(workers, static_cast<int>(block_end - block_start));
            pool.reserve(static_cast<size_t>(n_threads));
            std::atomic<bool> failed{false};
            std::exception_ptr first_error;
            std::mutex err_mu;
            for (int t = 0; t < n_threads; ++t) {
                pool.emplace_back([&] {
                    for (;;) {
                        size_t i = next.fetch_add(1);
                        if (i >= block_end || failed.load()) return;
                        try {
                            fn(i);
                        } catch (...) {
                            std::lock_guard lock(err_mu);
                            if (!first_error) first_error = std::current_exception();
                            failed.store(true);
                            return;
                        }
                    }
                });
            }
            for (auto& th : pool) th.join();
            if (first_error) std::rethrow_exception(first_error);
        }
        flush(block_start, block_end);
        block_start = block_end;
    }
}

std::string short_hash(const std::string& full) { return full.substr(0, 8); }

std::string rho_tag(double rho) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.3f", rho);
    return buf;
}

// Wraps the configured generator so stage stats can count backend calls.
class CountingGenerator final : public altgen::Generator {
  public:
    CountingGenerator(altgen::Generator& inner, std::atomic<uint64_t>& counter)
        : inner_(inner), counter_(counter) {}
    std::string backend_id() const override { return inner_.backend_id(); }
    std::string complete(std::string_view system_text, std::string_view user_text) override {
        ++counter_;
        return inner_.complete(system_text, user_text);
    }

  private:
    altgen::Generator& inner_;
    std::atomic<uint64_t>& counter_;
};

void check_config_hash(const jsonl::json& record, const std::string& expected,
                       const std::filesystem::path& file) {
    std::string got = record.value("config_hash", std::string{});
    if (!got.empty() && got != expected) {
        throw ConfigMismatch("artifact " + file.string() +
                             " was produced under config hash " + short_hash(got) +
                             ", current is " + short_hash(expected) +
                             "; use a fresh out_dir or matching config");
    }
}

}  // namespace

Pipeline::Pipeline(config::RunConfig cfg) : cfg_(std::move(cfg)), out_(cfg_.out_dir) {
    std::filesystem::create_directories(out_);
    std::filesystem::create_directories(cfg_.cache_dir);
}

std::filesystem::path Pipeline::corpus_path() const { return out_ / "corpus.jsonl"; }
std::filesystem::path Pipeline::alternatives_path() const {
    return out_ / "alternatives.jsonl";
}
std::filesystem::path Pipeline::pools_path() const { return out_ / "pools.jsonl"; }
std::filesystem::path Pipeline::manifests_dir() const { return out_ / "manifests"; }
std::filesystem::path Pipeline::subsets_dir() const { return out_ / "subsets"; }
std::filesystem::path Pipeline::weights_dir() const { return out_ / "weights"; }
std::filesystem::path Pipeline::report_path() const { return out_ / "report.md"; }

std::filesystem::path Pipeline::scores_path() const {
    auto& self = const_cast<Pipeline&>(*this);
    return out_ / ("scores_" + short_hash(self.score_config_hash()) + ".jsonl");
}
std::filesystem::path Pipeline::tokens_path() const {
    auto& self = const_cast<Pipeline&>(*this);
    return out_ / ("tokens_" + short_hash(self.score_config_hash()) + ".jsonl");
}
std::filesystem::path Pipeline::unscorable_path() const {
    auto& self = const_cast<Pipeline&>(*this);
    return out_ / ("unscorable_" + short_hash(self.score_config_hash()) + ".jsonl");
}
std::filesystem::path Pipeline::manifest_path(const std::string& method, double rho) const {
    return manifests_dir() / ("manifest_" + method + "_rho" + rho_tag(rho) + ".json");
}
std::filesystem::path Pipeline::weights_path(const std::string& method) const {
    return weights_dir() / ("weights_" + method + ".json");
}

const std::vector<corpus::InstructionExample>& Pipeline::corpus_() {
    if (!corpus_loaded_) {
        if (!std::filesystem::exists(corpus_path()))
            throw FatalError("no corpus at " + corpus_path().string() +
                             "; run the ingest stage first");
        corpus_cache_ = corpus::load_corpus(corpus_path());
        corpus_loaded_ = true;
    }
    return corpus_cache_;
}

scoring::ScoringService& Pipeline::scoring_service_() {
    if (!service_) {
        if (cfg_.scoring.kind == "toy") {
            scorer_ = std::make_shared<scoring::ToyCacheModel>(
                scoring::ToyCacheModel::from_corpus(corpus_(), cfg_.scoring.beta));
        } else if (cfg_.scoring.kind == "http") {
            scorer_ = std::make_shared<http::HttpScorer>(cfg_.scoring);
        } else {
            throw FatalError("unknown scoring backend kind: " + cfg_.scoring.kind);
        }
        cache_ = std::make_unique<scoring::ScoreCache>(
            std::filesystem::path(cfg_.cache_dir) /
            ("scores_" + short_hash(hash::sha256_hex(scorer_->backend_id())) + ".jsonl"));
        service_ = std::make_unique<scoring::ScoringService>(scorer_, cache_.get());
    }
    return *service_;
}

altgen::Generator& Pipeline::generator_() {
    if (!generator_impl_) {
        if (cfg_.generation.kind == "stub") {
            generator_impl_ = std::make_unique<altgen::StubGenerator>();
        } else if (cfg_.generation.kind == "http") {
            generator_impl_ = std::make_unique<http::HttpGenerator>(cfg_.generation);
        } else {
            throw FatalError("unknown generation backend kind: " + cfg_.generation.kind);
        }
    }
    return *generator_impl_;
}

candidates::Embedder& Pipeline::embedder_() {
    if (!embedder_impl_) {
        if (cfg_.embedding.kind == "hashed_bow") {
            embedder_impl_ = std::make_unique<candidates::HashedBowEmbedder>(cfg_.embedding.dim);
        } else if (cfg_.embedding.kind == "http") {
            embedder_impl_ = std::make_unique<http::HttpEmbedder>(cfg_.embedding);
        } else {
            throw FatalError("unknown embedding backend kind: " + cfg_.embedding.kind);
        }
    }
    return *embedder_impl_;
}

const candidates::EmbeddingIndex& Pipeline::index_() {
    if (!index_impl_) {
        index_impl_ = std::make_unique<candidates::EmbeddingIndex>();
        index_impl_->build(corpus_(), embedder_());
    }
    return *index_impl_;
}

std::string Pipeline::scoring_backend_id() {
    if (cfg_.scoring.kind == "toy") return scoring_service_().backend_id();
    return config::backend_id(cfg_.scoring, "http-scorer:" + cfg_.scoring.url);
}

std::string Pipeline::score_config_hash() {
    return config::score_stage_hash(cfg_, scoring_backend_id());
}

StageStats Pipeline::ingest() {
    StageStats stats;
    if (cfg_.dataset.path.empty()) throw FatalError("config: dataset.path is empty");
    auto result = corpus::ingest(cfg_.dataset.path, cfg_.dataset.mapping);
    auto deduped = corpus::dedupe(result.examples);
    corpus::write_corpus(corpus_path(), deduped.examples);

    if (!result.errors.empty()) {
        jsonl::Writer w(out_ / "ingest_errors.jsonl", /*append=*/false);
        for (const auto& err : result.errors)
            w.write({{"line", err.line_no}, {"reason", err.reason}});
    }
    stats.processed = deduped.examples.size();
    stats.skipped = deduped.duplicates;
    stats.failed = result.errors.size();
    if (deduped.duplicates > 0)
        stats.warnings.push_back(std::to_string(deduped.duplicates) + " duplicate ids dropped");
    corpus_cache_ = std::move(deduped.examples);
    corpus_loaded_ = true;
    return stats;
}

StageStats Pipeline::gen_alts() {
    StageStats stats;
    const auto& corpus = corpus_();
    const std::string stage_hash = config::gen_stage_hash(cfg_, generator_().backend_id());

    jsonl::repair_truncated(alternatives_path());
    std::set<std::string> present;
    if (std::filesystem::exists(alternatives_path())) {
        for (const auto& rec : jsonl::read_records(alternatives_path())) {
            check_config_hash(rec, stage_hash, alternatives_path());
            present.insert(rec.at("example_id").get<std::string>());
        }
    }

    std::atomic<uint64_t> gen_calls{0};
    CountingGenerator gen(generator_(), gen_calls);
    altgen::AltgenOptions opts{.k = cfg_.spec.k, .max_retries = cfg_.gen_retries};
    altgen::RetrievalFn retrieve;
    if (cfg_.n_retrieved > 0) {
        retrieve = [this](const corpus::InstructionExample& ex, int n) {
            return candidates::knn_retrieve(index_(), ex.id, n);
        };
        index_();  // build before the parallel section (single-writer phase)
    }

    std::vector<size_t> todo;
    for (size_t i = 0; i < corpus.size(); ++i)
        if (!present.count(corpus[i].id)) todo.push_back(i);
    stats.skipped = corpus.size() - todo.size();

    jsonl::Writer alts_out(alternatives_path(), /*append=*/true);
    jsonl::Writer failures(out_ / "gen_failures.jsonl", /*append=*/todo.size() != corpus.size());
    std::vector<altgen::AltgenOutcome> results(todo.size());

    for_each_block(
        todo.size(), cfg_.max_inflight, kBlockSize,
        [&](size_t begin, size_t end) {
            for (size_t i = begin; i < end; ++i) {
                auto& outcome = results[i];
                for (const auto& w : outcome.warnings) stats.warnings.push_back(w);
                if (outcome.ok) {
                    auto rec = altgen::to_json(outcome.set);
                    rec["config_hash"] = stage_hash;
                    alts_out.write(rec);
                    ++stats.processed;
                } else {
                    failures.write({{"example_id", outcome.set.example_id},
                                    {"stage", "gen_alts"},
                                    {"reason", outcome.failure_reason}});
                    ++stats.failed;
                }
                results[i] = {};  // release
            }
        },
        [&](size_t i) {
            results[i] = altgen::generate_alternatives(corpus[todo[i]], opts, gen, retrieve);
        });

    stats.backend_calls = gen_calls.load();
    return stats;
}

StageStats Pipeline::build_pools() {
    StageStats stats;
    const auto& corpus = corpus_();
    if (!std::filesystem::exists(alternatives_path()))
        throw FatalError("no alternatives at " + alternatives_path().string() +
                         "; run the gen-alts stage first");

    const std::string stage_hash = config::pool_stage_hash(
        cfg_, generator_().backend_id(), scoring_backend_id(), embedder_().backend_id());

    std::map<std::string, altgen::AlternativeSet> alts;
    for (const auto& rec : jsonl::read_records(alternatives_path()))
        alts.emplace(rec.at("example_id").get<std::string>(),
                     altgen::alternative_set_from_json(rec));

    jsonl::repair_truncated(pools_path());
    std::set<std::string> present;
    if (std::filesystem::exists(pools_path())) {
        for (const auto& rec : jsonl::read_records(pools_path())) {
            check_config_hash(rec, stage_hash, pools_path());
            present.insert(rec.at("example_id").get<std::string>());
        }
    }

    if (cfg_.n_retrieved > 0) index_();
    auto& scorer = scoring_service_();
    uint64_t calls_before = scorer.backend_calls();
    uint64_t hits_before = scorer.cache_hits();

    struct PoolResult {
        jsonl::json record;
        bool ok = false;
        std::string reason;
        std::string example_id;
        std::vector<std::string> warnings;
    };

    std::vector<size_t> todo;
    for (size_t i = 0; i < corpus.size(); ++i)
        if (!present.count(corpus[i].id)) todo.push_back(i);
    stats.skipped = corpus.size() - todo.size();

    jsonl::Writer pools_out(pools_path(), /*append=*/true);
    jsonl::Writer failures(out_ / "pool_failures.jsonl",
                           /*append=*/todo.size() != corpus.size());
    std::vector<PoolResult> results(todo.size());

    for_each_block(
        todo.size(), cfg_.max_inflight, kBlockSize,
        [&](size_t begin, size_t end) {
            for (size_t i = begin; i < end; ++i) {
                auto& r = results[i];
                for (const auto& w : r.warnings) stats.warnings.push_back(w);
                if (r.ok) {
                    pools_out.write(r.record);
                    ++stats.processed;
                } else {
                    failures.write({{"example_id", r.example_id},
                                    {"stage", "build_pool"},
                                    {"reason", r.reason}});
                    ++stats.failed;
                }
                results[i] = {};
            }
        },
        [&](size_t i) {
            const auto& ex = corpus[todo[i]];
            auto& r = results[i];
            r.example_id = ex.id;
            auto it = alts.find(ex.id);
            if (it == alts.end()) {
                r.reason = "no alternatives for example";
                return;
            }
            auto pool = candidates::build_pool(ex, it->second,
                                               cfg_.n_retrieved > 0 ? &index_() : nullptr,
                                               cfg_.n_retrieved);
            if (pool.empty()) {
                r.reason = "empty candidate pool";
                return;
            }
            auto hard = candidates::mine_hard(ex, pool, scorer, cfg_.spec.m, &r.warnings);
            jsonl::json hard_json = jsonl::json::array();
            for (const auto& neg : hard.negatives)
                hard_json.push_back({{"text", neg.text}, {"score", neg.normalized_score}});
            r.record = {{"example_id", ex.id},
                        {"candidates", pool},
                        {"hard", hard_json},
                        {"config_hash", stage_hash}};
            r.ok = true;
        });

    stats.backend_calls = scorer.backend_calls() - calls_before;
    stats.cache_hits = scorer.cache_hits() - hits_before;
    return stats;
}

StageStats Pipeline::score() {
    StageStats stats;
    const auto& corpus = corpus_();
    if (!std::filesystem::exists(alternatives_path()))
        throw FatalError("no alternatives at " + alternatives_path().string() +
                         "; run the gen-alts stage first");
    if (!std::filesystem::exists(pools_path())) {
        auto pool_stats = build_pools();
        stats.backend_calls += pool_stats.backend_calls;
        stats.cache_hits += pool_stats.cache_hits;
    }

    const std::string cfg_hash = score_config_hash();

    std::map<std::string, altgen::AlternativeSet> alts;
    for (const auto& rec : jsonl::read_records(alternatives_path()))
        alts.emplace(rec.at("example_id").get<std::string>(),
                     altgen::alternative_set_from_json(rec));

    std::map<std::string, std::vector<double>> hard_by_id;
    for (const auto& rec : jsonl::read_records(pools_path())) {
        std::vector<double> hs;
        for (const auto& h : rec.at("hard")) hs.push_back(h.at("score").get<double>());
        hard_by_id.emplace(rec.at("example_id").get<std::string>(), std::move(hs));
    }

    jsonl::repair_truncated(scores_path());
    jsonl::repair_truncated(tokens_path());
    std::set<std::string> scores_present;
    if (std::filesystem::exists(scores_path())) {
        for (const auto& rec : jsonl::read_records(scores_path())) {
            check_config_hash(rec, cfg_hash, scores_path());
            scores_present.insert(rec.at("example_id").get<std::string>());
        }
    }
    std::set<std::string> tokens_present;
    if (std::filesystem::exists(tokens_path()))
        for (const auto& rec : jsonl::read_records(tokens_path()))
            tokens_present.insert(rec.at("example_id").get<std::string>());

    auto& scorer = scoring_service_();
    uint64_t calls_before = scorer.backend_calls();
    uint64_t hits_before = scorer.cache_hits();

    struct ScoreResult {
        specificity::SpecificityScores scores;
        corpus::TokenCount tokens;
        bool ok = false;
        std::string reason;
        std::string example_id;
        std::vector<std::string> flags;
    };

    // A crash can land between the score append and the token append, so
    // completeness means present in BOTH files.
    std::vector<size_t> todo;
    for (size_t i = 0; i < corpus.size(); ++i)
        if (!scores_present.count(corpus[i].id) || !tokens_present.count(corpus[i].id))
            todo.push_back(i);
    stats.skipped = corpus.size() - todo.size();

    jsonl::Writer scores_out(scores_path(), /*append=*/true);
    jsonl::Writer tokens_out(tokens_path(), /*append=*/true);
    jsonl::Writer unscorable(unscorable_path(), /*append=*/todo.size() != corpus.size());
    std::vector<ScoreResult> results(todo.size());

    for_each_block(
        todo.size(), cfg_.max_inflight, kBlockSize,
        [&](size_t begin, size_t end) {
            for (size_t i = begin; i < end; ++i) {
                auto& r = results[i];
                if (r.ok) {
                    bool fresh = !scores_present.count(r.example_id);
                    if (fresh) scores_out.write(specificity::to_json(r.scores));
                    if (!tokens_present.count(r.example_id)) {
                        tokens_out.write({{"example_id", r.example_id},
                                          {"n_output_tokens", r.tokens.n_output_tokens},
                                          {"n_total_tokens", r.tokens.n_total_tokens}});
                    }
                    if (fresh) {
                        for (const auto& f : r.flags)
                            unscorable.write({{"example_id", r.example_id},
                                              {"stage", "score"},
                                              {"reason", f},
                                              {"excluded", false}});
                    }
                    ++stats.processed;
                } else {
                    unscorable.write({{"example_id", r.example_id},
                                      {"stage", "score"},
                                      {"reason", r.reason},
                                      {"excluded", true}});
                    ++stats.failed;
                }
                results[i] = {};
            }
        },
        [&](size_t i) {
            const auto& ex = corpus[todo[i]];
            auto& r = results[i];
            r.example_id = ex.id;
            auto alt_it = alts.find(ex.id);
            if (alt_it == alts.end()) {
                r.reason = "unscorable for TSS: no alternatives";
                return;
            }
            auto hard_it = hard_by_id.find(ex.id);
            if (hard_it == hard_by_id.end() || hard_it->second.empty()) {
                r.reason = "unscorable for TSS++: empty hard set";
                return;
            }

            auto true_rec = scorer.score_output(ex.instruction, ex.input, ex.output);
            if (true_rec.n_floored > 0)
                r.flags.push_back("floored " + std::to_string(true_rec.n_floored) +
                                  " token log-probs in true score");

            auto& s = r.scores;
            s.example_id = ex.id;
            s.config_hash = cfg_hash;
            s.s_true = true_rec.sum_logprob;
            s.s_plus = scoring::normalized_loglik(true_rec);

            std::vector<double> alt_raw, alt_norm;
            for (const auto& alt : alt_it->second.alternatives) {
                auto rec = scorer.score_output(alt.text, ex.input, ex.output);
                alt_raw.push_back(rec.sum_logprob);
                alt_norm.push_back(scoring::normalized_loglik(rec));
            }
            s.s_alts = alt_raw;
            s.tss = cfg_.spec.normalize_eq1 ? specificity::tss(s.s_plus, alt_norm)
                                            : specificity::tss(s.s_true, alt_raw);

            s.hard_scores = hard_it->second;
            s.tss_nce = specificity::tss_nce(s.s_plus, s.hard_scores, cfg_.spec.tau);
            s.tss_pp = specificity::tss_pp(s.s_plus, s.hard_scores, cfg_.spec.tau,
                                           cfg_.spec.alpha);
            s.ppl = specificity::ppl_score(s.s_plus);

            auto uncond_rec = scorer.score_output_uncond(ex.input, ex.output);
            double s_uncond = scoring::normalized_loglik(uncond_rec);
            if (s_uncond == 0.0) {
                r.flags.push_back("ifd undefined: zero unconditioned loss");
            } else {
                s.ifd = specificity::ifd_score(s.s_plus, s_uncond);
            }

            r.tokens.example_id = ex.id;
            r.tokens.n_output_tokens = true_rec.n_tokens;
            r.tokens.n_total_tokens =
                true_rec.n_tokens +
                static_cast<long long>(
                    text::whitespace_tokens(
                        scoring::assemble_cond_prefix(ex.instruction, ex.input))
                        .size());
            r.ok = true;
        });

    stats.backend_calls = scorer.backend_calls() - calls_before;
    stats.cache_hits = scorer.cache_hits() - hits_before;
    return stats;
}

namespace {

struct LoadedScores {
    std::vector<specificity::SpecificityScores> rows;
    std::map<std::string, long long> token_counts;
    std::string cfg_hash;
};

}  // namespace

StageStats Pipeline::select() {
    StageStats stats;
    const std::string cfg_hash = score_config_hash();
    if (!std::filesystem::exists(scores_path()))
        throw FatalError("no scores at " + scores_path().string() +
                         "; run the score stage first");

    std::vector<specificity::SpecificityScores> rows;
    for (const auto& rec : jsonl::read_records(scores_path())) {
        check_config_hash(rec, cfg_hash, scores_path());
        rows.push_back(specificity::scores_from_json(rec));
    }
    std::map<std::string, long long> token_counts;
    if (std::filesystem::exists(tokens_path()))
        for (const auto& rec : jsonl::read_records(tokens_path()))
            token_counts[rec.at("example_id").get<std::string>()] =
                rec.at("n_total_tokens").get<long long>();

    std::map<std::string, corpus::InstructionExample> by_id;
    for (const auto& ex : corpus_()) by_id.emplace(ex.id, ex);

    long long total_tokens = 0;
    for (const auto& [id, n] : token_counts) total_tokens += n;

    std::filesystem::create_directories(manifests_dir());
    std::filesystem::create_directories(subsets_dir());

    auto column = [&](const std::string& method,
                      std::vector<std::string>* excluded) -> std::map<std::string, double> {
        std::map<std::string, double> scores;
        for (const auto& row : rows) {
            if (method == "ppl") {
                scores.emplace(row.example_id, row.ppl);
            } else if (method == "ifd") {
                if (row.ifd) {
                    scores.emplace(row.example_id, *row.ifd);
                } else if (excluded) {
                    excluded->push_back(row.example_id);
                }
            } else if (method == "tss" || method == "tss_exp") {
                scores.emplace(row.example_id, row.tss);
            } else {
                scores.emplace(row.example_id, row.tss_pp);  // tsspp, tsspp_exp
            }
        }
        return scores;
    };

    static const std::set<std::string> kKnownMethods = {
        "random", "ppl", "ifd", "tss", "tss_exp", "tsspp", "tsspp_exp"};
    for (const auto& method : cfg_.selection.methods) {
        if (!kKnownMethods.count(method))
            throw FatalError("unknown selection method: " + method);
        std::vector<std::string> excluded;
        std::map<std::string, double> scores;
        selection::Direction dir = selection::Direction::desc;
        if (method == "ppl") dir = selection::Direction::asc;
        if (method != "random") scores = column(method, &excluded);
        if (!excluded.empty())
            stats.warnings.push_back(method + ": " + std::to_string(excluded.size()) +
                                     " examples excluded (undefined score)");
        if (method != "random" && scores.empty()) {
            stats.warnings.push_back(method + ": no defined scores, manifests skipped");
            continue;
        }

        for (double rho : cfg_.selection.rho_grid) {
            selection::SelectionManifest manifest;
            if (method == "random") {
                std::vector<std::string> ids;
                ids.reserve(rows.size());
                for (const auto& row : rows) ids.push_back(row.example_id);
                std::sort(ids.begin(), ids.end());
                manifest = selection::random_baseline(ids, rho, cfg_.selection.seed,
                                                      &token_counts);
            } else if (cfg_.selection.budget_mode == selection::BudgetMode::token_count) {
                long long budget = std::llround(rho * static_cast<double>(total_tokens));
                manifest = selection::select_token_budget(scores, token_counts, budget, dir);
                manifest.rho = rho;
            } else {
                manifest = selection::select_top_rho(scores, rho, dir, &token_counts);
            }
            manifest.method = method;
            manifest.seed = cfg_.selection.seed;
            manifest.budget_mode = cfg_.selection.budget_mode;
            manifest.config_hash = cfg_hash;
            if (method == "tss_exp" || method == "tsspp_exp") {
                std::map<std::string, double> retained_scores;
                for (const auto& id : manifest.retained_ids)
                    retained_scores.emplace(id, scores.at(id));
                manifest.weights = selection::exp_weights(
                    retained_scores, cfg_.selection.lambda, cfg_.selection.w_max);
            }
            for (const auto& w : manifest.warnings) stats.warnings.push_back(w);

            std::ofstream mf(manifest_path(method, rho));
            mf << selection::to_json(manifest).dump(2) << '\n';

            jsonl::Writer subset(subsets_dir() / ("subset_" + method + "_rho" +
                                                  rho_tag(rho) + ".jsonl"),
                                 /*append=*/false);
            for (const auto& id : manifest.retained_ids) {
                auto it = by_id.find(id);
                if (it != by_id.end()) subset.write(corpus::to_json(it->second));
            }
            ++stats.processed;
        }
    }
    return stats;
}

StageStats Pipeline::weight() {
    StageStats stats;
    const std::string cfg_hash = score_config_hash();
    if (!std::filesystem::exists(scores_path()))
        throw FatalError("no scores at " + scores_path().string() +
                         "; run the score stage first");

    std::map<std::string, double> tss_col, tsspp_col;
    for (const auto& rec : jsonl::read_records(scores_path())) {
        check_config_hash(rec, cfg_hash, scores_path());
        auto row = specificity::scores_from_json(rec);
        tss_col.emplace(row.example_id, row.tss);
        tsspp_col.emplace(row.example_id, row.tss_pp);
    }

    std::filesystem::create_directories(weights_dir());
    for (const auto& [method, col] :
         std::vector<std::pair<std::string, const std::map<std::string, double>*>>{
             {"tss", &tss_col}, {"tsspp", &tsspp_col}}) {
        auto weights =
            selection::exp_weights(*col, cfg_.selection.lambda, cfg_.selection.w_max);
        jsonl::json j{{"method", method},
                      {"lambda", cfg_.selection.lambda},
                      {"w_max", cfg_.selection.w_max},
                      {"config_hash", cfg_hash},
                      {"weights", weights}};
        std::ofstream out(weights_path(method));
        out << j.dump(2) << '\n';
        ++stats.processed;
    }
    return stats;
}

StageStats Pipeline::report() {
    StageStats stats;
    const std::string cfg_hash = score_config_hash();
    if (!std::filesystem::exists(scores_path()))
        throw FatalError("no scores at " + scores_path().string() +
                         "; run the score stage first");

    std::vector<specificity::SpecificityScores> rows;
    for (const auto& rec : jsonl::read_records(scores_path())) {
        check_config_hash(rec, cfg_hash, scores_path());
        rows.push_back(specificity::scores_from_json(rec));
    }

    std::vector<selection::SelectionManifest> manifests;
    if (std::filesystem::exists(manifests_dir())) {
        std::vector<std::filesystem::path> files;
        for (const auto& entry : std::filesystem::directory_iterator(manifests_dir()))
            if (entry.path().extension() == ".json") files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& file : files) {
            std::ifstream in(file);
            jsonl::json j = jsonl::json::parse(in, nullptr, false);
            if (j.is_discarded()) continue;
            check_config_hash(j, cfg_hash, file);
            manifests.push_back(selection::manifest_from_json(j));
        }
    }

    auto report = selection::make_report(rows, manifests);
    {
        std::ofstream out(report_path());
        out << "Config hash: " << cfg_hash << "\n\n" << report.markdown;
    }
    for (const auto& [name, body] : report.csv_files) {
        std::ofstream out(out_ / name);
        out << body;
    }
    stats.processed = 1 + report.csv_files.size();
    return stats;
}

}  // namespace taskspec::pipeline
