#include "taskspec/scoring.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <unordered_map>

#include "taskspec/errors.hpp"
#include "taskspec/hash.hpp"
#include "taskspec/jsonl.hpp"
#include "taskspec/text.hpp"

namespace taskspec::scoring {

std::string assemble_cond_prefix(std::string_view instruction, std::string_view input) {
    std::string prefix(instruction);
    prefix += "\n\n";
    if (!input.empty()) {
        prefix += input;
        prefix += "\n\n";
    }
    return prefix;
}

std::string assemble_uncond_prefix(std::string_view input) {
    if (input.empty()) return {};
    std::string prefix(input);
    prefix += "\n\n";
    return prefix;
}

std::string score_key(std::string_view backend_id, std::string_view template_id,
                      std::string_view instruction, std::string_view input,
                      std::string_view output) {
    return hash::content_hash({backend_id, template_id, instruction, input, output});
}

double normalized_loglik(const ScoreRecord& record) {
    if (record.n_tokens < 1)
        throw std::invalid_argument("normalized_loglik: n_tokens must be >= 1");
    return record.sum_logprob / static_cast<double>(record.n_tokens);
}

namespace {

std::string iso8601_now() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

jsonl::json record_to_json(const ScoreRecord& r) {
    return {{"key", r.key},
            {"sum_logprob", r.sum_logprob},
            {"n_tokens", r.n_tokens},
            {"n_floored", r.n_floored},
            {"created_at", r.created_at}};
}

ScoreRecord record_from_json(const jsonl::json& j) {
    ScoreRecord r;
    r.key = j.at("key").get<std::string>();
    r.sum_logprob = j.at("sum_logprob").get<double>();
    r.n_tokens = j.at("n_tokens").get<long long>();
    r.n_floored = j.value("n_floored", 0LL);
    r.created_at = j.value("created_at", std::string{});
    return r;
}

}  // namespace

ScoreCache::ScoreCache(const std::filesystem::path& file) { open(file); }

void ScoreCache::open(const std::filesystem::path& file) {
    std::lock_guard lock(mu_);
    path_ = file;
    records_.clear();
    load_();
}

void ScoreCache::load_() {
    std::error_code ec;
    if (!std::filesystem::exists(path_, ec)) return;
    // Drop a torn tail from a previous crash, then load last-write-wins.
    jsonl::repair_truncated(path_);
    for (const auto& rec : jsonl::read_records(path_)) {
        ScoreRecord r = record_from_json(rec);
        records_[r.key] = std::move(r);
    }
}

std::optional<ScoreRecord> ScoreCache::get(const std::string& key) const {
    std::lock_guard lock(mu_);
    auto it = records_.find(key);
    if (it == records_.end()) return std::nullopt;
    return it->second;
}

void ScoreCache::put(const ScoreRecord& record) {
    std::lock_guard lock(mu_);
    if (path_.empty()) throw FatalError("score cache used before open()");
    auto it = records_.find(record.key);
    if (it != records_.end() && it->second.sum_logprob == record.sum_logprob &&
        it->second.n_tokens == record.n_tokens) {
        return;  // identical payload already logged
    }
    std::ofstream out(path_, std::ios::app);
    if (!out) throw FatalError("score cache append failed: " + path_.string());
    out << record_to_json(record).dump() << '\n';
    out.flush();
    if (!out) throw FatalError("score cache write failed: " + path_.string());
    records_[record.key] = record;
}

size_t ScoreCache::size() const {
    std::lock_guard lock(mu_);
    return records_.size();
}

void ScoreCache::merge(const std::vector<std::filesystem::path>& shards,
                       const std::filesystem::path& out) {
    std::map<std::string, ScoreRecord> merged;
    for (const auto& shard : shards) {
        std::error_code ec;
        if (!std::filesystem::exists(shard, ec)) continue;
        for (const auto& rec : jsonl::read_records(shard)) {
            ScoreRecord r = record_from_json(rec);
            merged[r.key] = std::move(r);
        }
    }
    jsonl::Writer w(out, /*append=*/false);
    for (const auto& [key, r] : merged) w.write(record_to_json(r));
}

ToyCacheModel::ToyCacheModel(std::vector<std::string> vocab, double beta)
    : vocab_(std::move(vocab)), beta_(beta) {
    if (beta_ <= 0) throw std::invalid_argument("ToyCacheModel: beta must be > 0");
    std::sort(vocab_.begin(), vocab_.end());
    vocab_.erase(std::unique(vocab_.begin(), vocab_.end()), vocab_.end());
    if (vocab_.empty()) throw std::invalid_argument("ToyCacheModel: empty vocabulary");
    std::string joined;
    for (const auto& t : vocab_) {
        joined += t;
        joined.push_back('\x1f');
    }
    backend_id_ = "toy-cache:b=" + std::to_string(beta_) +
                  ":v=" + std::to_string(vocab_.size()) + ":" +
                  hash::sha256_hex(joined).substr(0, 8);
}

ToyCacheModel ToyCacheModel::from_corpus(
    const std::vector<corpus::InstructionExample>& corpus, double beta) {
    std::set<std::string> vocab;
    for (const auto& ex : corpus) {
        for (auto&& field : {ex.instruction, ex.input, ex.output}) {
            for (auto& tok : text::whitespace_tokens(field)) vocab.insert(std::move(tok));
        }
    }
    return ToyCacheModel(std::vector<std::string>(vocab.begin(), vocab.end()), beta);
}

double ToyCacheModel::token_prob(const std::vector<std::string>& context,
                                 const std::string& token) const {
    size_t count = 0;
    for (const auto& t : context)
        if (t == token) ++count;
    double v = static_cast<double>(vocab_.size());
    return (static_cast<double>(count) + beta_) /
           (static_cast<double>(context.size()) + beta_ * v);
}

TokenScores ToyCacheModel::score_tokens(std::string_view prefix,
                                        std::string_view continuation) const {
    std::vector<std::string> context = text::whitespace_tokens(prefix);
    std::vector<std::string> output = text::whitespace_tokens(continuation);

    // Incremental counts keep long outputs linear instead of quadratic.
    std::unordered_map<std::string, size_t> counts;
    counts.reserve(context.size() + output.size());
    for (const auto& t : context) ++counts[t];

    double v = static_cast<double>(vocab_.size());
    double len = static_cast<double>(context.size());
    TokenScores scores;
    scores.logprobs.reserve(output.size());
    for (const auto& tok : output) {
        auto it = counts.find(tok);
        double count = it == counts.end() ? 0.0 : static_cast<double>(it->second);
        scores.logprobs.push_back(std::log((count + beta_) / (len + beta_ * v)));
        ++counts[tok];
        len += 1.0;
    }
    return scores;
}

ScoringService::ScoringService(std::shared_ptr<ConditionalScorer> scorer,
                               ScoreCache* cache, double floor_logprob)
    : scorer_(std::move(scorer)), cache_(cache), floor_(floor_logprob) {}

ScoreRecord ScoringService::score_output(std::string_view instruction,
                                         std::string_view input,
                                         std::string_view output) {
    return score_(kCondTemplateId, instruction,
                  assemble_cond_prefix(instruction, input), input, output);
}

ScoreRecord ScoringService::score_output_uncond(std::string_view input,
                                                std::string_view output) {
    return score_(kUncondTemplateId, "", assemble_uncond_prefix(input), input, output);
}

ScoreRecord ScoringService::score_(std::string_view template_id,
                                   std::string_view instruction,
                                   std::string_view prefix, std::string_view input,
                                   std::string_view output) {
    if (text::trim(output).empty())
        throw std::invalid_argument("score: output must be non-empty");

    std::string key =
        score_key(scorer_->backend_id(), template_id, instruction, input, output);
    if (cache_ && cache_->is_open()) {
        if (auto hit = cache_->get(key)) {
            ++cache_hits_;
            return *hit;
        }
    }

    ++backend_calls_;
    TokenScores ts = scorer_->score_tokens(prefix, output);
    if (ts.logprobs.empty())
        throw ContractViolation("backend returned no token log-probs");

    ScoreRecord rec;
    rec.key = std::move(key);
    rec.n_tokens = static_cast<long long>(ts.logprobs.size());
    for (double lp : ts.logprobs) {
        if (lp > 0.0)
            throw ContractViolation("backend returned a positive token log-prob");
        if (!std::isfinite(lp) || lp < floor_) {
            lp = floor_;
            ++rec.n_floored;
        }
        rec.sum_logprob += lp;
    }
    rec.created_at = iso8601_now();
    if (cache_ && cache_->is_open()) cache_->put(rec);
    return rec;
}

}  // namespace taskspec::scoring
