#include "taskspec/http_backends.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "taskspec/errors.hpp"

namespace taskspec::http {

scoring::TokenScores parse_score_response(const json& body) {
    if (!body.is_object() || !body.contains("token_logprobs"))
        throw ContractViolation("score response missing token_logprobs");
    const auto& lps = body.at("token_logprobs");
    if (!lps.is_array() || lps.empty())
        throw ContractViolation("score response returned no log-probs");
    scoring::TokenScores ts;
    ts.logprobs.reserve(lps.size());
    for (const auto& v : lps) {
        if (!v.is_number()) throw ContractViolation("non-numeric token log-prob");
        double lp = v.get<double>();
        if (lp > 0.0) throw ContractViolation("positive token log-prob from backend");
        ts.logprobs.push_back(lp);
    }
    if (body.contains("n_tokens")) {
        auto n = body.at("n_tokens").get<long long>();
        if (n != static_cast<long long>(ts.logprobs.size()))
            throw ContractViolation("n_tokens disagrees with log-prob list length");
    }
    return ts;
}

std::string parse_generate_response(const json& body) {
    if (!body.is_object() || !body.contains("text") || !body.at("text").is_string())
        throw ContractViolation("generate response missing text");
    return body.at("text").get<std::string>();
}

std::vector<std::vector<double>> parse_embed_response(const json& body, size_t expected,
                                                      int dim) {
    if (!body.is_object() || !body.contains("embeddings"))
        throw ContractViolation("embed response missing embeddings");
    const auto& embs = body.at("embeddings");
    if (!embs.is_array() || embs.size() != expected)
        throw ContractViolation("embed response has wrong vector count");
    std::vector<std::vector<double>> out;
    out.reserve(embs.size());
    for (const auto& e : embs) {
        auto v = e.get<std::vector<double>>();
        if (static_cast<int>(v.size()) != dim)
            throw ContractViolation("embedding has wrong dimension");
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        if (norm == 0.0) throw ContractViolation("embedding has zero norm");
        for (double& x : v) x /= norm;
        out.push_back(std::move(v));
    }
    return out;
}

json make_score_request(std::string_view prefix, std::string_view continuation) {
    return json{{"prefix", std::string(prefix)},
                {"continuation", std::string(continuation)}};
}

json make_generate_request(std::string_view system_text, std::string_view user_text,
                           double temperature) {
    return json{{"system", std::string(system_text)},
                {"user", std::string(user_text)},
                {"temperature", temperature}};
}

json make_embed_request(const std::vector<std::string>& texts) {
    return json{{"texts", texts}};
}

namespace {

// "http://host:port/some/path" -> {"http://host:port", "/some/path"}
std::pair<std::string, std::string> split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    auto path_start = url.find('/', host_start);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

json post_json(const config::BackendSpec& spec, const json& body) {
    if (spec.url.empty()) throw FatalError("http backend has no url configured");
    auto [base, path] = split_url(spec.url);

    httplib::Headers headers;
    if (!spec.auth_env.empty()) {
        const char* token = std::getenv(spec.auth_env.c_str());
        if (token && *token)
            headers.emplace("Authorization", std::string("Bearer ") + token);
    }

    std::string payload = body.dump();
    int attempts = 0;
    std::string last_error;
    for (int attempt = 0; attempt <= spec.max_retries; ++attempt) {
        if (attempt > 0) {
            auto backoff = std::chrono::milliseconds(250LL << (attempt - 1));
            std::this_thread::sleep_for(backoff);
        }
        ++attempts;
        httplib::Client client(base);
        client.set_connection_timeout(spec.timeout_ms / 1000,
                                      (spec.timeout_ms % 1000) * 1000);
        client.set_read_timeout(spec.timeout_ms / 1000, (spec.timeout_ms % 1000) * 1000);
        auto res = client.Post(path, headers, payload, "application/json");
        if (!res) {
            last_error = "connection error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_error = "server error " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw ContractViolation("backend returned HTTP " + std::to_string(res->status));
        json parsed = json::parse(res->body, nullptr, false);
        if (parsed.is_discarded())
            throw ContractViolation("backend returned invalid JSON");
        return parsed;
    }
    throw BackendError("backend unreachable after " + std::to_string(attempts) +
                           " attempts: " + last_error,
                       attempts);
}

HttpScorer::HttpScorer(config::BackendSpec spec) : spec_(std::move(spec)) {}

std::string HttpScorer::backend_id() const {
    return config::backend_id(spec_, "http-scorer:" + spec_.url);
}

scoring::TokenScores HttpScorer::score_tokens(std::string_view prefix,
                                              std::string_view continuation) const {
    return parse_score_response(post_json(spec_, make_score_request(prefix, continuation)));
}

HttpGenerator::HttpGenerator(config::BackendSpec spec) : spec_(std::move(spec)) {}

std::string HttpGenerator::backend_id() const {
    return config::backend_id(spec_, "http-gen:" + spec_.url);
}

std::string HttpGenerator::complete(std::string_view system_text,
                                    std::string_view user_text) {
    return parse_generate_response(
        post_json(spec_, make_generate_request(system_text, user_text, spec_.temperature)));
}

HttpEmbedder::HttpEmbedder(config::BackendSpec spec) : spec_(std::move(spec)) {}

std::string HttpEmbedder::backend_id() const {
    return config::backend_id(spec_, "http-embed:" + spec_.url);
}

std::vector<std::vector<double>> HttpEmbedder::embed(const std::vector<std::string>& texts) {
    return parse_embed_response(post_json(spec_, make_embed_request(texts)), texts.size(),
                                spec_.dim);
}

}  // namespace taskspec::http
