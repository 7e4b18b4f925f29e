#pragma once

#include <string>

#include <json.hpp>

#include "taskspec/altgen.hpp"
#include "taskspec/candidates.hpp"
#include "taskspec/config.hpp"
#include "taskspec/scoring.hpp"

namespace taskspec::http {

using json = nlohmann::json;

// Response decoding is kept pure so the wire contracts are testable
// without sockets.

// {"token_logprobs": [real...], "n_tokens": int} -> TokenScores.
// Throws ContractViolation on missing fields, count mismatch or
// positive log-probs.
scoring::TokenScores parse_score_response(const json& body);

// {"text": "..."} -> completion text.
std::string parse_generate_response(const json& body);

// {"embeddings": [[real...]...]} -> unit-normalized vectors.
std::vector<std::vector<double>> parse_embed_response(const json& body, size_t expected,
                                                      int dim);

json make_score_request(std::string_view prefix, std::string_view continuation);
json make_generate_request(std::string_view system_text, std::string_view user_text,
                           double temperature);
json make_embed_request(const std::vector<std::string>& texts);

// POSTs JSON to the endpoint with bounded exponential-backoff retries.
// 4xx responses fail immediately (contract), connection errors / 5xx /
// timeouts retry, and exhaustion raises BackendError with the attempt
// count. Idempotent by construction.
json post_json(const config::BackendSpec& spec, const json& body);

class HttpScorer final : public scoring::ConditionalScorer {
  public:
    explicit HttpScorer(config::BackendSpec spec);
    std::string backend_id() const override;
    scoring::TokenScores score_tokens(std::string_view prefix,
                                      std::string_view continuation) const override;

  private:
    config::BackendSpec spec_;
};

class HttpGenerator final : public altgen::Generator {
  public:
    explicit HttpGenerator(config::BackendSpec spec);
    std::string backend_id() const override;
    std::string complete(std::string_view system_text,
                         std::string_view user_text) override;

  private:
    config::BackendSpec spec_;
};

class HttpEmbedder final : public candidates::Embedder {
  public:
    explicit HttpEmbedder(config::BackendSpec spec);
    std::string backend_id() const override;
    int dim() const override { return spec_.dim; }
    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;

  private:
    config::BackendSpec spec_;
};

}  // namespace taskspec::http
