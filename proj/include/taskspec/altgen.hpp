#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "taskspec/corpus.hpp"

namespace taskspec::altgen {

using json = nlohmann::json;

enum class Provenance { generated, retrieved };
enum class TemplateVariant { with_input, no_input };

std::string to_string(Provenance p);
std::string to_string(TemplateVariant v);

struct Alternative {
    std::string text;
    Provenance provenance = Provenance::generated;
};

// K counterfactual instructions for one example. Never contains the true
// instruction; entries are pairwise distinct under normalization.
struct AlternativeSet {
    std::string example_id;
    std::vector<Alternative> alternatives;
    TemplateVariant template_variant = TemplateVariant::with_input;
    int k_requested = 0;
};

struct GenPrompt {
    std::string system_text;
    std::string user_text;
};

// Renders the generation prompt for an example. The with-input variant
// sees only X; the no-input variant sees only the original instruction.
// The output Y is never part of either prompt.
GenPrompt build_prompt(const corpus::InstructionExample& ex, int k);

struct ParsedList {
    std::vector<std::string> items;  // deduped, order preserved, at most k
    size_t matched_lines = 0;        // numbered lines seen before dedupe/cap
};

// Extracts up to k items of a "1. ..." / "2) ..." numbered list.
ParsedList parse_numbered_list(std::string_view response, int k);

// Chat-style generation backend: (system, user) -> raw completion text.
class Generator {
  public:
    virtual ~Generator() = default;
    virtual std::string backend_id() const = 0;
    virtual std::string complete(std::string_view system_text,
                                 std::string_view user_text) = 0;
};

// Offline deterministic generator: answers every prompt with a numbered
// list drawn from a fixed pool of generic instructions, seeded by the user
// text. Lets the whole pipeline run without any model behind it.
class StubGenerator final : public Generator {
  public:
    StubGenerator() = default;
    explicit StubGenerator(std::vector<std::string> pool);
    std::string backend_id() const override { return "stub-gen-v1"; }
    std::string complete(std::string_view system_text,
                         std::string_view user_text) override;

  private:
    std::vector<std::string> pool_;
};

// Supplies nearest-neighbour corpus instructions used to pad a short
// generation result. Returns up to n texts, best first.
using RetrievalFn =
    std::function<std::vector<std::string>(const corpus::InstructionExample&, int)>;

struct AltgenOptions {
    int k = 4;
    int max_retries = 2;       // extra generation calls after the first
    int max_words = 25;        // prompt guidance; violations warn, not drop
};

struct AltgenOutcome {
    AlternativeSet set;
    bool ok = false;
    std::string failure_reason;          // set when !ok
    std::vector<std::string> warnings;
    int generation_calls = 0;
};

// Generates K alternatives, drops matches of the true instruction,
// retries on shortfall and finally pads from the retrieval pool.
AltgenOutcome generate_alternatives(const corpus::InstructionExample& ex,
                                    const AltgenOptions& opts, Generator& gen,
                                    const RetrievalFn& retrieve = {});

json to_json(const AlternativeSet& set);
AlternativeSet alternative_set_from_json(const json& j);

}  // namespace taskspec::altgen
