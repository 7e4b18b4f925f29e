#include "taskspec/altgen.hpp"

#include <regex>
#include <set>

#include "taskspec/errors.hpp"
#include "taskspec/text.hpp"

namespace taskspec::altgen {

namespace {

constexpr std::string_view kWithInputSystem =
    "Generate exactly {k} distinct task instructions for the input below.\n"
    "Each instruction must:\n"
    "- Be answerable using only that input (no external documents).\n"
    "- Ask for a different type of output than the others.\n"
    "- Be a single sentence, at most 25 words.\n"
    "\n"
    "Return a numbered list (1., 2., ...) with one instruction per line.\n"
    "Do not include any explanations, headers, or extra text.";

constexpr std::string_view kWithInputUser = "Input:\n{input_text}";

constexpr std::string_view kNoInputSystem =
    "Given the original task instruction below, generate exactly {k} distinct "
    "alternative task instructions that do NOT require any extra input text.\n"
    "\n"
    "Each alternative instruction must:\n"
    "- Be about the same general topic or domain as the original instruction.\n"
    "- Ask for a different type of output or perspective (not just a paraphrase).\n"
    "- Be a single sentence, at most 25 words.\n"
    "\n"
    "Return a numbered list (1., 2., ...) with one instruction per line.\n"
    "Do not include any explanations, headers, or extra text.";

constexpr std::string_view kNoInputUser = "Original instruction:\n{original_instruction}";

std::string substitute(std::string_view tmpl, std::string_view placeholder,
                       std::string_view value) {
    std::string out(tmpl);
    size_t pos = out.find(placeholder);
    if (pos != std::string::npos) out.replace(pos, placeholder.size(), value);
    return out;
}

}  // namespace

std::string to_string(Provenance p) {
    return p == Provenance::generated ? "generated" : "retrieved";
}

std::string to_string(TemplateVariant v) {
    return v == TemplateVariant::with_input ? "with_input" : "no_input";
}

GenPrompt build_prompt(const corpus::InstructionExample& ex, int k) {
    if (k < 1) throw std::invalid_argument("build_prompt: k must be >= 1");
    GenPrompt prompt;
    std::string k_str = std::to_string(k);
    if (!ex.input.empty()) {
        prompt.system_text = substitute(kWithInputSystem, "{k}", k_str);
        prompt.user_text = substitute(kWithInputUser, "{input_text}", ex.input);
    } else {
        prompt.system_text = substitute(kNoInputSystem, "{k}", k_str);
        prompt.user_text =
            substitute(kNoInputUser, "{original_instruction}", ex.instruction);
    }
    return prompt;
}

ParsedList parse_numbered_list(std::string_view response, int k) {
    static const std::regex item_re(R"(^\s*\d+[.)]\s*(.+)$)");
    ParsedList result;
    std::set<std::string> seen;
    size_t start = 0;
    while (start <= response.size()) {
        size_t end = response.find('\n', start);
        std::string line(response.substr(
            start, end == std::string_view::npos ? std::string_view::npos : end - start));
        start = end == std::string_view::npos ? response.size() + 1 : end + 1;

        std::smatch m;
        if (!std::regex_match(line, m, item_re)) continue;
        ++result.matched_lines;
        std::string item = text::trim(m[1].str());
        if (item.empty()) continue;
        if (!seen.insert(text::normalize_instruction(item)).second) continue;
        if (static_cast<int>(result.items.size()) < k) result.items.push_back(item);
    }
    return result;
}

StubGenerator::StubGenerator(std::vector<std::string> pool) : pool_(std::move(pool)) {}

std::string StubGenerator::complete(std::string_view system_text,
                                    std::string_view user_text) {
    static const std::vector<std::string> kDefaultPool = {
        "Summarize the text in one sentence.",
        "List the key facts mentioned.",
        "Translate the text into French.",
        "Identify the main topic discussed.",
        "Rewrite the text in a formal tone.",
        "Extract all named entities.",
        "Classify the overall sentiment.",
        "Write a title for the text.",
        "Ask one question the text answers.",
        "Count how many claims are made.",
        "Explain the text to a child.",
        "Turn the text into bullet points.",
        "State the author's likely intent.",
        "Find any dates or numbers mentioned.",
        "Paraphrase the text in ten words.",
        "Describe the tone of the writing.",
        "Suggest a category label for the text.",
        "Draft a reply to the text.",
        "Point out any opinions expressed.",
        "Convert the text into a headline.",
        "Outline the structure of the passage.",
        "Judge whether the text is persuasive.",
        "Name the intended audience.",
        "Shorten the text to half its length.",
    };
    const auto& pool = pool_.empty() ? kDefaultPool : pool_;

    // The request names its own k ("... exactly {k} distinct ...").
    int k = 4;
    static const std::regex k_re(R"(exactly (\d+) distinct)");
    std::match_results<std::string_view::const_iterator> m;
    if (std::regex_search(system_text.begin(), system_text.end(), m, k_re))
        k = std::stoi(m[1].str());

    uint64_t seed = text::fnv1a64(user_text);
    std::string out;
    for (int i = 0; i < k; ++i) {
        size_t idx = (seed + static_cast<uint64_t>(i)) % pool.size();
        out += std::to_string(i + 1) + ". " + pool[idx] + "\n";
    }
    return out;
}

AltgenOutcome generate_alternatives(const corpus::InstructionExample& ex,
                                    const AltgenOptions& opts, Generator& gen,
                                    const RetrievalFn& retrieve) {
    AltgenOutcome outcome;
    outcome.set.example_id = ex.id;
    outcome.set.k_requested = opts.k;
    outcome.set.template_variant =
        ex.input.empty() ? TemplateVariant::no_input : TemplateVariant::with_input;

    const std::string true_norm = text::normalize_instruction(ex.instruction);
    std::set<std::string> seen;
    auto admit = [&](const std::string& candidate, Provenance prov) {
        std::string norm = text::normalize_instruction(candidate);
        if (norm.empty() || norm == true_norm) return false;
        if (!seen.insert(norm).second) return false;
        if (static_cast<int>(text::count_words(candidate)) > opts.max_words) {
            outcome.warnings.push_back("alternative exceeds " +
                                       std::to_string(opts.max_words) +
                                       " words: " + candidate);
        }
        outcome.set.alternatives.push_back({candidate, prov});
        return true;
    };

    GenPrompt prompt = build_prompt(ex, opts.k);
    bool backend_failed = false;
    for (int attempt = 0; attempt <= opts.max_retries; ++attempt) {
        std::string response;
        try {
            response = gen.complete(prompt.system_text, prompt.user_text);
            ++outcome.generation_calls;
        } catch (const std::exception& e) {
            ++outcome.generation_calls;
            backend_failed = true;
            outcome.warnings.push_back(std::string("generation call failed: ") + e.what());
            continue;
        }
        ParsedList parsed = parse_numbered_list(response, opts.k);
        if (parsed.items.empty()) {
            outcome.warnings.push_back("generation returned no parseable items");
        }
        for (const auto& item : parsed.items) {
            if (static_cast<int>(outcome.set.alternatives.size()) >= opts.k) break;
            admit(item, Provenance::generated);
        }
        if (static_cast<int>(outcome.set.alternatives.size()) >= opts.k) break;
    }

    // Shortfall: pad from the retrieval pool, nearest first.
    if (static_cast<int>(outcome.set.alternatives.size()) < opts.k && retrieve) {
        int missing = opts.k - static_cast<int>(outcome.set.alternatives.size());
        // Over-fetch: some neighbours may collide with existing entries.
        for (const auto& cand : retrieve(ex, missing + opts.k)) {
            if (static_cast<int>(outcome.set.alternatives.size()) >= opts.k) break;
            admit(cand, Provenance::retrieved);
        }
    }

    if (static_cast<int>(outcome.set.alternatives.size()) < opts.k) {
        outcome.ok = false;
        outcome.failure_reason =
            outcome.set.alternatives.empty() && backend_failed
                ? "generation backend failed and retrieval pool is empty"
                : "could not assemble " + std::to_string(opts.k) +
                      " distinct alternatives (got " +
                      std::to_string(outcome.set.alternatives.size()) + ")";
        return outcome;
    }
    outcome.ok = true;
    return outcome;
}

json to_json(const AlternativeSet& set) {
    json alts = json::array();
    for (const auto& a : set.alternatives)
        alts.push_back({{"text", a.text}, {"provenance", to_string(a.provenance)}});
    return json{{"example_id", set.example_id},
                {"alternatives", alts},
                {"template_variant", to_string(set.template_variant)},
                {"k_requested", set.k_requested}};
}

AlternativeSet alternative_set_from_json(const json& j) {
    AlternativeSet set;
    set.example_id = j.at("example_id").get<std::string>();
    for (const auto& a : j.at("alternatives")) {
        Alternative alt;
        alt.text = a.at("text").get<std::string>();
        alt.provenance = a.at("provenance").get<std::string>() == "retrieved"
                             ? Provenance::retrieved
                             : Provenance::generated;
        set.alternatives.push_back(std::move(alt));
    }
    set.template_variant = j.at("template_variant").get<std::string>() == "no_input"
                               ? TemplateVariant::no_input
                               : TemplateVariant::with_input;
    set.k_requested = j.value("k_requested", static_cast<int>(set.alternatives.size()));
    return set;
}

}  // namespace taskspec::altgen
