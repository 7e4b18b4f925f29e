#pragma once

// Synthetic corpus with a known specificity structure: "specific" examples
// copy rare instruction tokens into the output, "generic" examples copy
// high-frequency input tokens, so a task-specificity ranking and a pure
// likelihood ranking must disagree in a predictable way.

#include <string>
#include <vector>

#include "taskspec/corpus.hpp"

namespace testutil {

inline const std::vector<std::string>& common_words() {
    static const std::vector<std::string> words = {
        "the",    "report", "data",   "numbers", "table",  "values", "text",
        "record", "figure", "note",   "items",   "list",   "sample", "entry",
        "field",  "page",   "line",   "column",  "row",    "cell"};
    return words;
}

inline std::vector<taskspec::corpus::InstructionExample> specificity_corpus(
    int n_specific, int n_generic) {
    using taskspec::corpus::InstructionExample;
    const auto& words = common_words();
    std::vector<InstructionExample> corpus;
    corpus.reserve(static_cast<size_t>(n_specific + n_generic));

    for (int i = 0; i < n_specific; ++i) {
        // Three rare tokens unique to this example; the output copies them.
        std::string r1 = "zq" + std::to_string(i) + "a";
        std::string r2 = "zq" + std::to_string(i) + "b";
        std::string r3 = "zq" + std::to_string(i) + "c";
        InstructionExample ex;
        ex.instruction = "Repeat the code tokens " + r1 + " " + r2 + " " + r3 + " in order.";
        ex.input = "the " + words[i % words.size()] + " has " +
                   words[(i + 3) % words.size()] + " and " +
                   words[(i + 7) % words.size()] + " inside";
        ex.output = r1 + " " + r2 + " " + r3;
        ex.source = "synthetic-specific";
        ex.id = taskspec::corpus::example_id(ex.instruction, ex.input, ex.output, ex.source);
        corpus.push_back(std::move(ex));
    }

    static const std::vector<std::string> generic_forms = {
        "Describe the following data briefly.",
        "Look at the content and respond.",
        "Process the material below.",
        "Consider the passage and answer.",
        "Review the given information.",
        "Examine the provided details.",
        "Read the snippet and reply.",
        "Use the context to respond.",
    };
    for (int j = 0; j < n_generic; ++j) {
        // The focus token dominates the input; the output just echoes it,
        // so Y stays likely no matter which instruction is in front.
        const std::string& focus = words[j % words.size()];
        InstructionExample ex;
        ex.instruction = generic_forms[j % generic_forms.size()];
        ex.input = "the " + focus + " and " + focus + " with " + focus + " plus " +
                   words[(j + 5) % words.size()] + " " + words[(j + 11) % words.size()] +
                   " item" + std::to_string(j);
        ex.output = focus + " " + focus;
        ex.source = "synthetic-generic";
        ex.id = taskspec::corpus::example_id(ex.instruction, ex.input, ex.output, ex.source);
        corpus.push_back(std::move(ex));
    }
    return corpus;
}

inline bool is_specific(const taskspec::corpus::InstructionExample& ex) {
    return ex.source == "synthetic-specific";
}

}  // namespace testutil
