#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace taskspec::corpus {

using json = nlohmann::json;

// One instruction-tuning example. `id` is the content hash of
// (instruction, input, output, source), so re-ingesting identical content
// yields an identical id.
struct InstructionExample {
    std::string id;
    std::string instruction;
    std::string input;   // may be empty (no-context items)
    std::string output;  // non-empty after trimming
    std::string source;
    std::map<std::string, std::string> meta;
};

struct TokenCount {
    std::string example_id;
    long long n_output_tokens = 0;
    long long n_total_tokens = 0;
};

// Which source-file keys provide each canonical field. An empty input_key
// means the dataset has no input field at all (input is always "").
struct FieldMapping {
    std::string instruction_key = "instruction";
    std::string input_key = "input";
    std::string output_key = "output";
    std::string source_tag;
};

struct IngestError {
    size_t line_no = 0;
    std::string reason;
};

struct IngestResult {
    std::vector<InstructionExample> examples;
    std::vector<IngestError> errors;
    size_t lines_read = 0;
};

struct DedupeResult {
    std::vector<InstructionExample> examples;
    size_t duplicates = 0;
};

std::string example_id(std::string_view instruction, std::string_view input,
                       std::string_view output, std::string_view source);

// Streams a JSONL file into canonical examples, in input order. Malformed
// lines are collected in the result, never silently dropped. Throws
// FatalError when the file itself is unreadable.
IngestResult ingest(const std::filesystem::path& path, const FieldMapping& mapping);

// Keeps the first occurrence of each id.
DedupeResult dedupe(const std::vector<InstructionExample>& examples);

json to_json(const InstructionExample& ex);
InstructionExample example_from_json(const json& j);

void write_corpus(const std::filesystem::path& path,
                  const std::vector<InstructionExample>& examples);
std::vector<InstructionExample> load_corpus(const std::filesystem::path& path);

}  // namespace taskspec::corpus
