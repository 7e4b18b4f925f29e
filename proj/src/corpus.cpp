#include "taskspec/corpus.hpp"

#include <unordered_set>

#include "taskspec/errors.hpp"
#include "taskspec/hash.hpp"
#include "taskspec/jsonl.hpp"
#include "taskspec/text.hpp"

namespace taskspec::corpus {

std::string example_id(std::string_view instruction, std::string_view input,
                       std::string_view output, std::string_view source) {
    return hash::content_hash({instruction, input, output, source});
}

namespace {

// Fetches a mapped key as a string, or records why it can't.
bool fetch_field(const json& obj, const std::string& key, std::string* out,
                 std::string* reason) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        *reason = "missing key \"" + key + "\"";
        return false;
    }
    if (!it->is_string()) {
        *reason = "key \"" + key + "\" is not a string";
        return false;
    }
    *out = it->get<std::string>();
    return true;
}

}  // namespace

IngestResult ingest(const std::filesystem::path& path, const FieldMapping& mapping) {
    IngestResult result;
    jsonl::for_each_line(path, [&](size_t line_no, const std::string& line) {
        ++result.lines_read;
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded()) {
            result.errors.push_back({line_no, "invalid JSON"});
            return;
        }
        if (!obj.is_object()) {
            result.errors.push_back({line_no, "line is not a JSON object"});
            return;
        }

        InstructionExample ex;
        std::string reason;
        if (!fetch_field(obj, mapping.instruction_key, &ex.instruction, &reason) ||
            !fetch_field(obj, mapping.output_key, &ex.output, &reason)) {
            result.errors.push_back({line_no, reason});
            return;
        }
        if (!mapping.input_key.empty()) {
            if (!fetch_field(obj, mapping.input_key, &ex.input, &reason)) {
                result.errors.push_back({line_no, reason});
                return;
            }
        }
        if (text::trim(ex.instruction).empty()) {
            result.errors.push_back({line_no, "instruction empty after trimming"});
            return;
        }
        if (text::trim(ex.output).empty()) {
            result.errors.push_back({line_no, "output empty after trimming"});
            return;
        }
        ex.source = mapping.source_tag;
        ex.id = example_id(ex.instruction, ex.input, ex.output, ex.source);
        result.examples.push_back(std::move(ex));
    });
    return result;
}

DedupeResult dedupe(const std::vector<InstructionExample>& examples) {
    DedupeResult result;
    std::unordered_set<std::string> seen;
    seen.reserve(examples.size());
    for (const auto& ex : examples) {
        if (seen.insert(ex.id).second) {
            result.examples.push_back(ex);
        } else {
            ++result.duplicates;
        }
    }
    return result;
}

json to_json(const InstructionExample& ex) {
    return json{{"id", ex.id},         {"instruction", ex.instruction},
                {"input", ex.input},   {"output", ex.output},
                {"source", ex.source}, {"meta", ex.meta}};
}

InstructionExample example_from_json(const json& j) {
    InstructionExample ex;
    ex.id = j.at("id").get<std::string>();
    ex.instruction = j.at("instruction").get<std::string>();
    ex.input = j.at("input").get<std::string>();
    ex.output = j.at("output").get<std::string>();
    ex.source = j.at("source").get<std::string>();
    if (j.contains("meta")) ex.meta = j.at("meta").get<std::map<std::string, std::string>>();
    return ex;
}

void write_corpus(const std::filesystem::path& path,
                  const std::vector<InstructionExample>& examples) {
    jsonl::Writer w(path, /*append=*/false);
    for (const auto& ex : examples) w.write(to_json(ex));
}

std::vector<InstructionExample> load_corpus(const std::filesystem::path& path) {
    std::vector<InstructionExample> out;
    for (const auto& rec : jsonl::read_records(path)) out.push_back(example_from_json(rec));
    return out;
}

}  // namespace taskspec::corpus
