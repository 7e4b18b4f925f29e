#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace taskspec::jsonl {

using json = nlohmann::json;

// Calls fn(line_number, line) for every non-empty line. 1-based numbering.
// Throws FatalError if the file cannot be opened.
void for_each_line(const std::filesystem::path& path,
                   const std::function<void(size_t, const std::string&)>& fn);

// Parsed records of a JSONL file. Lines that fail to parse throw unless
// `lenient`; in lenient mode bad lines are skipped.
std::vector<json> read_records(const std::filesystem::path& path, bool lenient = false);

// Drops a torn trailing record (no trailing newline or unparseable tail),
// truncating the file to the last complete line. Returns the number of
// complete records left. Missing file counts as zero records.
size_t repair_truncated(const std::filesystem::path& path);

// Append-only JSONL writer; one flush per record so an interrupted run
// loses at most the torn tail.
class Writer {
  public:
    explicit Writer(const std::filesystem::path& path, bool append = true);
    void write(const json& record);
    size_t records_written() const { return n_written_; }

  private:
    std::ofstream out_;
    std::filesystem::path path_;
    size_t n_written_ = 0;
};

// Serialize a whole record list at once (used for canonical rewrites).
void write_records(const std::filesystem::path& path, const std::vector<json>& records);

}  // namespace taskspec::jsonl
