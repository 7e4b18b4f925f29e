#include "taskspec/jsonl.hpp"

#include "taskspec/errors.hpp"

namespace taskspec::jsonl {

void for_each_line(const std::filesystem::path& path,
                   const std::function<void(size_t, const std::string&)>& fn) {
    std::ifstream in(path);
    if (!in) throw FatalError("cannot open file: " + path.string());
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        fn(line_no, line);
    }
}

std::vector<json> read_records(const std::filesystem::path& path, bool lenient) {
    std::vector<json> records;
    for_each_line(path, [&](size_t line_no, const std::string& line) {
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            if (lenient) return;
            throw FatalError("invalid JSON at " + path.string() + ":" +
                             std::to_string(line_no));
        }
        records.push_back(std::move(j));
    });
    return records;
}

size_t repair_truncated(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return 0;

    std::ifstream in(path, std::ios::binary);
    if (!in) throw FatalError("cannot open file: " + path.string());

    std::string line;
    size_t records = 0;
    std::uintmax_t good_end = 0;  // byte offset just past the last complete record
    std::uintmax_t offset = 0;
    while (std::getline(in, line)) {
        bool had_newline = !in.eof();
        offset += line.size() + (had_newline ? 1 : 0);
        if (!had_newline) break;  // torn tail: no trailing newline
        std::string probe = line;
        if (!probe.empty() && probe.back() == '\r') probe.pop_back();
        if (probe.find_first_not_of(" \t") == std::string::npos) {
            good_end = offset;
            continue;
        }
        json j = json::parse(probe, nullptr, false);
        if (j.is_discarded()) break;  // torn or corrupt: stop at last good record
        ++records;
        good_end = offset;
    }
    in.close();

    if (good_end < std::filesystem::file_size(path)) {
        std::filesystem::resize_file(path, good_end);
    }
    return records;
}

Writer::Writer(const std::filesystem::path& path, bool append) : path_(path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path, append ? std::ios::app : std::ios::trunc);
    if (!out_) throw FatalError("cannot open file for writing: " + path.string());
}

void Writer::write(const json& record) {
    out_ << record.dump() << '\n';
    out_.flush();
    if (!out_) throw FatalError("write failed: " + path_.string());
    ++n_written_;
}

void write_records(const std::filesystem::path& path, const std::vector<json>& records) {
    Writer w(path, /*append=*/false);
    for (const auto& r : records) w.write(r);
}

}  // namespace taskspec::jsonl
