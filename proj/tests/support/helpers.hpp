#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "taskspec/corpus.hpp"
#include "taskspec/scoring.hpp"

namespace testutil {

// Unique scratch directory, removed on destruction.
class TempDir {
  public:
    TempDir() {
        static std::atomic<uint64_t> counter{0};
        auto base = std::filesystem::temp_directory_path();
        path_ = base / ("taskspec_test_" + std::to_string(::getpid()) + "_" +
                        std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline void spit(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline taskspec::corpus::InstructionExample make_example(const std::string& instruction,
                                                         const std::string& input,
                                                         const std::string& output,
                                                         const std::string& source = "test") {
    taskspec::corpus::InstructionExample ex;
    ex.instruction = instruction;
    ex.input = input;
    ex.output = output;
    ex.source = source;
    ex.id = taskspec::corpus::example_id(instruction, input, output, source);
    return ex;
}

// Fixed-response scorer: per-token log-prob looked up by assembled prefix,
// falling back to a default. Lets tests pin arbitrary score tables.
class TableScorer final : public taskspec::scoring::ConditionalScorer {
  public:
    explicit TableScorer(std::map<std::string, std::vector<double>> by_prefix,
                         std::vector<double> fallback = {-1.0})
        : by_prefix_(std::move(by_prefix)), fallback_(std::move(fallback)) {}

    std::string backend_id() const override { return "table-scorer"; }
    taskspec::scoring::TokenScores score_tokens(std::string_view prefix,
                                                std::string_view) const override {
        auto it = by_prefix_.find(std::string(prefix));
        return {it == by_prefix_.end() ? fallback_ : it->second};
    }

  private:
    std::map<std::string, std::vector<double>> by_prefix_;
    std::vector<double> fallback_;
};

}  // namespace testutil
