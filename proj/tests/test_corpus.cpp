#include <doctest.h>

#include <random>
#include <set>

#include "support/helpers.hpp"
#include "taskspec/corpus.hpp"
#include "taskspec/errors.hpp"
#include "taskspec/jsonl.hpp"

using namespace taskspec;
using testutil::TempDir;

TEST_CASE("ingest maps identity fields") {
    TempDir dir;
    auto file = dir / "data.jsonl";
    testutil::spit(file, R"({"instruction":"Add 2+2","input":"","output":"4"})" "\n");

    auto result = corpus::ingest(file, {});
    REQUIRE(result.examples.size() == 1);
    CHECK(result.errors.empty());
    CHECK(result.examples[0].instruction == "Add 2+2");
    CHECK(result.examples[0].input.empty());
    CHECK(result.examples[0].output == "4");
    CHECK(result.examples[0].id.size() == 64);
}

TEST_CASE("ingest is deterministic: identical lines get identical ids") {
    TempDir dir;
    auto file = dir / "data.jsonl";
    std::string line = R"({"instruction":"Echo","input":"x","output":"x"})" "\n";
    testutil::spit(file, line + line);

    auto result = corpus::ingest(file, {});
    REQUIRE(result.examples.size() == 2);
    CHECK(result.examples[0].id == result.examples[1].id);

    auto again = corpus::ingest(file, {});
    REQUIRE(again.examples.size() == 2);
    CHECK(again.examples[0].id == result.examples[0].id);
}

TEST_CASE("ingest handles dolly-style mapping against the expected fixture") {
    corpus::FieldMapping mapping;
    mapping.input_key = "context";
    mapping.output_key = "response";
    mapping.source_tag = "dolly";

    auto result = corpus::ingest(
        std::filesystem::path(TASKSPEC_FIXTURE_DIR) / "dolly_style.jsonl", mapping);
    REQUIRE(result.errors.empty());

    auto expected = jsonl::read_records(
        std::filesystem::path(TASKSPEC_FIXTURE_DIR) / "dolly_style_expected.jsonl");
    REQUIRE(result.examples.size() == expected.size());
    for (size_t i = 0; i < expected.size(); ++i) {
        CHECK(corpus::to_json(result.examples[i]) == expected[i]);
    }
}

TEST_CASE("ingest reports malformed lines without dropping valid ones") {
    TempDir dir;
    auto file = dir / "data.jsonl";
    testutil::spit(file,
                   R"({"instruction":"ok","input":"","output":"fine"})" "\n"
                   "not json at all\n"
                   R"({"input":"","output":"missing instruction"})" "\n"
                   R"({"instruction":"   ","input":"","output":"y"})" "\n"
                   R"({"instruction":"x","input":"","output":"  "})" "\n"
                   R"({"instruction":"also ok","input":"ctx","output":"yes"})" "\n");

    auto result = corpus::ingest(file, {});
    CHECK(result.examples.size() == 2);
    REQUIRE(result.errors.size() == 4);
    CHECK(result.errors[0].line_no == 2);
    CHECK(result.errors[1].line_no == 3);
    CHECK(result.errors[1].reason.find("instruction") != std::string::npos);
    CHECK(result.errors[2].line_no == 4);
    CHECK(result.errors[3].line_no == 5);
}

TEST_CASE("ingest of a missing file is fatal") {
    CHECK_THROWS_AS(corpus::ingest("/nonexistent/nope.jsonl", {}), FatalError);
}

TEST_CASE("empty input_key means the dataset has no input field") {
    TempDir dir;
    auto file = dir / "data.jsonl";
    testutil::spit(file, R"({"instruction":"List three colors.","output":"red green blue"})" "\n");
    corpus::FieldMapping mapping;
    mapping.input_key = "";
    auto result = corpus::ingest(file, mapping);
    REQUIRE(result.examples.size() == 1);
    CHECK(result.examples[0].input.empty());
}

TEST_CASE("dedupe keeps first occurrences") {
    auto e1 = testutil::make_example("a", "", "1");
    auto e2 = testutil::make_example("b", "", "2");

    auto result = corpus::dedupe({e1, e1, e2});
    REQUIRE(result.examples.size() == 2);
    CHECK(result.examples[0].id == e1.id);
    CHECK(result.examples[1].id == e2.id);
    CHECK(result.duplicates == 1);

    CHECK(corpus::dedupe({}).examples.empty());
}

TEST_CASE("dedupe matches a quadratic oracle on 1000 examples with planted duplicates") {
    std::mt19937 rng(42);
    std::vector<corpus::InstructionExample> examples;
    for (int i = 0; i < 900; ++i)
        examples.push_back(testutil::make_example("task " + std::to_string(i), "",
                                                  "out " + std::to_string(i)));
    // Plant 100 duplicates of random originals at random positions.
    for (int i = 0; i < 100; ++i) {
        auto copy = examples[rng() % 900];
        examples.insert(examples.begin() + static_cast<long>(rng() % examples.size()),
                        copy);
    }
    REQUIRE(examples.size() == 1000);

    // Naive O(N^2) duplicate count.
    size_t oracle_survivors = 0;
    for (size_t i = 0; i < examples.size(); ++i) {
        bool seen_before = false;
        for (size_t j = 0; j < i; ++j)
            if (examples[j].id == examples[i].id) seen_before = true;
        if (!seen_before) ++oracle_survivors;
    }
    CHECK(oracle_survivors == 900);

    auto result = corpus::dedupe(examples);
    CHECK(result.examples.size() == oracle_survivors);
    CHECK(result.duplicates == 100);

    // Idempotence.
    auto twice = corpus::dedupe(result.examples);
    CHECK(twice.duplicates == 0);
    CHECK(twice.examples.size() == result.examples.size());
}

TEST_CASE("corpus round-trips through the canonical JSONL form") {
    TempDir dir;
    auto e1 = testutil::make_example("inst", "in", "out", "src");
    e1.meta["note"] = "kept";
    auto path = dir / "corpus.jsonl";
    corpus::write_corpus(path, {e1});
    auto loaded = corpus::load_corpus(path);
    REQUIRE(loaded.size() == 1);
    CHECK(loaded[0].id == e1.id);
    CHECK(loaded[0].meta.at("note") == "kept");
}

TEST_CASE("jsonl repair drops a torn trailing record") {
    TempDir dir;
    auto path = dir / "log.jsonl";
    testutil::spit(path, "{\"a\":1}\n{\"a\":2}\n{\"a\":3");  // torn tail
    CHECK(jsonl::repair_truncated(path) == 2);
    CHECK(testutil::slurp(path) == "{\"a\":1}\n{\"a\":2}\n");
    // Repair is idempotent.
    CHECK(jsonl::repair_truncated(path) == 2);
    CHECK(jsonl::repair_truncated(dir / "missing.jsonl") == 0);
}
