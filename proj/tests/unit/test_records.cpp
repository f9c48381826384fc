#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "infodensity/records.hpp"

using namespace infodensity;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           fmt::format("infodensity-records-{}", std::hash<std::string>{}(
                                                    doctest::getContextOptions()->currentTest->m_name));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

std::string read(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kGroupLine =
    R"({"group_id":"g1","question":"What is 2+2?","ground_truth":"4","traces":[)"
    R"({"trace_id":"a","text":"2+2=4\n\n\\boxed{4}","length_tokens":12,"correct":true,"sampler":"t=0.7"},)"
    R"({"trace_id":"b","text":"\\boxed{5}","length_tokens":3}],"split":"train"})";

}  // namespace

TEST_SUITE("records") {
  TEST_CASE("empty file loads zero records") {
    TempDir dir;
    write(dir.path / "empty.jsonl", "");
    const auto load = load_jsonl<RolloutGroupRecord>(dir.path / "empty.jsonl", true);
    CHECK(load.records.empty());
    CHECK(load.skipped.empty());
  }

  TEST_CASE("rollout group round-trips byte for byte, extras included") {
    const auto group = Json::parse(kGroupLine).get<RolloutGroupRecord>();
    CHECK(group.group_id == "g1");
    REQUIRE(group.traces.size() == 2);
    CHECK(group.traces[0].correct == true);
    CHECK_FALSE(group.traces[1].correct.has_value());
    CHECK(group.traces[0].extra["sampler"] == "t=0.7");
    CHECK(group.extra["split"] == "train");
    CHECK(Json(group).dump() == kGroupLine);
    CHECK(Json(group).get<RolloutGroupRecord>() == group);
  }

  TEST_CASE("labeled record round-trip and first error") {
    const std::string line =
        R"({"trace_id":"x","question":"Q","ground_truth":"1","steps":["s0","s1","s2"],)"
        R"("step_labels":["correct","incorrect","incorrect"],"trace_correct":false,)"
        R"("source_dataset":"gsm8k","annotator":7})";
    const auto rec = Json::parse(line).get<LabeledRecord>();
    CHECK(rec.first_error_index() == 1u);
    CHECK(Json(rec).dump() == line);

    auto correct = rec;
    correct.trace_correct = true;
    CHECK_FALSE(correct.first_error_index().has_value());

    // trace_id is optional.
    auto j = Json::parse(line);
    j.erase("trace_id");
    CHECK_FALSE(j.get<LabeledRecord>().trace_id.has_value());
  }

  TEST_CASE("labeled record schema violations name the field") {
    auto j = Json::parse(
        R"({"question":"Q","ground_truth":"1","steps":["a","b"],"step_labels":["correct"],)"
        R"("trace_correct":true,"source_dataset":"d"})");
    try {
      j.get<LabeledRecord>();
      FAIL("expected a schema error");
    } catch (const SchemaError& e) {
      CHECK(e.field() == "step_labels");
    }
    j["step_labels"] = {"correct", "maybe"};
    CHECK_THROWS_AS(j.get<LabeledRecord>(), SchemaError);
  }

  TEST_CASE("rollout schema violations name the field") {
    auto missing = Json::parse(kGroupLine);
    missing.erase("ground_truth");
    try {
      missing.get<RolloutGroupRecord>();
      FAIL("expected a schema error");
    } catch (const SchemaError& e) {
      CHECK(e.field() == "ground_truth");
    }

    auto nested = Json::parse(kGroupLine);
    nested["traces"][1]["length_tokens"] = -3;
    try {
      nested.get<RolloutGroupRecord>();
      FAIL("expected a schema error");
    } catch (const SchemaError& e) {
      CHECK(e.field() == "traces[1].length_tokens");
    }

    auto empty = Json::parse(kGroupLine);
    empty["traces"] = Json::array();
    CHECK_THROWS_AS(empty.get<RolloutGroupRecord>(), SchemaError);
    CHECK_THROWS_AS(Json::array().get<RolloutGroupRecord>(), SchemaError);
  }

  TEST_CASE("reward record key order and round-trip") {
    RewardRecord r;
    r.group_id = "g";
    r.breakdown.trace_id = "t";
    r.breakdown.auc = 0.25;
    r.breakdown.r_auc = 0.75;
    r.breakdown.r_mono = 1.0;
    r.breakdown.r_quality = 0.875;
    r.breakdown.r_infodensity = 0.875;
    r.breakdown.correct = true;
    r.breakdown.final_reward = 0.875;
    r.length_tokens = 40;
    r.trajectory = {2.0, 1.0, 0.0};
    const Json j = r;
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    CHECK(keys == std::vector<std::string>{"group_id", "trace_id", "auc", "r_auc", "r_mono",
                                           "r_quality", "r_length", "r_infodensity", "correct",
                                           "final_reward", "degenerate", "extracted_answer",
                                           "length_tokens", "trajectory"});
    CHECK(j["extracted_answer"].is_null());
    CHECK(j.get<RewardRecord>() == r);
  }

  TEST_CASE("malformed lines are skipped, or fatal with the line number in strict mode") {
    TempDir dir;
    auto bad = Json::parse(kGroupLine);
    bad.erase("question");
    write(dir.path / "mixed.jsonl",
          std::string(kGroupLine) + "\n\n{not json\n" + bad.dump() + "\n" + kGroupLine + "\n");

    const auto lenient = load_jsonl<RolloutGroupRecord>(dir.path / "mixed.jsonl", false);
    CHECK(lenient.records.size() == 2);
    REQUIRE(lenient.skipped.size() == 2);
    CHECK(lenient.skipped[0].line == 3);
    CHECK(lenient.skipped[1].line == 4);

    try {
      load_jsonl<RolloutGroupRecord>(dir.path / "mixed.jsonl", true);
      FAIL("expected a strict-mode failure");
    } catch (const JsonlError& e) {
      CHECK(e.line() == 3);
      CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }
  }

  TEST_CASE("strict mode reports a missing field with its line") {
    TempDir dir;
    auto bad = Json::parse(kGroupLine);
    bad.erase("ground_truth");
    write(dir.path / "bad.jsonl", std::string(kGroupLine) + "\n" + bad.dump() + "\n");
    try {
      load_jsonl<RolloutGroupRecord>(dir.path / "bad.jsonl", true);
      FAIL("expected a strict-mode failure");
    } catch (const JsonlError& e) {
      CHECK(e.line() == 2);
      CHECK(std::string(e.what()).find("ground_truth") != std::string::npos);
    }
  }

  TEST_CASE("save then load reproduces the file") {
    TempDir dir;
    write(dir.path / "in.jsonl", std::string(kGroupLine) + "\n");
    const auto load = load_jsonl<RolloutGroupRecord>(dir.path / "in.jsonl", true);
    save_jsonl(dir.path / "out.jsonl", load.records);
    CHECK(read(dir.path / "out.jsonl") == read(dir.path / "in.jsonl"));
  }

  TEST_CASE("missing input file is an error") {
    CHECK_THROWS_AS(load_jsonl<LabeledRecord>("/nonexistent/labeled.jsonl", false), JsonlError);
  }
}
