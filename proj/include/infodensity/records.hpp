#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "infodensity/entropy.hpp"
#include "infodensity/reward.hpp"
#include "json.hpp"

// On-disk and on-wire schemas: rollouts.jsonl, labeled.jsonl and
// rewards.jsonl. Unknown keys are kept in `extra` and written back after the
// known keys, so a record dumped from a load reproduces its source line.
namespace infodensity {

using Json = nlohmann::ordered_json;

/// A record that does not match its schema. `field` names the offending key.
class SchemaError : public InvalidInput {
 public:
  SchemaError(std::string field, const std::string& message)
      : InvalidInput(message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct RolloutTraceRecord {
  std::string trace_id;
  std::string text;
  std::uint64_t length_tokens = 0;
  std::optional<bool> correct;
  Json extra = Json::object();

  bool operator==(const RolloutTraceRecord&) const = default;
};

struct RolloutGroupRecord {
  std::string group_id;
  std::string question;
  std::string ground_truth;
  std::vector<RolloutTraceRecord> traces;
  Json extra = Json::object();

  bool operator==(const RolloutGroupRecord&) const = default;
};

enum class StepLabel { correct, incorrect };

struct LabeledRecord {
  std::optional<std::string> trace_id;
  std::string question;
  std::string ground_truth;
  std::vector<std::string> steps;
  std::vector<StepLabel> step_labels;
  bool trace_correct = false;
  std::string source_dataset;
  Json extra = Json::object();

  /// Index of the first incorrect label for incorrect traces.
  std::optional<std::size_t> first_error_index() const;
  bool operator==(const LabeledRecord&) const = default;
};

/// One line of rewards.jsonl: the breakdown plus the trajectory it came from.
struct RewardRecord {
  std::string group_id;
  RewardBreakdown breakdown;
  std::optional<std::string> extracted_answer;
  std::uint64_t length_tokens = 0;
  std::vector<double> trajectory;

  bool operator==(const RewardRecord&) const = default;
};

void to_json(Json& j, const RolloutTraceRecord& r);
void from_json(const Json& j, RolloutTraceRecord& r);
void to_json(Json& j, const RolloutGroupRecord& r);
void from_json(const Json& j, RolloutGroupRecord& r);
void to_json(Json& j, const LabeledRecord& r);
void from_json(const Json& j, LabeledRecord& r);
void to_json(Json& j, const RewardBreakdown& b);
void to_json(Json& j, const RewardRecord& r);
void from_json(const Json& j, RewardRecord& r);

/// I/O failure, or a malformed line when loading in strict mode.
class JsonlError : public std::runtime_error {
 public:
  JsonlError(const std::string& message, std::size_t line = 0)
      : std::runtime_error(message), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct JsonlIssue {
  std::size_t line = 0;  // 1-based
  std::string message;
};

template <typename Record>
struct JsonlLoad {
  std::vector<Record> records;
  std::vector<JsonlIssue> skipped;
};

/// Reads one JSON object per line; blank lines are ignored. Malformed lines
/// are skipped and reported, or raise JsonlError naming the line in strict
/// mode.
template <typename Record>
JsonlLoad<Record> load_jsonl(const std::filesystem::path& path, bool strict) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw JsonlError(fmt::format("cannot open '{}' for reading", path.string()));
  JsonlLoad<Record> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      out.records.push_back(Json::parse(line).template get<Record>());
    } catch (const std::exception& e) {
      if (strict) {
        throw JsonlError(fmt::format("{}:{}: {}", path.string(), number, e.what()), number);
      }
      out.skipped.push_back({number, e.what()});
    }
  }
  if (in.bad()) throw JsonlError(fmt::format("read error on '{}'", path.string()));
  return out;
}

template <typename Record>
void save_jsonl(const std::filesystem::path& path, const std::vector<Record>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw JsonlError(fmt::format("cannot open '{}' for writing", path.string()));
  for (const auto& r : records) out << Json(r).dump() << '\n';
  out.flush();
  if (!out) throw JsonlError(fmt::format("write error on '{}'", path.string()));
}

}  // namespace infodensity
