#include "infodensity/records.hpp"

#include <algorithm>
#include <initializer_list>
#include <string_view>

namespace infodensity {
namespace {

const Json& require(const Json& j, std::string_view key) {
  if (!j.is_object()) throw SchemaError("", "record is not a JSON object");
  const auto it = j.find(key);
  if (it == j.end()) {
    throw SchemaError(std::string(key), fmt::format("missing required field '{}'", key));
  }
  return *it;
}

[[noreturn]] void wrong_type(std::string_view key, std::string_view expected) {
  throw SchemaError(std::string(key), fmt::format("field '{}' must be {}", key, expected));
}

std::string get_string(const Json& j, std::string_view key) {
  const auto& v = require(j, key);
  if (!v.is_string()) wrong_type(key, "a string");
  return v.get<std::string>();
}

std::string get_nonempty_string(const Json& j, std::string_view key) {
  auto s = get_string(j, key);
  if (s.empty()) wrong_type(key, "a non-empty string");
  return s;
}

bool get_bool(const Json& j, std::string_view key) {
  const auto& v = require(j, key);
  if (!v.is_boolean()) wrong_type(key, "a boolean");
  return v.get<bool>();
}

std::uint64_t get_count(const Json& j, std::string_view key) {
  const auto& v = require(j, key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
  wrong_type(key, "a non-negative integer");
}

double get_number(const Json& j, std::string_view key) {
  const auto& v = require(j, key);
  if (!v.is_number()) wrong_type(key, "a number");
  return v.get<double>();
}

std::vector<std::string> get_string_list(const Json& j, std::string_view key) {
  const auto& v = require(j, key);
  if (!v.is_array()) wrong_type(key, "an array of strings");
  std::vector<std::string> out;
  out.reserve(v.size());
  for (const auto& item : v) {
    if (!item.is_string()) wrong_type(key, "an array of strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

Json collect_extra(const Json& j, std::initializer_list<std::string_view> known) {
  Json extra = Json::object();
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) extra[it.key()] = *it;
  }
  return extra;
}

void append_extra(Json& j, const Json& extra) {
  if (!extra.is_object()) return;
  for (auto it = extra.begin(); it != extra.end(); ++it) {
    if (!j.contains(it.key())) j[it.key()] = *it;
  }
}

StepLabel parse_label(const Json& v) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "correct") return StepLabel::correct;
    if (s == "incorrect") return StepLabel::incorrect;
  }
  throw SchemaError("step_labels", "step_labels entries must be \"correct\" or \"incorrect\"");
}

}  // namespace

void to_json(Json& j, const RolloutTraceRecord& r) {
  j = Json::object();
  j["trace_id"] = r.trace_id;
  j["text"] = r.text;
  j["length_tokens"] = r.length_tokens;
  if (r.correct) j["correct"] = *r.correct;
  append_extra(j, r.extra);
}

void from_json(const Json& j, RolloutTraceRecord& r) {
  r.trace_id = get_nonempty_string(j, "trace_id");
  r.text = get_string(j, "text");
  r.length_tokens = get_count(j, "length_tokens");
  r.correct.reset();
  if (j.contains("correct") && !j.at("correct").is_null()) r.correct = get_bool(j, "correct");
  r.extra = collect_extra(j, {"trace_id", "text", "length_tokens", "correct"});
}

void to_json(Json& j, const RolloutGroupRecord& r) {
  j = Json::object();
  j["group_id"] = r.group_id;
  j["question"] = r.question;
  j["ground_truth"] = r.ground_truth;
  j["traces"] = Json::array();
  for (const auto& t : r.traces) j["traces"].push_back(Json(t));
  append_extra(j, r.extra);
}

void from_json(const Json& j, RolloutGroupRecord& r) {
  r.group_id = get_nonempty_string(j, "group_id");
  r.question = get_nonempty_string(j, "question");
  r.ground_truth = get_nonempty_string(j, "ground_truth");
  const auto& traces = require(j, "traces");
  if (!traces.is_array()) wrong_type("traces", "an array");
  if (traces.empty()) wrong_type("traces", "a non-empty array");
  r.traces.clear();
  for (std::size_t i = 0; i < traces.size(); ++i) {
    try {
      r.traces.push_back(traces[i].get<RolloutTraceRecord>());
    } catch (const SchemaError& e) {
      throw SchemaError(fmt::format("traces[{}].{}", i, e.field()),
                        fmt::format("traces[{}]: {}", i, e.what()));
    }
  }
  r.extra = collect_extra(j, {"group_id", "question", "ground_truth", "traces"});
}

std::optional<std::size_t> LabeledRecord::first_error_index() const {
  if (trace_correct) return std::nullopt;
  const auto it = std::find(step_labels.begin(), step_labels.end(), StepLabel::incorrect);
  if (it == step_labels.end()) return std::nullopt;
  return static_cast<std::size_t>(it - step_labels.begin());
}

void to_json(Json& j, const LabeledRecord& r) {
  j = Json::object();
  if (r.trace_id) j["trace_id"] = *r.trace_id;
  j["question"] = r.question;
  j["ground_truth"] = r.ground_truth;
  j["steps"] = r.steps;
  j["step_labels"] = Json::array();
  for (auto l : r.step_labels) {
    j["step_labels"].push_back(l == StepLabel::correct ? "correct" : "incorrect");
  }
  j["trace_correct"] = r.trace_correct;
  j["source_dataset"] = r.source_dataset;
  append_extra(j, r.extra);
}

void from_json(const Json& j, LabeledRecord& r) {
  r.trace_id.reset();
  if (j.contains("trace_id")) r.trace_id = get_nonempty_string(j, "trace_id");
  r.question = get_nonempty_string(j, "question");
  r.ground_truth = get_nonempty_string(j, "ground_truth");
  r.steps = get_string_list(j, "steps");
  const auto& labels = require(j, "step_labels");
  if (!labels.is_array()) wrong_type("step_labels", "an array");
  r.step_labels.clear();
  for (const auto& l : labels) r.step_labels.push_back(parse_label(l));
  if (r.step_labels.size() != r.steps.size()) {
    throw SchemaError("step_labels", fmt::format("{} step_labels for {} steps",
                                                 r.step_labels.size(), r.steps.size()));
  }
  r.trace_correct = get_bool(j, "trace_correct");
  r.source_dataset = get_string(j, "source_dataset");
  r.extra = collect_extra(j, {"trace_id", "question", "ground_truth", "steps", "step_labels",
                              "trace_correct", "source_dataset"});
}

void to_json(Json& j, const RewardBreakdown& b) {
  j = Json::object();
  j["trace_id"] = b.trace_id;
  j["auc"] = b.auc;
  j["r_auc"] = b.r_auc;
  j["r_mono"] = b.r_mono;
  j["r_quality"] = b.r_quality;
  j["r_length"] = b.r_length;
  j["r_infodensity"] = b.r_infodensity;
  j["correct"] = b.correct;
  j["final_reward"] = b.final_reward;
  j["degenerate"] = b.degenerate;
}

void to_json(Json& j, const RewardRecord& r) {
  j = Json::object();
  j["group_id"] = r.group_id;
  Json breakdown = r.breakdown;
  for (auto it = breakdown.begin(); it != breakdown.end(); ++it) j[it.key()] = *it;
  j["extracted_answer"] = r.extracted_answer ? Json(*r.extracted_answer) : Json(nullptr);
  j["length_tokens"] = r.length_tokens;
  j["trajectory"] = r.trajectory;
}

void from_json(const Json& j, RewardRecord& r) {
  r.group_id = get_string(j, "group_id");
  auto& b = r.breakdown;
  b.trace_id = get_string(j, "trace_id");
  b.auc = get_number(j, "auc");
  b.r_auc = get_number(j, "r_auc");
  b.r_mono = get_number(j, "r_mono");
  b.r_quality = get_number(j, "r_quality");
  b.r_length = get_number(j, "r_length");
  b.r_infodensity = get_number(j, "r_infodensity");
  b.correct = get_bool(j, "correct");
  b.final_reward = get_number(j, "final_reward");
  b.degenerate = get_bool(j, "degenerate");
  const auto& answer = require(j, "extracted_answer");
  r.extracted_answer =
      answer.is_null() ? std::nullopt : std::optional<std::string>(get_string(j, "extracted_answer"));
  r.length_tokens = get_count(j, "length_tokens");
  const auto& traj = require(j, "trajectory");
  if (!traj.is_array()) wrong_type("trajectory", "an array of numbers");
  r.trajectory.clear();
  for (const auto& v : traj) {
    if (!v.is_number()) wrong_type("trajectory", "an array of numbers");
    r.trajectory.push_back(v.get<double>());
  }
}

}  // namespace infodensity
