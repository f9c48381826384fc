#include "infodensity/engine.hpp"

#include <algorithm>
#include <iostream>
#include <fstream>
#include <map>
#include <set>

#include <fmt/core.h>

#include "infodensity/log.hpp"

namespace infodensity {
namespace {

void remove_if_present(const std::filesystem::path& p) {
  std::error_code ec;
  std::filesystem::remove(p, ec);
}

double mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

}  // namespace

ScoringEngine::ScoringEngine(std::shared_ptr<const Judge> judge, RewardParams reward,
                             SegmentationConfig segmentation)
    : judge_(std::move(judge)), reward_(reward), segmentation_(std::move(segmentation)) {
  if (!judge_) throw InvalidInput("scoring engine needs a judge");
  reward_.validate();
  segmentation_.validate();
}

std::vector<RewardRecord> ScoringEngine::score(const RolloutGroupRecord& group) const {
  if (group.traces.empty()) throw SchemaError("traces", "rollout group has no traces");

  std::vector<TraceRecord> parsed;
  std::vector<TraceQuery> queries;
  parsed.reserve(group.traces.size());
  queries.reserve(group.traces.size());
  for (const auto& t : group.traces) {
    parsed.push_back(parse_trace(t.trace_id, group.question, t.text, t.length_tokens, segmentation_));
    queries.push_back({t.trace_id, group.question, parsed.back().steps, group.ground_truth});
  }

  auto results = judge_->trajectories(queries);

  RolloutGroup rollout;
  rollout.question_id = group.group_id;
  rollout.ground_truth = group.ground_truth;
  std::vector<bool> correct_flags;
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    auto& p = parsed[i];
    const auto& source = group.traces[i];
    correct_flags.push_back(source.correct ? *source.correct
                                           : check_correctness(p.extracted_answer, group.ground_truth));
    log::info("trace_scored_judge",
              {{"group_id", group.group_id},
               {"trace_id", p.trace_id},
               {"steps", p.steps.size()},
               {"judge_queries", results[i].queries},
               {"judge_ms", static_cast<double>(results[i].judge_time.count()) / 1000.0}});
    rollout.traces.push_back({p.trace_id, std::move(p.steps), p.extracted_answer, p.length_tokens,
                              std::move(results[i].trajectory)});
  }

  const auto breakdowns = score_group(rollout, reward_, correct_flags);

  std::vector<RewardRecord> out;
  out.reserve(breakdowns.size());
  for (std::size_t i = 0; i < breakdowns.size(); ++i) {
    const auto& trace = rollout.traces[i];
    if (breakdowns[i].degenerate) {
      log::warn("degenerate_trace", {{"group_id", group.group_id}, {"trace_id", trace.trace_id}});
    }
    out.push_back({group.group_id, breakdowns[i], trace.extracted_answer, trace.length_tokens,
                   trace.trajectory.values});
  }
  return out;
}

EntropyTrajectory ScoringEngine::trajectory(const TraceQuery& query) const {
  return judge_->trajectory_for_trace(query);
}

std::shared_ptr<ScoringEngine> make_engine(const EngineConfig& cfg) {
  cfg.validate();
  return std::make_shared<ScoringEngine>(make_judge(cfg.judge), cfg.reward, cfg.segmentation);
}

ScoreSummary run_score(const ScoringEngine& engine, const std::filesystem::path& rollouts,
                       const std::filesystem::path& out, bool strict) {
  auto loaded = load_jsonl<RolloutGroupRecord>(rollouts, strict);
  for (const auto& issue : loaded.skipped) {
    log::warn("skipped_record", {{"path", rollouts.string()}, {"line", issue.line},
                                 {"error", issue.message}});
  }

  ScoreSummary summary;
  summary.skipped_lines = loaded.skipped.size();
  std::vector<RewardRecord> records;
  double reward_sum = 0.0;
  double length_sum = 0.0;
  for (const auto& group : loaded.records) {
    auto scored = engine.score(group);
    ++summary.groups;
    for (auto& r : scored) {
      reward_sum += r.breakdown.final_reward;
      length_sum += static_cast<double>(r.length_tokens);
      records.push_back(std::move(r));
    }
  }
  summary.traces = records.size();
  if (!records.empty()) {
    summary.mean_reward = reward_sum / static_cast<double>(records.size());
    summary.mean_length = length_sum / static_cast<double>(records.size());
  }
  if (loaded.records.empty()) log::warn("empty_rollouts", {{"path", rollouts.string()}});
  save_jsonl(out, records);
  return summary;
}

nlohmann::ordered_json run_analyze(const Judge& judge, const std::filesystem::path& labeled,
                                   const std::filesystem::path& out_dir, std::size_t interp_n,
                                   bool strict) {
  auto loaded = load_jsonl<LabeledRecord>(labeled, strict);
  for (const auto& issue : loaded.skipped) {
    log::warn("skipped_record", {{"path", labeled.string()}, {"line", issue.line},
                                 {"error", issue.message}});
  }
  const auto& records = loaded.records;

  std::vector<TraceQuery> queries;
  queries.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    queries.push_back({r.trace_id.value_or(fmt::format("record-{}", i)), r.question, r.steps,
                       r.ground_truth});
  }
  const auto results = judge.trajectories(queries);
  std::vector<EntropyTrajectory> trajectories;
  trajectories.reserve(results.size());
  for (const auto& r : results) trajectories.push_back(r.trajectory);

  std::vector<NormalizedTrajectory> correct_curves;
  std::vector<NormalizedTrajectory> incorrect_curves;
  std::vector<double> error_fracs;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto curve = interpolate_trajectory(trajectories[i], interp_n);
    if (records[i].trace_correct) {
      correct_curves.push_back(std::move(curve));
    } else {
      incorrect_curves.push_back(std::move(curve));
      if (const auto e = records[i].first_error_index()) {
        error_fracs.push_back(first_error_fraction(*e, records[i].steps.size()));
      }
    }
  }
  std::optional<GroupTrajectoryStats> correct_stats;
  std::optional<GroupTrajectoryStats> incorrect_stats;
  if (!correct_curves.empty()) correct_stats = aggregate_group(correct_curves);
  if (!incorrect_curves.empty()) incorrect_stats = aggregate_group(incorrect_curves, error_fracs);

  const auto samples = build_step_ig_dataset(records, trajectories);
  std::vector<double> correct_ig;
  std::vector<double> error_ig;
  for (const auto& s : samples) {
    (s.label == StepClass::correct_step ? correct_ig : error_ig).push_back(s.ig);
  }

  std::filesystem::create_directories(out_dir);
  write_trajectory_stats_csv(out_dir / "trajectory_stats.csv", correct_stats, incorrect_stats,
                             interp_n);
  write_ig_samples_csv(out_dir / "ig_samples.csv", samples);

  using Json = nlohmann::ordered_json;
  Json summary = Json::object();

  std::set<std::string> questions;
  std::size_t correct_traces = 0;
  std::size_t total_steps = 0;
  Json per_dataset = Json::object();
  struct DatasetCounts {
    std::set<std::string> questions;
    std::size_t traces = 0, correct = 0, steps = 0;
  };
  std::map<std::string, DatasetCounts> datasets;
  for (const auto& r : records) {
    questions.insert(r.question);
    correct_traces += r.trace_correct ? 1 : 0;
    total_steps += r.steps.size();
    auto& d = datasets[r.source_dataset];
    d.questions.insert(r.question);
    ++d.traces;
    d.correct += r.trace_correct ? 1 : 0;
    d.steps += r.steps.size();
  }
  auto pct = [](std::size_t part, std::size_t whole) {
    return whole == 0 ? 0.0 : 100.0 * static_cast<double>(part) / static_cast<double>(whole);
  };
  auto avg = [](std::size_t part, std::size_t whole) {
    return whole == 0 ? 0.0 : static_cast<double>(part) / static_cast<double>(whole);
  };
  for (const auto& [name, d] : datasets) {
    per_dataset[name] = {{"questions", d.questions.size()},
                         {"traces", d.traces},
                         {"percent_correct", pct(d.correct, d.traces)},
                         {"avg_steps", avg(d.steps, d.traces)}};
  }

  summary["traces"] = records.size();
  summary["questions"] = questions.size();
  summary["correct_traces"] = correct_traces;
  summary["incorrect_traces"] = records.size() - correct_traces;
  summary["percent_correct"] = pct(correct_traces, records.size());
  summary["avg_steps"] = avg(total_steps, records.size());
  summary["datasets"] = per_dataset;
  summary["skipped_lines"] = loaded.skipped.size();
  summary["interp_n"] = interp_n;
  summary["samples"] = {{"correct_step", correct_ig.size()},
                        {"first_incorrect_step", error_ig.size()}};

  const auto roc_path = out_dir / "roc.csv";
  if (correct_ig.empty() || error_ig.empty()) {
    remove_if_present(roc_path);
    summary["roc_auc"] = nullptr;
    summary["roc_skipped_reason"] =
        correct_ig.empty() ? "no correct_step samples" : "no first_incorrect_step samples";
    log::warn("roc_skipped", {{"reason", summary["roc_skipped_reason"]}});
  } else {
    const auto roc = roc_auc(correct_ig, error_ig);
    write_roc_csv(roc_path, roc);
    summary["roc_auc"] = roc.auc;
  }

  try {
    summary["cohens_d"] = cohens_d(correct_ig, error_ig);
  } catch (const InvalidInput& e) {
    summary["cohens_d"] = nullptr;
    summary["cohens_d_skipped_reason"] = e.what();
  }

  summary["mean_final_entropy_correct"] =
      correct_stats ? Json(correct_stats->mean.back()) : Json(nullptr);
  summary["mean_final_entropy_incorrect"] =
      incorrect_stats ? Json(incorrect_stats->mean.back()) : Json(nullptr);
  summary["first_error_marker"] = incorrect_stats && incorrect_stats->mean_first_error_position
                                      ? Json(*incorrect_stats->mean_first_error_position)
                                      : Json(nullptr);
  summary["mean_ig_correct_step"] = correct_ig.empty() ? Json(nullptr) : Json(mean(correct_ig));
  summary["mean_ig_first_incorrect_step"] = error_ig.empty() ? Json(nullptr) : Json(mean(error_ig));

  std::ofstream out(out_dir / "summary.json", std::ios::binary | std::ios::trunc);
  out << summary.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write summary.json");
  return summary;
}

int cmd_score(const EngineConfig& cfg, const std::filesystem::path& rollouts,
              const std::filesystem::path& out) {
  try {
    const auto engine = make_engine(cfg);
    const auto summary = run_score(*engine, rollouts, out, cfg.strict);
    std::cout << fmt::format("groups={} traces={} skipped_lines={} mean_reward={:.6f} mean_length={:.2f}\n",
                             summary.groups, summary.traces, summary.skipped_lines,
                             summary.mean_reward, summary.mean_length);
    return 0;
  } catch (const JudgeError& e) {
    log::error("judge_failure", {{"error", e.what()}, {"attempts", e.attempts()}});
  } catch (const std::exception& e) {
    log::error("score_failed", {{"error", e.what()}});
  }
  return 1;
}

int cmd_analyze(const EngineConfig& cfg, const std::filesystem::path& labeled,
                const std::filesystem::path& out_dir) {
  try {
    cfg.validate();
    const auto judge = make_judge(cfg.judge);
    const auto summary = run_analyze(*judge, labeled, out_dir, cfg.interp_n, cfg.strict);
    std::cout << summary.dump(2) << '\n';
    return 0;
  } catch (const JudgeError& e) {
    log::error("judge_failure", {{"error", e.what()}, {"attempts", e.attempts()}});
  } catch (const std::exception& e) {
    log::error("analyze_failed", {{"error", e.what()}});
  }
  return 1;
}

}  // namespace infodensity
