#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "infodensity/analysis.hpp"
#include "infodensity/config.hpp"
#include "infodensity/ingest.hpp"
#include "infodensity/judge.hpp"
#include "infodensity/records.hpp"
#include "infodensity/reward.hpp"

namespace infodensity {

/// Stateless scoring pipeline shared by the CLI and the HTTP service:
/// segment traces, query the judge for trajectories, apply the reward stack.
class ScoringEngine {
 public:
  ScoringEngine(std::shared_ptr<const Judge> judge, RewardParams reward,
                SegmentationConfig segmentation);

  /// One RewardRecord per trace, in input order. Judge failures propagate as
  /// JudgeError.
  std::vector<RewardRecord> score(const RolloutGroupRecord& group) const;

  EntropyTrajectory trajectory(const TraceQuery& query) const;

  const Judge& judge() const { return *judge_; }
  const RewardParams& reward_params() const { return reward_; }

 private:
  std::shared_ptr<const Judge> judge_;
  RewardParams reward_;
  SegmentationConfig segmentation_;
};

std::shared_ptr<ScoringEngine> make_engine(const EngineConfig& cfg);

struct ScoreSummary {
  std::size_t groups = 0;
  std::size_t traces = 0;
  std::size_t skipped_lines = 0;
  double mean_reward = 0.0;
  double mean_length = 0.0;
};

/// rollouts.jsonl -> rewards.jsonl. Malformed lines are skipped (fatal when
/// strict); judge failures are always fatal.
ScoreSummary run_score(const ScoringEngine& engine, const std::filesystem::path& rollouts,
                       const std::filesystem::path& out, bool strict);

/// labeled.jsonl -> trajectory_stats.csv, ig_samples.csv, roc.csv and
/// summary.json under out_dir. Returns the summary document.
nlohmann::ordered_json run_analyze(const Judge& judge, const std::filesystem::path& labeled,
                                   const std::filesystem::path& out_dir, std::size_t interp_n,
                                   bool strict);

/// Exit-status wrappers used by the command line tool; errors are logged.
int cmd_score(const EngineConfig& cfg, const std::filesystem::path& rollouts,
              const std::filesystem::path& out);
int cmd_analyze(const EngineConfig& cfg, const std::filesystem::path& labeled,
                const std::filesystem::path& out_dir);

}  // namespace infodensity
