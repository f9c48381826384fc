#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "infodensity/entropy.hpp"

namespace infodensity {

struct RewardParams {
  double alpha = 0.5;      // weight of the AUC term in the quality mix
  double lambda = 0.05;    // length-scaling intensity
  double h0_floor = 1e-6;  // nats
  bool clamp_auc = true;

  void validate() const;
};

struct RolloutTrace {
  std::string trace_id;
  std::vector<std::string> steps;
  std::optional<std::string> extracted_answer;
  std::uint64_t length_tokens = 0;
  EntropyTrajectory trajectory;
};

struct RolloutGroup {
  std::string question_id;
  std::string ground_truth;
  std::vector<RolloutTrace> traces;
};

struct RewardBreakdown {
  std::string trace_id;
  double auc = 0.0;
  double r_auc = 0.0;
  double r_mono = 0.0;
  double r_quality = 0.0;
  double r_length = 1.0;
  double r_infodensity = 0.0;
  bool correct = false;
  double final_reward = 0.0;
  // Set for traces with no reasoning steps; such traces always score 0.
  bool degenerate = false;

  bool operator==(const RewardBreakdown&) const = default;
};

/// Normalized area under the entropy curve, sum_{t>=1} H_t / (T * H_0),
/// with H_0 floored at params.h0_floor. Throws InvalidInput when T == 0.
double auc_score(const EntropyTrajectory& traj, const RewardParams& params);

double auc_reward(const EntropyTrajectory& traj, const RewardParams& params);

/// Fraction of steps with H_t strictly below H_{t-1}.
double monotonicity_reward(const EntropyTrajectory& traj);

double quality_reward(double r_auc, double r_mono, const RewardParams& params);

/// exp(-lambda * z) per length, z from the group's mean and population
/// standard deviation. A zero spread (or a single trace) yields all ones.
std::vector<double> length_scaling(std::span<const std::uint64_t> lengths, double lambda);

/// Full reward stack for one rollout group. `correctness` must be aligned
/// with group.traces; output order matches input order.
std::vector<RewardBreakdown> score_group(const RolloutGroup& group, const RewardParams& params,
                                         const std::vector<bool>& correctness);

}  // namespace infodensity
