#include "infodensity/reward.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

namespace infodensity {
namespace {

void require_steps(const EntropyTrajectory& traj) {
  if (traj.values.empty()) throw InvalidInput("trajectory is empty");
  if (traj.steps() == 0) throw InvalidInput("trajectory has no steps");
}

}  // namespace

void RewardParams::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw InvalidInput(fmt::format("alpha must lie in [0, 1], got {}", alpha));
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw InvalidInput(fmt::format("lambda must be finite and >= 0, got {}", lambda));
  }
  if (!(h0_floor > 0.0) || !std::isfinite(h0_floor)) {
    throw InvalidInput(fmt::format("h0_floor must be finite and > 0, got {}", h0_floor));
  }
}

double auc_score(const EntropyTrajectory& traj, const RewardParams& params) {
  require_steps(traj);
  const std::size_t steps = traj.steps();
  const double h0 = std::max(traj.values.front(), params.h0_floor);
  double area = 0.0;
  for (std::size_t t = 1; t <= steps; ++t) area += traj.values[t];
  double auc = area / (static_cast<double>(steps) * h0);
  if (params.clamp_auc) auc = std::clamp(auc, 0.0, 1.0);
  return auc;
}

double auc_reward(const EntropyTrajectory& traj, const RewardParams& params) {
  return 1.0 - auc_score(traj, params);
}

double monotonicity_reward(const EntropyTrajectory& traj) {
  require_steps(traj);
  std::size_t decreases = 0;
  for (std::size_t t = 1; t < traj.values.size(); ++t) {
    if (traj.values[t] < traj.values[t - 1]) ++decreases;
  }
  return static_cast<double>(decreases) / static_cast<double>(traj.steps());
}

double quality_reward(double r_auc, double r_mono, const RewardParams& params) {
  return params.alpha * r_auc + (1.0 - params.alpha) * r_mono;
}

std::vector<double> length_scaling(std::span<const std::uint64_t> lengths, double lambda) {
  std::vector<double> out(lengths.size(), 1.0);
  if (lengths.size() < 2) return out;

  const double n = static_cast<double>(lengths.size());
  double mean = 0.0;
  for (auto l : lengths) mean += static_cast<double>(l);
  mean /= n;
  double var = 0.0;
  for (auto l : lengths) {
    const double d = static_cast<double>(l) - mean;
    var += d * d;
  }
  const double sd = std::sqrt(var / n);
  if (sd == 0.0) return out;

  for (std::size_t i = 0; i < lengths.size(); ++i) {
    const double z = (static_cast<double>(lengths[i]) - mean) / sd;
    out[i] = std::exp(-lambda * z);
  }
  return out;
}

std::vector<RewardBreakdown> score_group(const RolloutGroup& group, const RewardParams& params,
                                         const std::vector<bool>& correctness) {
  params.validate();
  if (group.traces.empty()) throw InvalidInput("rollout group has no traces");
  if (correctness.size() != group.traces.size()) {
    throw InvalidInput(fmt::format("correctness list has {} entries for {} traces",
                                   correctness.size(), group.traces.size()));
  }

  std::vector<std::uint64_t> lengths;
  lengths.reserve(group.traces.size());
  for (const auto& trace : group.traces) {
    if (trace.trajectory.values.size() != trace.steps.size() + 1) {
      throw InvalidInput(fmt::format("trace '{}' has {} steps but a trajectory of length {}",
                                     trace.trace_id, trace.steps.size(),
                                     trace.trajectory.values.size()));
    }
    lengths.push_back(trace.length_tokens);
  }
  const auto r_length = length_scaling(lengths, params.lambda);

  std::vector<RewardBreakdown> out;
  out.reserve(group.traces.size());
  for (std::size_t i = 0; i < group.traces.size(); ++i) {
    const auto& trace = group.traces[i];
    RewardBreakdown b;
    b.trace_id = trace.trace_id;
    b.correct = correctness[i];
    b.r_length = r_length[i];
    if (trace.trajectory.steps() == 0) {
      b.degenerate = true;
      out.push_back(std::move(b));
      continue;
    }
    b.auc = auc_score(trace.trajectory, params);
    b.r_auc = 1.0 - b.auc;
    b.r_mono = monotonicity_reward(trace.trajectory);
    b.r_quality = quality_reward(b.r_auc, b.r_mono, params);
    b.r_infodensity = b.r_quality * b.r_length;
    b.final_reward = b.correct ? b.r_infodensity : 0.0;
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace infodensity
