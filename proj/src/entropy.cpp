#include "infodensity/entropy.hpp"

#include <cmath>
#include <unordered_set>

#include <fmt/core.h>

namespace infodensity {
namespace {

double plogp(double p) {
  if (p < kNegligibleProbability) return 0.0;
  return -p * std::log(p);
}

void require_entropy_value(double h, const char* what) {
  if (!std::isfinite(h)) throw InvalidInput(fmt::format("{} is not finite", what));
  if (h < 0.0) throw InvalidInput(fmt::format("{} is negative ({})", what, h));
}

}  // namespace

void validate(const TokenDistribution& dist) {
  if (!std::isfinite(dist.tail_mass) || dist.tail_mass < 0.0 || dist.tail_mass > 1.0) {
    throw InvalidInput(fmt::format("tail mass {} outside [0, 1]", dist.tail_mass));
  }
  std::unordered_set<std::string_view> seen;
  seen.reserve(dist.entries.size());
  double total = dist.tail_mass;
  for (const auto& e : dist.entries) {
    if (!std::isfinite(e.probability) || e.probability < 0.0 || e.probability > 1.0) {
      throw InvalidInput(
          fmt::format("probability {} for token '{}' outside [0, 1]", e.probability, e.token));
    }
    if (!seen.insert(e.token).second) {
      throw InvalidInput(fmt::format("duplicate token '{}' in distribution", e.token));
    }
    total += e.probability;
  }
  if (std::abs(total - 1.0) > kSumTolerance) {
    throw InvalidInput(fmt::format("distribution mass {} differs from 1 by more than {}", total,
                                   kSumTolerance));
  }
}

double distribution_entropy(const TokenDistribution& dist) {
  validate(dist);
  double h = 0.0;
  for (const auto& e : dist.entries) h += plogp(e.probability);
  h += plogp(dist.tail_mass);
  // Rounding can leave a -0.0 or a sub-ulp negative value for one-hot inputs.
  return h > 0.0 ? h : 0.0;
}

double answer_conditional_entropy(const AnswerPositionSet& positions) {
  if (positions.positions.empty()) throw InvalidInput("answer position set is empty");
  double sum = 0.0;
  for (const auto& d : positions.positions) sum += distribution_entropy(d);
  return sum / static_cast<double>(positions.positions.size());
}

double information_gain(double h_prev, double h_curr) {
  require_entropy_value(h_prev, "previous entropy");
  require_entropy_value(h_curr, "current entropy");
  return h_prev - h_curr;
}

EntropyTrajectory build_trajectory(std::string trace_id, std::vector<double> entropies) {
  if (entropies.empty()) throw InvalidInput("entropy trajectory needs at least H_0");
  for (std::size_t t = 0; t < entropies.size(); ++t) {
    require_entropy_value(entropies[t], fmt::format("H_{}", t).c_str());
  }
  return EntropyTrajectory{std::move(trace_id), std::move(entropies)};
}

std::vector<double> step_information_gains(const EntropyTrajectory& traj) {
  std::vector<double> gains;
  if (traj.values.size() < 2) return gains;
  gains.reserve(traj.values.size() - 1);
  for (std::size_t t = 1; t < traj.values.size(); ++t) {
    gains.push_back(information_gain(traj.values[t - 1], traj.values[t]));
  }
  return gains;
}

}  // namespace infodensity
