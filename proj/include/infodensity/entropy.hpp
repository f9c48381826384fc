#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace infodensity {

/// Thrown whenever an argument violates a documented precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kSumTolerance = 1e-6;
inline constexpr double kNegligibleProbability = 1e-12;

struct TokenProbability {
  std::string token;
  double probability = 0.0;

  bool operator==(const TokenProbability&) const = default;
};

/// Probability distribution over judge-vocabulary tokens. When the backend
/// only reports the top-k alternatives, the uncovered mass is kept in
/// `tail_mass` and scored as one aggregate symbol.
struct TokenDistribution {
  std::vector<TokenProbability> entries;
  double tail_mass = 0.0;

  bool operator==(const TokenDistribution&) const = default;
};

/// Throws InvalidInput on negative or non-finite probabilities, duplicate
/// tokens, or a total mass outside 1 +/- kSumTolerance.
void validate(const TokenDistribution& dist);

/// One distribution per teacher-forced answer token, in answer order.
struct AnswerPositionSet {
  std::vector<TokenDistribution> positions;
};

/// Conditional entropies H_0..H_T (nats) over the reasoning prefixes of one
/// trace. values[0] is the empty-prefix entropy.
struct EntropyTrajectory {
  std::string trace_id;
  std::vector<double> values;

  std::size_t steps() const { return values.empty() ? 0 : values.size() - 1; }
  bool operator==(const EntropyTrajectory&) const = default;
};

/// -sum p ln p over entries, with the tail bucket counted as a single
/// symbol (a lower bound on the entropy of the untruncated distribution).
/// Probabilities below kNegligibleProbability contribute nothing.
double distribution_entropy(const TokenDistribution& dist);

/// Mean of the per-position token entropies.
double answer_conditional_entropy(const AnswerPositionSet& positions);

/// h_prev - h_curr. Negative when a step raises the uncertainty.
double information_gain(double h_prev, double h_curr);

EntropyTrajectory build_trajectory(std::string trace_id, std::vector<double> entropies);

/// Per-step gains H_{t-1} - H_t for t = 1..T.
std::vector<double> step_information_gains(const EntropyTrajectory& traj);

}  // namespace infodensity
