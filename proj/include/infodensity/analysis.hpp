#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "infodensity/entropy.hpp"
#include "infodensity/records.hpp"

namespace infodensity {

inline constexpr std::size_t kDefaultInterpolationPoints = 20;

struct NormalizedTrajectory {
  std::vector<double> values;
  std::size_t origin_length = 0;
};

struct GroupTrajectoryStats {
  std::vector<double> mean;
  std::vector<double> std;  // population standard deviation
  std::size_t count = 0;
  std::optional<double> mean_first_error_position;
};

enum class StepClass { correct_step, first_incorrect_step };

struct StepIgSample {
  double ig = 0.0;
  StepClass label = StepClass::correct_step;
  std::string trace_id;
  std::size_t step_index = 0;
};

struct RocPoint {
  double threshold = 0.0;  // +inf for the (0, 0) corner
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocResult {
  std::vector<RocPoint> points;  // decreasing threshold, so fpr/tpr nondecreasing
  double auc = 0.0;
};

/// Piecewise-linear resampling of H_0..H_T at n equally spaced positions on
/// [0, T]. A single-value trajectory is replicated.
NormalizedTrajectory interpolate_trajectory(const EntropyTrajectory& traj, std::size_t n);

/// Positionwise mean / population std, mergeable across partitions.
class TrajectoryAccumulator {
 public:
  explicit TrajectoryAccumulator(std::size_t n);

  void add(std::span<const double> values);
  void merge(const TrajectoryAccumulator& other);

  std::size_t count() const { return count_; }
  std::size_t width() const { return mean_.size(); }
  std::vector<double> mean() const { return mean_; }
  std::vector<double> stddev() const;

 private:
  std::size_t count_ = 0;
  std::vector<double> mean_;
  std::vector<double> m2_;
};

GroupTrajectoryStats aggregate_group(std::span<const NormalizedTrajectory> trajs,
                                     std::span<const double> first_error_fracs = {});

/// First-error step e of a T-step trace on the normalized axis: e / (T - 1),
/// or 0 when T == 1.
double first_error_fraction(std::size_t first_error_index, std::size_t steps);

/// Step-level IG samples. Incorrect traces contribute their steps up to and
/// including the first error; later steps are dropped.
std::vector<StepIgSample> build_step_ig_dataset(std::span<const LabeledRecord> records,
                                                std::span<const EntropyTrajectory> trajectories);

/// Standardized mean difference (mean_a - mean_b) / pooled sd, pooled sd
/// from the (n - 1)-weighted sample variances.
double cohens_d(std::span<const double> a, std::span<const double> b);

/// Mann-Whitney AUC (ties count 1/2) and the threshold-swept ROC curve.
RocResult roc_auc(std::span<const double> positive, std::span<const double> negative);

void write_trajectory_stats_csv(const std::filesystem::path& path,
                                const std::optional<GroupTrajectoryStats>& correct,
                                const std::optional<GroupTrajectoryStats>& incorrect,
                                std::size_t n);
void write_ig_samples_csv(const std::filesystem::path& path, std::span<const StepIgSample> samples);
void write_roc_csv(const std::filesystem::path& path, const RocResult& roc);

std::string_view to_string(StepClass c);

}  // namespace infodensity
