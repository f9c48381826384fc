#include "infodensity/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <fmt/core.h>

namespace infodensity {
namespace {

double mean_of(std::span<const double> xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs, double mean) {
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(xs.size() - 1);
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot open '{}' for writing", path.string()));
  return out;
}

void finish_csv(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error(fmt::format("write error on '{}'", path.string()));
}

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{}", v);
}

}  // namespace

std::string_view to_string(StepClass c) {
  return c == StepClass::correct_step ? "correct_step" : "first_incorrect_step";
}

NormalizedTrajectory interpolate_trajectory(const EntropyTrajectory& traj, std::size_t n) {
  if (n < 2) throw InvalidInput(fmt::format("interpolation needs n >= 2, got {}", n));
  if (traj.values.empty()) throw InvalidInput("cannot interpolate an empty trajectory");

  NormalizedTrajectory out;
  out.origin_length = traj.values.size();
  const auto& v = traj.values;
  if (v.size() == 1) {
    out.values.assign(n, v.front());
    return out;
  }

  const std::size_t last = v.size() - 1;
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double pos = static_cast<double>(i * last) / static_cast<double>(n - 1);
    const auto j = std::min(static_cast<std::size_t>(pos), last - 1);
    const double frac = pos - static_cast<double>(j);
    const double a = v[j];
    const double b = v[j + 1];
    out.values[i] = std::clamp(a + frac * (b - a), std::min(a, b), std::max(a, b));
  }
  out.values.front() = v.front();
  out.values.back() = v.back();
  return out;
}

TrajectoryAccumulator::TrajectoryAccumulator(std::size_t n) : mean_(n, 0.0), m2_(n, 0.0) {}

void TrajectoryAccumulator::add(std::span<const double> values) {
  if (values.size() != mean_.size()) {
    throw InvalidInput(fmt::format("trajectory of length {} in a group of length {}",
                                   values.size(), mean_.size()));
  }
  ++count_;
  const double n = static_cast<double>(count_);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double delta = values[i] - mean_[i];
    mean_[i] += delta / n;
    m2_[i] += delta * (values[i] - mean_[i]);
  }
}

void TrajectoryAccumulator::merge(const TrajectoryAccumulator& other) {
  if (other.width() != width()) throw InvalidInput("cannot merge accumulators of different width");
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(count_);
  const double nb = static_cast<double>(other.count_);
  const double n = na + nb;
  for (std::size_t i = 0; i < mean_.size(); ++i) {
    const double delta = other.mean_[i] - mean_[i];
    mean_[i] += delta * nb / n;
    m2_[i] += other.m2_[i] + delta * delta * na * nb / n;
  }
  count_ += other.count_;
}

std::vector<double> TrajectoryAccumulator::stddev() const {
  std::vector<double> out(m2_.size(), 0.0);
  if (count_ == 0) return out;
  for (std::size_t i = 0; i < m2_.size(); ++i) {
    out[i] = std::sqrt(std::max(0.0, m2_[i] / static_cast<double>(count_)));
  }
  return out;
}

GroupTrajectoryStats aggregate_group(std::span<const NormalizedTrajectory> trajs,
                                     std::span<const double> first_error_fracs) {
  if (trajs.empty()) throw InvalidInput("cannot aggregate an empty trajectory group");
  TrajectoryAccumulator acc(trajs.front().values.size());
  for (const auto& t : trajs) acc.add(t.values);

  GroupTrajectoryStats stats;
  stats.mean = acc.mean();
  stats.std = acc.stddev();
  stats.count = acc.count();
  if (!first_error_fracs.empty()) stats.mean_first_error_position = mean_of(first_error_fracs);
  return stats;
}

double first_error_fraction(std::size_t first_error_index, std::size_t steps) {
  if (steps == 0 || first_error_index >= steps) {
    throw InvalidInput(
        fmt::format("first error index {} outside a {}-step trace", first_error_index, steps));
  }
  if (steps == 1) return 0.0;
  return static_cast<double>(first_error_index) / static_cast<double>(steps - 1);
}

std::vector<StepIgSample> build_step_ig_dataset(std::span<const LabeledRecord> records,
                                                std::span<const EntropyTrajectory> trajectories) {
  if (records.size() != trajectories.size()) {
    throw InvalidInput(fmt::format("{} records but {} trajectories", records.size(),
                                   trajectories.size()));
  }
  std::vector<StepIgSample> samples;
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    const auto& traj = trajectories[r];
    if (rec.step_labels.size() != rec.steps.size() || traj.values.size() != rec.steps.size() + 1) {
      throw InvalidInput(fmt::format(
          "record {}: {} steps, {} labels, trajectory of length {}", r, rec.steps.size(),
          rec.step_labels.size(), traj.values.size()));
    }
    const auto gains = step_information_gains(traj);
    const auto first_error = rec.first_error_index();
    std::size_t last = gains.size();
    if (!rec.trace_correct && first_error) last = *first_error + 1;
    for (std::size_t t = 0; t < last; ++t) {
      const bool is_error = !rec.trace_correct && first_error && t == *first_error;
      samples.push_back({gains[t],
                         is_error ? StepClass::first_incorrect_step : StepClass::correct_step,
                         traj.trace_id, t});
    }
  }
  return samples;
}

double cohens_d(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw InvalidInput("cohens_d needs at least two values per sample");
  }
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double pooled =
      ((na - 1.0) * sample_variance(a, ma) + (nb - 1.0) * sample_variance(b, mb)) / (na + nb - 2.0);
  if (!(pooled > 0.0)) throw InvalidInput("degenerate samples: pooled variance is zero");
  return (ma - mb) / std::sqrt(pooled);
}

RocResult roc_auc(std::span<const double> positive, std::span<const double> negative) {
  if (positive.empty() || negative.empty()) {
    throw InvalidInput("roc_auc needs at least one score in each class");
  }
  std::vector<double> pos(positive.begin(), positive.end());
  std::vector<double> neg(negative.begin(), negative.end());
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());

  // Twice the Mann-Whitney U, kept integral so the ratio is exact.
  std::uint64_t twice_u = 0;
  for (double p : pos) {
    const auto lo = std::lower_bound(neg.begin(), neg.end(), p);
    const auto hi = std::upper_bound(lo, neg.end(), p);
    twice_u += 2 * static_cast<std::uint64_t>(lo - neg.begin()) +
               static_cast<std::uint64_t>(hi - lo);
  }
  RocResult result;
  result.auc = static_cast<double>(twice_u) /
               (2.0 * static_cast<double>(pos.size()) * static_cast<double>(neg.size()));

  std::vector<double> thresholds;
  thresholds.reserve(pos.size() + neg.size());
  thresholds.insert(thresholds.end(), pos.begin(), pos.end());
  thresholds.insert(thresholds.end(), neg.begin(), neg.end());
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  const double np = static_cast<double>(pos.size());
  const double nn = static_cast<double>(neg.size());
  result.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  for (double thr : thresholds) {
    // Scores >= thr are predicted positive.
    const auto tp = pos.end() - std::lower_bound(pos.begin(), pos.end(), thr);
    const auto fp = neg.end() - std::lower_bound(neg.begin(), neg.end(), thr);
    result.points.push_back({thr, static_cast<double>(fp) / nn, static_cast<double>(tp) / np});
  }
  return result;
}

void write_trajectory_stats_csv(const std::filesystem::path& path,
                                const std::optional<GroupTrajectoryStats>& correct,
                                const std::optional<GroupTrajectoryStats>& incorrect,
                                std::size_t n) {
  auto out = open_csv(path);
  out << "position,mean_correct,std_correct,mean_incorrect,std_incorrect,first_error_marker\n";
  if (correct || incorrect) {
    std::string marker;
    if (incorrect && incorrect->mean_first_error_position) {
      marker = format_number(*incorrect->mean_first_error_position);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double position = static_cast<double>(i) / static_cast<double>(n - 1);
      out << format_number(position) << ',';
      if (correct) out << format_number(correct->mean[i]) << ',' << format_number(correct->std[i]);
      else out << ',';
      out << ',';
      if (incorrect) {
        out << format_number(incorrect->mean[i]) << ',' << format_number(incorrect->std[i]);
      } else {
        out << ',';
      }
      out << ',' << marker << '\n';
    }
  }
  finish_csv(out, path);
}

void write_ig_samples_csv(const std::filesystem::path& path, std::span<const StepIgSample> samples) {
  auto out = open_csv(path);
  out << "ig,label\n";
  for (const auto& s : samples) out << format_number(s.ig) << ',' << to_string(s.label) << '\n';
  finish_csv(out, path);
}

void write_roc_csv(const std::filesystem::path& path, const RocResult& roc) {
  auto out = open_csv(path);
  out << "threshold,fpr,tpr\n";
  for (const auto& p : roc.points) {
    out << format_number(p.threshold) << ',' << format_number(p.fpr) << ','
        << format_number(p.tpr) << '\n';
  }
  finish_csv(out, path);
}

}  // namespace infodensity
