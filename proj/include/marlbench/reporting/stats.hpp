#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace marlbench::reporting {

// Inter-quartile mean: drop floor(n/4) smallest and largest, average the rest.
double iqm(std::vector<double> values);

double median(std::vector<double> values);

// 1 - mean(min(score, 1)): how far scores fall short of the optimum.
double optimality_gap(const std::vector<double>& values);

enum class Statistic { Iqm, Mean, Median, OptimalityGap };

double apply_statistic(Statistic stat, const std::vector<double>& pooled);

// Normalized final scores arranged by task (stratum); scores[t] holds every
// run of task t pooled across algorithms of interest.
struct ScoreMatrix {
  std::vector<std::string> tasks;
  std::vector<std::vector<double>> scores;

  void validate() const;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// One stratified resample: within every task draw |runs| runs with
// replacement. Deterministic in (seed, resample_index); exposed so tests can
// verify that strata never mix.
std::vector<std::vector<std::size_t>> draw_stratified_resample(const ScoreMatrix& m, std::uint64_t seed,
                                                               std::int64_t resample_index);

using PooledStat = std::function<double(const std::vector<double>&)>;

// Percentile bootstrap interval of a pooled statistic under stratified
// resampling.
Interval stratified_bootstrap_ci(const ScoreMatrix& m, const PooledStat& stat, int n_resamples,
                                 double confidence, std::uint64_t seed);
Interval stratified_bootstrap_ci(const ScoreMatrix& m, Statistic stat, int n_resamples, double confidence,
                                 std::uint64_t seed);

struct ProfilePoint {
  double tau = 0.0;
  double fraction = 0.0;
  Interval ci;
};

// Fraction of (task, run) scores above each threshold, with bootstrap bands.
std::vector<ProfilePoint> performance_profile(const ScoreMatrix& m, const std::vector<double>& taus,
                                              int n_resamples, double confidence, std::uint64_t seed);

struct AggregateScores {
  double median = 0.0, iqm = 0.0, mean = 0.0, optimality_gap = 0.0;
  Interval median_ci, iqm_ci, mean_ci, gap_ci;
};

AggregateScores aggregate_scores(const ScoreMatrix& m, int n_resamples, double confidence,
                                 std::uint64_t seed);

// Min-max normalization of raw final returns: 0 at the random-policy
// baseline, 1 at the best return observed across all algorithms on the task.
// raw is task -> algorithm -> per-run values. Scores clamp into [0, 1]
// unless clamp is off.
std::map<std::string, ScoreMatrix> normalize_scores(
    const std::map<std::string, std::map<std::string, std::vector<double>>>& raw,
    const std::map<std::string, double>& baselines, bool clamp = true);

// Linear-interpolation quantile of a sorted sample, p in [0, 1].
double quantile_sorted(const std::vector<double>& sorted, double p);

}  // namespace marlbench::reporting
