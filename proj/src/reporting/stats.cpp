#include "marlbench/reporting/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "marlbench/core/errors.hpp"
#include "marlbench/numeric/rng.hpp"

namespace marlbench::reporting {

double iqm(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("iqm: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t drop = values.size() / 4;
  double acc = 0.0;
  for (std::size_t i = drop; i < values.size() - drop; ++i) acc += values[i];
  return acc / static_cast<double>(values.size() - 2 * drop);
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double optimality_gap(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("optimality_gap: empty input");
  double acc = 0.0;
  for (double v : values) acc += std::min(v, 1.0);
  return 1.0 - acc / static_cast<double>(values.size());
}

double apply_statistic(Statistic stat, const std::vector<double>& pooled) {
  switch (stat) {
    case Statistic::Iqm: return iqm(pooled);
    case Statistic::Mean: {
      double acc = 0.0;
      for (double v : pooled) acc += v;
      return acc / static_cast<double>(pooled.size());
    }
    case Statistic::Median: return median(pooled);
    case Statistic::OptimalityGap: return optimality_gap(pooled);
  }
  throw std::invalid_argument("apply_statistic: unknown statistic");
}

void ScoreMatrix::validate() const {
  if (tasks.size() != scores.size()) throw std::invalid_argument("score matrix: task/row count mismatch");
  if (tasks.empty()) throw std::invalid_argument("score matrix: no tasks");
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    if (scores[t].empty()) throw std::invalid_argument("score matrix: task '" + tasks[t] + "' has no runs");
    for (double v : scores[t])
      if (!std::isfinite(v))
        throw std::invalid_argument("score matrix: non-finite score in task '" + tasks[t] + "'");
  }
}

std::vector<std::vector<std::size_t>> draw_stratified_resample(const ScoreMatrix& m, std::uint64_t seed,
                                                               std::int64_t resample_index) {
  num::RngStream rng(num::derive_seed(seed, "bootstrap", static_cast<std::uint64_t>(resample_index)));
  std::vector<std::vector<std::size_t>> draws(m.scores.size());
  for (std::size_t t = 0; t < m.scores.size(); ++t) {
    const std::int64_t k = static_cast<std::int64_t>(m.scores[t].size());
    draws[t].reserve(static_cast<std::size_t>(k));
    for (std::int64_t i = 0; i < k; ++i)
      draws[t].push_back(static_cast<std::size_t>(rng.uniform_int(k)));
  }
  return draws;
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile: empty sample");
  if (sorted.size() == 1) return sorted[0];
  const double idx = p * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(idx));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = idx - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

Interval stratified_bootstrap_ci(const ScoreMatrix& m, const PooledStat& stat, int n_resamples,
                                 double confidence, std::uint64_t seed) {
  m.validate();
  if (n_resamples < 1) throw std::invalid_argument("bootstrap: n_resamples must be >= 1");
  std::vector<double> stats(static_cast<std::size_t>(n_resamples));
  std::vector<double> pooled;
  for (int r = 0; r < n_resamples; ++r) {
    const auto draws = draw_stratified_resample(m, seed, r);
    pooled.clear();
    for (std::size_t t = 0; t < draws.size(); ++t)
      for (std::size_t idx : draws[t]) pooled.push_back(m.scores[t][idx]);
    stats[static_cast<std::size_t>(r)] = stat(pooled);
  }
  std::sort(stats.begin(), stats.end());
  const double alpha = (1.0 - confidence) / 2.0;
  return {quantile_sorted(stats, alpha), quantile_sorted(stats, 1.0 - alpha)};
}

Interval stratified_bootstrap_ci(const ScoreMatrix& m, Statistic stat, int n_resamples, double confidence,
                                 std::uint64_t seed) {
  return stratified_bootstrap_ci(
      m, [stat](const std::vector<double>& pooled) { return apply_statistic(stat, pooled); }, n_resamples,
      confidence, seed);
}

std::vector<ProfilePoint> performance_profile(const ScoreMatrix& m, const std::vector<double>& taus,
                                              int n_resamples, double confidence, std::uint64_t seed) {
  m.validate();
  for (std::size_t i = 1; i < taus.size(); ++i)
    if (taus[i] < taus[i - 1]) throw std::invalid_argument("performance_profile: taus must be sorted");
  std::vector<ProfilePoint> out;
  out.reserve(taus.size());
  for (double tau : taus) {
    auto frac_above = [tau](const std::vector<double>& pooled) {
      std::size_t above = 0;
      for (double v : pooled)
        if (v > tau) ++above;
      return static_cast<double>(above) / static_cast<double>(pooled.size());
    };
    std::vector<double> all;
    for (const auto& row : m.scores) all.insert(all.end(), row.begin(), row.end());
    ProfilePoint p;
    p.tau = tau;
    p.fraction = frac_above(all);
    p.ci = stratified_bootstrap_ci(m, frac_above, n_resamples, confidence, seed);
    out.push_back(p);
  }
  return out;
}

AggregateScores aggregate_scores(const ScoreMatrix& m, int n_resamples, double confidence,
                                 std::uint64_t seed) {
  m.validate();
  std::vector<double> all;
  for (const auto& row : m.scores) all.insert(all.end(), row.begin(), row.end());
  AggregateScores out;
  out.median = median(all);
  out.iqm = iqm(all);
  out.mean = apply_statistic(Statistic::Mean, all);
  out.optimality_gap = optimality_gap(all);
  out.median_ci = stratified_bootstrap_ci(m, Statistic::Median, n_resamples, confidence, seed);
  out.iqm_ci = stratified_bootstrap_ci(m, Statistic::Iqm, n_resamples, confidence, seed);
  out.mean_ci = stratified_bootstrap_ci(m, Statistic::Mean, n_resamples, confidence, seed);
  out.gap_ci = stratified_bootstrap_ci(m, Statistic::OptimalityGap, n_resamples, confidence, seed);
  return out;
}

std::map<std::string, ScoreMatrix> normalize_scores(
    const std::map<std::string, std::map<std::string, std::vector<double>>>& raw,
    const std::map<std::string, double>& baselines, bool clamp) {
  // per-task bounds: baseline .. best observed across all algorithms
  std::map<std::string, std::pair<double, double>> bounds;
  for (const auto& [task, by_algo] : raw) {
    auto bit = baselines.find(task);
    if (bit == baselines.end()) throw ConfigError("normalize: no baseline for task '" + task + "'");
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& [algo, runs] : by_algo)
      for (double v : runs) best = std::max(best, v);
    if (!(best > bit->second))
      throw ConfigError("normalize: best observed return for task '" + task +
                        "' does not exceed the random baseline; run the experiments longer");
    bounds[task] = {bit->second, best};
  }
  std::map<std::string, ScoreMatrix> by_algo_matrix;
  for (const auto& [task, by_algo] : raw) {
    const auto [lo, hi] = bounds[task];
    for (const auto& [algo, runs] : by_algo) {
      auto& m = by_algo_matrix[algo];
      m.tasks.push_back(task);
      std::vector<double> row;
      for (double v : runs) {
        double s = (v - lo) / (hi - lo);
        if (clamp) s = std::clamp(s, 0.0, 1.0);
        row.push_back(s);
      }
      m.scores.push_back(std::move(row));
    }
  }
  return by_algo_matrix;
}

}  // namespace marlbench::reporting
