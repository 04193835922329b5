#include "marlbench/reporting/report.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>

#include "marlbench/core/errors.hpp"
#include "marlbench/experiment/experiment.hpp"
#include "marlbench/reporting/render.hpp"
#include "marlbench/reporting/runs_json.hpp"
#include "marlbench/reporting/stats.hpp"

namespace marlbench::reporting {

namespace fs = std::filesystem;

namespace {

double mean_of(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

// Baseline evaluation uses the task's native variant with the parameters
// from the conf directory.
double compute_baseline(const std::string& task_name, const ReportOptions& opt) {
  config::ConfigSources sources;
  sources.conf_root = opt.conf_root;
  sources.algorithm = "mappo";  // any valid selection; only task.* is used
  sources.task = "desk/" + task_name;
  sources.model = "mlp";
  config::RunBundle bundle = config::load_config(sources);
  const auto variant = bundle.task.offers_continuous ? envs::ActionVariant::Continuous
                                                     : envs::ActionVariant::Discrete;
  auto res = experiment::random_policy_eval(bundle.task, variant, opt.baseline_episodes,
                                            opt.baseline_max_steps, num::derive_seed(opt.seed, "baseline"));
  return res.mean_return.at(0);
}

}  // namespace

void generate_report(const ReportOptions& options) {
  // collect every runs.json below input_dir
  std::vector<std::string> files;
  if (fs::exists(options.input_dir))
    for (const auto& entry : fs::recursive_directory_iterator(options.input_dir))
      if (entry.is_regular_file() && entry.path().filename() == "runs.json")
        files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("report: no runs.json found under " + options.input_dir);

  std::vector<RunRecord> records;
  for (const auto& f : files) {
    auto parsed = read_runs_json(f);
    records.insert(records.end(), parsed.begin(), parsed.end());
  }
  // cross-file duplicate and cohort validation
  (void)emit_runs_document(records);

  // raw final scores: task -> algorithm -> per-run final mean return
  std::map<std::string, std::map<std::string, std::vector<double>>> raw;
  for (const auto& r : records) {
    if (r.absolute_metrics.empty())
      throw ConfigError("report: run " + r.run_id + " of " + r.algorithm + "/" + r.task +
                        " has no final evaluation");
    raw[r.task][r.algorithm].push_back(mean_of(r.absolute_metrics));
  }

  std::map<std::string, double> baselines;
  for (const auto& [task, by_algo] : raw) baselines[task] = compute_baseline(task, options);

  auto matrices = normalize_scores(raw, baselines, /*clamp=*/true);

  // normalization bounds reused for the per-step curves
  std::map<std::string, std::pair<double, double>> bounds;
  for (const auto& [task, by_algo] : raw) {
    double best = -1e300;
    for (const auto& [algo, runs] : by_algo)
      for (double v : runs) best = std::max(best, v);
    bounds[task] = {baselines[task], best};
  }

  std::set<std::string> algos;
  for (const auto& r : records) algos.insert(r.algorithm);

  // sample-efficiency curves: per algorithm, stratified over tasks at every
  // shared evaluation point
  std::vector<CurveSeries> curves;
  for (const auto& algo : algos) {
    std::vector<const RunRecord*> runs;
    for (const auto& r : records)
      if (r.algorithm == algo) runs.push_back(&r);
    const std::size_t n_points = runs.front()->points.size();
    for (const auto* r : runs)
      if (r->points.size() != n_points)
        throw ConfigError("report: step grids differ across tasks for algorithm " + algo);
    CurveSeries series;
    series.algorithm = algo;
    for (std::size_t k = 0; k < n_points; ++k) {
      // stratify by task
      std::map<std::string, std::vector<double>> by_task;
      for (const auto* r : runs) {
        const auto [lo, hi] = bounds.at(r->task);
        const double score = std::clamp((mean_of(r->points[k].returns) - lo) / (hi - lo), 0.0, 1.0);
        by_task[r->task].push_back(score);
      }
      ScoreMatrix m;
      for (auto& [task, scores] : by_task) {
        m.tasks.push_back(task);
        m.scores.push_back(scores);
      }
      std::vector<double> all;
      for (const auto& row : m.scores) all.insert(all.end(), row.begin(), row.end());
      series.frames.push_back(runs.front()->points[k].step_count);
      series.value.push_back(iqm(all));
      const auto ci =
          stratified_bootstrap_ci(m, Statistic::Iqm, options.n_resamples, options.confidence, options.seed);
      series.lo.push_back(ci.lo);
      series.hi.push_back(ci.hi);
    }
    curves.push_back(std::move(series));
  }

  std::vector<double> taus = options.taus;
  if (taus.empty())
    for (int i = 0; i <= 20; ++i) taus.push_back(i * 0.05);

  std::vector<ProfileSeries> profiles;
  std::vector<AggregateRow> aggregates;
  for (const auto& algo : algos) {
    const auto& m = matrices.at(algo);
    profiles.push_back(
        {algo, performance_profile(m, taus, options.n_resamples, options.confidence, options.seed)});
    aggregates.push_back({algo, aggregate_scores(m, options.n_resamples, options.confidence, options.seed)});
  }

  fs::create_directories(options.out_dir);
  render_curves_svg(options.out_dir + "/curves.svg", curves);
  write_curves_csv(options.out_dir + "/curves.csv", curves);
  render_profile_svg(options.out_dir + "/profile.svg", profiles);
  write_profile_csv(options.out_dir + "/profile.csv", profiles);
  render_aggregates_svg(options.out_dir + "/aggregates.svg", aggregates);
  write_aggregates_csv(options.out_dir + "/aggregates.csv", aggregates);
}

}  // namespace marlbench::reporting
