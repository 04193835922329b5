#include "marlbench/cli/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "marlbench/benchmark/benchmark.hpp"
#include "marlbench/config/config.hpp"
#include "marlbench/core/errors.hpp"
#include "marlbench/experiment/checkpoint.hpp"
#include "marlbench/experiment/experiment.hpp"
#include "marlbench/reporting/report.hpp"

namespace marlbench::cli {

namespace fs = std::filesystem;

namespace {

struct Args {
  // key=value tokens split into selections and config overrides
  std::string algorithm, task, model = "mlp";
  std::vector<std::string> algorithms, tasks, models;
  std::vector<std::string> user_files;
  std::vector<std::string> overrides;
  std::string backend = "sequential";
  std::string input, out, checkpoint;
  std::int64_t seeds = -1;
  std::int64_t additional_frames = -1;
  std::int64_t n_resamples = 2000;
  std::vector<double> taus;
  std::int64_t report_seed = 0;
};

std::string out_root() {
  if (const char* env = std::getenv("MARLBENCH_OUT")) return env;
  return "results";
}

std::vector<std::string> parse_list(const std::string& value) {
  if (value.size() >= 2 && value.front() == '[' && value.back() == ']') {
    std::vector<std::string> out;
    std::string cur;
    for (char c : value.substr(1, value.size() - 2)) {
      if (c == ',') {
        out.push_back(cur);
        cur.clear();
      } else if (c != ' ') {
        cur += c;
      }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
  }
  return {value};
}

std::int64_t parse_count(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const std::int64_t v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("argument '" + key + "': expected an integer, got '" + value + "'");
  }
}

Args parse_args(int argc, char** argv, int first) {
  Args args;
  for (int i = first; i < argc; ++i) {
    const std::string token = argv[i];
    const auto eq = token.find('=');
    if (eq == std::string::npos)
      throw ConfigError("argument '" + token + "' is not of the form key=value");
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    if (key == "algorithm") {
      args.algorithms = parse_list(value);
      args.algorithm = args.algorithms.front();
    } else if (key == "task") {
      args.tasks = parse_list(value);
      args.task = args.tasks.front();
    } else if (key == "model") {
      args.models = parse_list(value);
      args.model = args.models.front();
    } else if (key == "config") {
      args.user_files.push_back(value);
    } else if (key == "backend") {
      args.backend = value;
    } else if (key == "seeds") {
      args.seeds = parse_count(key, value);
    } else if (key == "input") {
      args.input = value;
    } else if (key == "out") {
      args.out = value;
    } else if (key == "checkpoint") {
      args.checkpoint = value;
    } else if (key == "additional_frames") {
      args.additional_frames = parse_count(key, value);
    } else if (key == "n_resamples") {
      args.n_resamples = parse_count(key, value);
    } else if (key == "report_seed") {
      args.report_seed = parse_count(key, value);
    } else if (key == "taus") {
      for (const auto& t : parse_list(value)) args.taus.push_back(std::stod(t));
    } else {
      args.overrides.push_back(token);
    }
  }
  return args;
}

void print_usage() {
  std::cout <<
      R"(usage: marlbench <command> [key=value ...]

commands:
  run        algorithm=<name> task=<id> [model=mlp] [seed=N] [config=file.yaml] [overrides...]
  benchmark  algorithm=[a,b] task=[t1,t2] [model=[mlp]] seeds=N [backend=sequential|worker_pool:K] [overrides...]
  report     input=<dir> [out=<dir>] [n_resamples=2000] [taus=[0,0.5,1]] [report_seed=0]
  resume     checkpoint=<path> additional_frames=N

Overrides use the configuration grammar: dotted.key=value or key=[a,b].
The output root is ./results, or $MARLBENCH_OUT when set. Default YAML
configuration is read from ./conf, or $MARLBENCH_CONF when set.

exit codes: 0 success, 1 configuration error, 2 runtime failure

configuration keys:
)";
  for (const auto& leaf : config::config_schema()) {
    std::string line = "  " + leaf.key;
    if (line.size() < 42) line.append(42 - line.size(), ' ');
    std::cout << line << leaf.type_str() << "  " << leaf.range_str() << "  " << leaf.doc << "\n";
  }
}

int cmd_run(const Args& args) {
  if (args.algorithm.empty() || args.task.empty())
    throw ConfigError("run: algorithm= and task= are required");
  config::ConfigSources sources;
  sources.conf_root = config::default_conf_root();
  sources.algorithm = args.algorithm;
  sources.task = args.task;
  sources.model = args.model;
  sources.user_files = args.user_files;
  sources.overrides = args.overrides;
  config::RunBundle bundle = config::load_config(sources);

  const std::string run_dir =
      (fs::path(out_root()) /
       experiment::Experiment::run_dir_name(bundle.algo_name, bundle.task_id, bundle.model_name, bundle.seed))
          .string();
  experiment::Experiment exp(bundle, run_dir);
  exp.run();
  std::cout << run_dir << "\n";
  return 0;
}

benchmark::BenchmarkPlan make_plan(const Args& args) {
  if (args.algorithms.empty() || args.tasks.empty())
    throw ConfigError("benchmark: algorithm= and task= are required");
  if (args.seeds < 1) throw ConfigError("benchmark: seeds=N (N >= 1) is required");
  benchmark::BenchmarkPlan plan;
  plan.algorithms = args.algorithms;
  plan.tasks = args.tasks;
  plan.models = args.models.empty() ? std::vector<std::string>{"mlp"} : args.models;
  for (std::int64_t s = 0; s < args.seeds; ++s) plan.seeds.push_back(static_cast<std::uint64_t>(s));
  plan.conf_root = config::default_conf_root();
  plan.user_files = args.user_files;
  plan.overrides = args.overrides;
  plan.out_root = args.out.empty() ? out_root() : args.out;
  if (args.backend == "sequential") {
    plan.backend = benchmark::Backend::Sequential;
  } else if (args.backend.rfind("worker_pool", 0) == 0) {
    plan.backend = benchmark::Backend::WorkerPool;
    const auto colon = args.backend.find(':');
    plan.workers = colon == std::string::npos ? 4 : static_cast<int>(parse_count("backend", args.backend.substr(colon + 1)));
  } else {
    throw ConfigError("benchmark: unknown backend '" + args.backend +
                      "' (sequential | worker_pool:K)");
  }
  return plan;
}

int cmd_benchmark(const Args& args) {
  auto plan = make_plan(args);
  auto expansion = benchmark::expand(plan);
  auto summary = benchmark::execute(plan, expansion);
  fs::create_directories(plan.out_root);
  const std::string summary_path = (fs::path(plan.out_root) / "benchmark_summary.json").string();
  benchmark::write_summary_json(summary_path, summary);
  std::cout << "completed " << summary.completed.size() << ", failed " << summary.failed.size()
            << ", excluded " << summary.excluded.size() << " -> " << summary_path << "\n";
  return summary.all_ok() ? 0 : 2;
}

int cmd_report(const Args& args) {
  if (args.input.empty()) throw ConfigError("report: input= is required");
  reporting::ReportOptions options;
  options.input_dir = args.input;
  options.out_dir = args.out.empty() ? (fs::path(args.input) / "report").string() : args.out;
  options.conf_root = config::default_conf_root();
  options.n_resamples = static_cast<int>(args.n_resamples);
  options.taus = args.taus;
  options.seed = static_cast<std::uint64_t>(args.report_seed);
  reporting::generate_report(options);
  std::cout << options.out_dir << "\n";
  return 0;
}

int cmd_resume(const Args& args) {
  if (args.checkpoint.empty()) throw ConfigError("resume: checkpoint= is required");
  if (args.additional_frames < 0) throw ConfigError("resume: additional_frames=N (N >= 0) is required");
  const auto tree = experiment::read_checkpoint_config(args.checkpoint);
  config::RunBundle bundle = config::bundle_from_tree(tree);
  const fs::path ckpt(args.checkpoint);
  const std::string run_dir = ckpt.parent_path().parent_path().string();
  experiment::Experiment exp(bundle, run_dir);
  exp.load_checkpoint(args.checkpoint);
  exp.extend_total_frames(args.additional_frames);
  exp.run();
  std::cout << run_dir << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
  if (argc < 2) {
    print_usage();
    return 1;
  }
  const std::string command = argv[1];
  if (command == "--help" || command == "-h" || command == "help") {
    print_usage();
    return 0;
  }
  try {
    const Args args = parse_args(argc, argv, 2);
    if (command == "run") return cmd_run(args);
    if (command == "benchmark") return cmd_benchmark(args);
    if (command == "report") return cmd_report(args);
    if (command == "resume") return cmd_resume(args);
    std::cerr << "unknown command '" << command << "'\n";
    print_usage();
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace marlbench::cli
