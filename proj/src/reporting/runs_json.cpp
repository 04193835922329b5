#include "marlbench/reporting/runs_json.hpp"

#include <json.hpp>

#include <fstream>
#include <map>
#include <stdexcept>

#include "marlbench/core/errors.hpp"

namespace marlbench::reporting {

using nlohmann::json;

namespace {

void check_step_grids(const std::vector<RunRecord>& records) {
  std::map<std::pair<std::string, std::string>, std::pair<std::string, std::vector<std::int64_t>>> grids;
  for (const auto& r : records) {
    std::vector<std::int64_t> grid;
    for (const auto& p : r.points) grid.push_back(p.step_count);
    auto key = std::make_pair(r.algorithm, r.task);
    auto it = grids.find(key);
    if (it == grids.end()) {
      grids[key] = {r.run_id, grid};
    } else if (it->second.second != grid) {
      throw ConfigError("runs document: step grids differ within (" + r.algorithm + ", " + r.task + "): " +
                        it->second.first + " vs " + r.run_id);
    }
  }
}

}  // namespace

std::string emit_runs_document(const std::vector<RunRecord>& records) {
  check_step_grids(records);
  json doc;
  doc["schema_version"] = kRunsSchemaVersion;
  for (const auto& r : records) {
    json run;
    for (std::size_t k = 0; k < r.points.size(); ++k) {
      json step;
      step["step_count"] = r.points[k].step_count;
      step["metrics"]["return"] = r.points[k].returns;
      run["step_" + std::to_string(k)] = std::move(step);
    }
    run["absolute_metrics"]["return"] = r.absolute_metrics;
    if (doc[r.environment][r.algorithm][r.task].contains(r.run_id))
      throw ConfigError("runs document: duplicate run " + r.environment + "/" + r.algorithm + "/" + r.task +
                        "/" + r.run_id);
    doc[r.environment][r.algorithm][r.task][r.run_id] = std::move(run);
  }
  return doc.dump(2) + "\n";
}

std::vector<RunRecord> parse_runs_document(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("runs document: invalid JSON: ") + e.what());
  }
  if (!doc.contains("schema_version") || doc["schema_version"].get<int>() != kRunsSchemaVersion)
    throw ConfigError("runs document: missing or unsupported schema_version");
  std::vector<RunRecord> records;
  for (const auto& [env, algos] : doc.items()) {
    if (env == "schema_version") continue;
    for (const auto& [algo, tasks] : algos.items()) {
      for (const auto& [task, runs] : tasks.items()) {
        for (const auto& [run_id, run] : runs.items()) {
          RunRecord r;
          r.environment = env;
          r.algorithm = algo;
          r.task = task;
          r.run_id = run_id;
          std::map<std::int64_t, EvalPoint> ordered;
          for (const auto& [step_id, step] : run.items()) {
            if (step_id == "absolute_metrics") {
              r.absolute_metrics = step["return"].get<std::vector<double>>();
              continue;
            }
            if (step_id.rfind("step_", 0) != 0)
              throw ConfigError("runs document: unexpected key '" + step_id + "' in run " + run_id);
            EvalPoint p;
            p.step_count = step["step_count"].get<std::int64_t>();
            p.returns = step["metrics"]["return"].get<std::vector<double>>();
            ordered[std::stoll(step_id.substr(5))] = std::move(p);
          }
          std::int64_t prev = -1;
          for (auto& [k, p] : ordered) {
            if (p.step_count <= prev)
              throw ConfigError("runs document: step_count not strictly increasing in run " + run_id);
            prev = p.step_count;
            r.points.push_back(std::move(p));
          }
          records.push_back(std::move(r));
        }
      }
    }
  }
  check_step_grids(records);
  return records;
}

void write_runs_json(const std::string& path, const std::vector<RunRecord>& records) {
  std::ofstream file(path, std::ios::trunc);
  if (!file) throw RuntimeFailure("cannot write " + path);
  file << emit_runs_document(records);
}

std::vector<RunRecord> read_runs_json(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw ConfigError("cannot read " + path);
  std::string text((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  return parse_runs_document(text);
}

}  // namespace marlbench::reporting
