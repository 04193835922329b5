#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "marlbench/reporting/stats.hpp"

namespace marlbench::reporting {

struct CurveSeries {
  std::string algorithm;
  std::vector<std::int64_t> frames;
  std::vector<double> value, lo, hi;
};

struct ProfileSeries {
  std::string algorithm;
  std::vector<ProfilePoint> points;
};

struct AggregateRow {
  std::string algorithm;
  AggregateScores scores;
};

// Every plot gets a CSV twin carrying the exact plotted numbers. Rendering
// identical inputs yields byte-identical files.
void render_curves_svg(const std::string& path, const std::vector<CurveSeries>& series);
void write_curves_csv(const std::string& path, const std::vector<CurveSeries>& series);

void render_profile_svg(const std::string& path, const std::vector<ProfileSeries>& series);
void write_profile_csv(const std::string& path, const std::vector<ProfileSeries>& series);

void render_aggregates_svg(const std::string& path, const std::vector<AggregateRow>& rows);
void write_aggregates_csv(const std::string& path, const std::vector<AggregateRow>& rows);

}  // namespace marlbench::reporting
