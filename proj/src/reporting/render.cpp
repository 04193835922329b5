#include "marlbench/reporting/render.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "marlbench/core/errors.hpp"

namespace marlbench::reporting {

namespace {

const char* kPalette[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3",
                          "#937860", "#da8bc3", "#8c8c8c", "#ccb974", "#64b5cd"};
constexpr int kPaletteSize = 10;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string csv_num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

struct LinearScale {
  double d0 = 0.0, d1 = 1.0;  // data range
  double p0 = 0.0, p1 = 1.0;  // pixel range
  double operator()(double v) const {
    if (d1 == d0) return 0.5 * (p0 + p1);
    return p0 + (v - d0) / (d1 - d0) * (p1 - p0);
  }
};

struct Svg {
  std::ostringstream os;
  double width, height;

  Svg(double w, double h) : width(w), height(h) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
       << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
    os << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  }

  void line(double x1, double y1, double x2, double y2, const std::string& color, double sw = 1.0) {
    os << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2) << "\" y2=\""
       << num(y2) << "\" stroke=\"" << color << "\" stroke-width=\"" << sw << "\"/>\n";
  }

  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color, double sw) {
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << sw << "\" points=\"";
    for (const auto& [x, y] : pts) os << num(x) << "," << num(y) << " ";
    os << "\"/>\n";
  }

  void polygon(const std::vector<std::pair<double, double>>& pts, const std::string& color,
               double opacity) {
    os << "<polygon fill=\"" << color << "\" fill-opacity=\"" << opacity << "\" stroke=\"none\" points=\"";
    for (const auto& [x, y] : pts) os << num(x) << "," << num(y) << " ";
    os << "\"/>\n";
  }

  void text(double x, double y, const std::string& s, int size = 11, const std::string& anchor = "start",
            const std::string& color = "#333333") {
    os << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-family=\"Helvetica,sans-serif\" "
       << "font-size=\"" << size << "\" text-anchor=\"" << anchor << "\" fill=\"" << color << "\">" << s
       << "</text>\n";
  }

  void circle(double x, double y, double r, const std::string& color) {
    os << "<circle cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\"" << r << "\" fill=\"" << color
       << "\"/>\n";
  }

  void save(const std::string& path) {
    os << "</svg>\n";
    std::ofstream file(path, std::ios::trunc);
    if (!file) throw RuntimeFailure("cannot write " + path);
    file << os.str();
  }
};

void draw_axes(Svg& svg, const LinearScale& sx, const LinearScale& sy, const std::string& xlabel,
               const std::string& ylabel) {
  const std::string axis = "#444444";
  svg.line(sx.p0, sy.p0, sx.p1, sy.p0, axis);
  svg.line(sx.p0, sy.p0, sx.p0, sy.p1, axis);
  for (int i = 0; i <= 4; ++i) {
    const double fx = sx.d0 + (sx.d1 - sx.d0) * i / 4.0;
    const double fy = sy.d0 + (sy.d1 - sy.d0) * i / 4.0;
    svg.line(sx(fx), sy.p0, sx(fx), sy.p0 + 4, axis);
    svg.text(sx(fx), sy.p0 + 16, num(fx), 9, "middle");
    svg.line(sx.p0 - 4, sy(fy), sx.p0, sy(fy), axis);
    svg.text(sx.p0 - 6, sy(fy) + 3, num(fy), 9, "end");
  }
  svg.text((sx.p0 + sx.p1) / 2, sy.p0 + 30, xlabel, 11, "middle");
  svg.text(sx.p0 - 44, sy.p1 - 8, ylabel, 11, "start");
}

void draw_legend(Svg& svg, const std::vector<std::string>& names, double x, double y) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    const std::string color = kPalette[i % kPaletteSize];
    svg.line(x, y + 14.0 * i, x + 16, y + 14.0 * i, color, 2.5);
    svg.text(x + 20, y + 14.0 * i + 4, names[i], 10);
  }
}

}  // namespace

void render_curves_svg(const std::string& path, const std::vector<CurveSeries>& series) {
  if (series.empty()) throw ConfigError("render curves: no algorithms to plot");
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series) {
    for (auto f : s.frames) {
      xmin = std::min(xmin, static_cast<double>(f));
      xmax = std::max(xmax, static_cast<double>(f));
    }
    for (std::size_t i = 0; i < s.value.size(); ++i) {
      ymin = std::min({ymin, s.lo[i]});
      ymax = std::max({ymax, s.hi[i]});
    }
  }
  if (ymin == ymax) {
    ymin -= 1.0;
    ymax += 1.0;
  }
  Svg svg(720, 440);
  LinearScale sx{xmin, xmax, 70, 690};
  LinearScale sy{ymin, ymax, 395, 30};
  draw_axes(svg, sx, sy, "frames", "iqm return (normalized)");
  std::vector<std::string> names;
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const std::string color = kPalette[si % kPaletteSize];
    std::vector<std::pair<double, double>> band;
    for (std::size_t i = 0; i < s.frames.size(); ++i)
      band.push_back({sx(static_cast<double>(s.frames[i])), sy(s.hi[i])});
    for (std::size_t i = s.frames.size(); i-- > 0;)
      band.push_back({sx(static_cast<double>(s.frames[i])), sy(s.lo[i])});
    svg.polygon(band, color, 0.18);
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < s.frames.size(); ++i)
      pts.push_back({sx(static_cast<double>(s.frames[i])), sy(s.value[i])});
    svg.polyline(pts, color, 2.0);
    names.push_back(s.algorithm);
  }
  draw_legend(svg, names, 600, 44);
  svg.save(path);
}

void write_curves_csv(const std::string& path, const std::vector<CurveSeries>& series) {
  if (series.empty()) throw ConfigError("render curves: no algorithms to plot");
  std::ofstream file(path, std::ios::trunc);
  if (!file) throw RuntimeFailure("cannot write " + path);
  file << "algorithm,frames,iqm,ci_lo,ci_hi\n";
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.frames.size(); ++i)
      file << s.algorithm << "," << s.frames[i] << "," << csv_num(s.value[i]) << "," << csv_num(s.lo[i])
           << "," << csv_num(s.hi[i]) << "\n";
}

void render_profile_svg(const std::string& path, const std::vector<ProfileSeries>& series) {
  if (series.empty()) throw ConfigError("render profile: no algorithms to plot");
  double xmin = 1e300, xmax = -1e300;
  for (const auto& s : series)
    for (const auto& p : s.points) {
      xmin = std::min(xmin, p.tau);
      xmax = std::max(xmax, p.tau);
    }
  Svg svg(560, 440);
  LinearScale sx{xmin, xmax, 70, 530};
  LinearScale sy{0.0, 1.0, 395, 30};
  draw_axes(svg, sx, sy, "normalized score tau", "fraction of runs above tau");
  std::vector<std::string> names;
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const std::string color = kPalette[si % kPaletteSize];
    std::vector<std::pair<double, double>> band;
    for (const auto& p : s.points) band.push_back({sx(p.tau), sy(p.ci.hi)});
    for (std::size_t i = s.points.size(); i-- > 0;)
      band.push_back({sx(s.points[i].tau), sy(s.points[i].ci.lo)});
    svg.polygon(band, color, 0.18);
    std::vector<std::pair<double, double>> pts;
    for (const auto& p : s.points) pts.push_back({sx(p.tau), sy(p.fraction)});
    svg.polyline(pts, color, 2.0);
    names.push_back(s.algorithm);
  }
  draw_legend(svg, names, 440, 44);
  svg.save(path);
}

void write_profile_csv(const std::string& path, const std::vector<ProfileSeries>& series) {
  if (series.empty()) throw ConfigError("render profile: no algorithms to plot");
  std::ofstream file(path, std::ios::trunc);
  if (!file) throw RuntimeFailure("cannot write " + path);
  file << "algorithm,tau,fraction,ci_lo,ci_hi\n";
  for (const auto& s : series)
    for (const auto& p : s.points)
      file << s.algorithm << "," << csv_num(p.tau) << "," << csv_num(p.fraction) << "," << csv_num(p.ci.lo)
           << "," << csv_num(p.ci.hi) << "\n";
}

void render_aggregates_svg(const std::string& path, const std::vector<AggregateRow>& rows) {
  if (rows.empty()) throw ConfigError("render aggregates: no algorithms to plot");
  const char* stat_names[4] = {"median", "iqm", "mean", "optimality gap"};
  const double panel_w = 240, panel_gap = 20, left = 110;
  const double row_h = 22;
  const double top = 50;
  const double height = top + row_h * rows.size() + 40;
  Svg svg(left + 4 * (panel_w + panel_gap), height);

  double lo = 1e300, hi = -1e300;
  auto upd = [&](double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  };
  for (const auto& r : rows) {
    upd(r.scores.median_ci.lo);
    upd(r.scores.median_ci.hi);
    upd(r.scores.iqm_ci.lo);
    upd(r.scores.iqm_ci.hi);
    upd(r.scores.mean_ci.lo);
    upd(r.scores.mean_ci.hi);
    upd(r.scores.gap_ci.lo);
    upd(r.scores.gap_ci.hi);
  }
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }

  for (int p = 0; p < 4; ++p) {
    const double x0 = left + p * (panel_w + panel_gap);
    LinearScale sx{lo, hi, x0, x0 + panel_w};
    svg.text(x0 + panel_w / 2, top - 20, stat_names[p], 12, "middle");
    svg.line(x0, top - 8, x0 + panel_w, top - 8, "#444444");
    for (int tick = 0; tick <= 2; ++tick) {
      const double v = lo + (hi - lo) * tick / 2.0;
      svg.text(sx(v), top - 12 + 2, "", 8, "middle");
      svg.line(sx(v), top - 11, sx(v), top - 5, "#444444");
      svg.text(sx(v), height - 14, num(v), 9, "middle");
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& sc = rows[i].scores;
      double v = 0.0, a = 0.0, b = 0.0;
      switch (p) {
        case 0: v = sc.median, a = sc.median_ci.lo, b = sc.median_ci.hi; break;
        case 1: v = sc.iqm, a = sc.iqm_ci.lo, b = sc.iqm_ci.hi; break;
        case 2: v = sc.mean, a = sc.mean_ci.lo, b = sc.mean_ci.hi; break;
        case 3: v = sc.optimality_gap, a = sc.gap_ci.lo, b = sc.gap_ci.hi; break;
      }
      const double y = top + row_h * i + row_h / 2;
      const std::string color = kPalette[i % kPaletteSize];
      svg.line(sx(a), y, sx(b), y, color, 4.0);
      svg.circle(sx(v), y, 3.0, color);
    }
  }
  for (std::size_t i = 0; i < rows.size(); ++i)
    svg.text(left - 8, top + row_h * i + row_h / 2 + 3, rows[i].algorithm, 10, "end");
  svg.save(path);
}

void write_aggregates_csv(const std::string& path, const std::vector<AggregateRow>& rows) {
  if (rows.empty()) throw ConfigError("render aggregates: no algorithms to plot");
  std::ofstream file(path, std::ios::trunc);
  if (!file) throw RuntimeFailure("cannot write " + path);
  file << "algorithm,statistic,value,ci_lo,ci_hi\n";
  for (const auto& r : rows) {
    const auto& s = r.scores;
    file << r.algorithm << ",median," << csv_num(s.median) << "," << csv_num(s.median_ci.lo) << ","
         << csv_num(s.median_ci.hi) << "\n";
    file << r.algorithm << ",iqm," << csv_num(s.iqm) << "," << csv_num(s.iqm_ci.lo) << ","
         << csv_num(s.iqm_ci.hi) << "\n";
    file << r.algorithm << ",mean," << csv_num(s.mean) << "," << csv_num(s.mean_ci.lo) << ","
         << csv_num(s.mean_ci.hi) << "\n";
    file << r.algorithm << ",optimality_gap," << csv_num(s.optimality_gap) << "," << csv_num(s.gap_ci.lo)
         << "," << csv_num(s.gap_ci.hi) << "\n";
  }
}

}  // namespace marlbench::reporting
