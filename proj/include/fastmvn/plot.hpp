// CSV parsing and a small standalone-SVG line-chart renderer for the two
// benchmark schemas: timing sweeps (log-log) and SG-MCMC residual traces
// (linear). The output is a pure function of the CSV bytes: deterministic
// grouping, fixed palette, fixed number formatting.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fastmvn/bench.hpp"
#include "fastmvn/errors.hpp"

namespace fastmvn {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows; // rows[i] aligned with header
};

namespace plot_detail {

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (const char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_number(const std::string& s, long line_no) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("not a number: '" + s + "'", line_no);
  }
}

} // namespace plot_detail

inline CsvTable parse_csv(const std::string& text) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = plot_detail::split_fields(line);
    if (line_no == 1) {
      table.header = std::move(fields);
      continue;
    }
    if (fields.size() != table.header.size())
      throw ParseError("expected " + std::to_string(table.header.size()) +
                           " fields, got " + std::to_string(fields.size()),
                       line_no);
    table.rows.push_back(std::move(fields));
  }
  if (table.header.empty()) throw ParseError("empty CSV", 1);
  return table;
}

namespace plot_detail {

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points; // sorted by x
};

inline std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string fmt_tick(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                 "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
  return colors[i % 8];
}

// Shared frame: margins, axes, series polylines, legend.
inline std::string render_frame(const std::vector<Series>& series,
                                const std::string& title, bool log_x,
                                bool log_y, const std::string& x_label,
                                const std::string& y_label) {
  const double width = 720.0, height = 480.0;
  const double ml = 80.0, mr = 170.0, mt = 40.0, mb = 55.0;
  const double pw = width - ml - mr, ph = height - mt - mb;

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (series.empty() || xmin > xmax)
    throw InvalidArgument("plot: no data to render");
  auto tx = [&](double v) { return log_x ? std::log10(v) : v; };
  auto ty = [&](double v) { return log_y ? std::log10(v) : v; };
  double x0 = tx(xmin), x1 = tx(xmax), y0 = ty(ymin), y1 = ty(ymax);
  if (x1 - x0 < 1e-12) {
    x0 -= 0.5;
    x1 += 0.5;
  }
  if (y1 - y0 < 1e-12) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  const double xpad = 0.04 * (x1 - x0), ypad = 0.06 * (y1 - y0);
  x0 -= xpad;
  x1 += xpad;
  y0 -= ypad;
  y1 += ypad;
  auto px = [&](double v) { return ml + (tx(v) - x0) / (x1 - x0) * pw; };
  auto py = [&](double v) { return mt + ph - (ty(v) - y0) / (y1 - y0) * ph; };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" "
         "width=\"720\" height=\"480\" viewBox=\"0 0 720 480\">\n"
      << "<rect width=\"720\" height=\"480\" fill=\"white\"/>\n"
      << "<text x=\"" << fmt(ml + pw / 2) << "\" y=\"24\" font-family=\"sans-serif\" "
         "font-size=\"15\" text-anchor=\"middle\">" << title << "</text>\n";

  // axes box
  svg << "<rect x=\"" << fmt(ml) << "\" y=\"" << fmt(mt) << "\" width=\""
      << fmt(pw) << "\" height=\"" << fmt(ph)
      << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";

  // ticks
  auto emit_xtick = [&](double v) {
    const double x = ml + (v - x0) / (x1 - x0) * pw;
    svg << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(mt + ph) << "\" x2=\""
        << fmt(x) << "\" y2=\"" << fmt(mt + ph + 5) << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(mt + ph + 20)
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">"
        << fmt_tick(log_x ? std::pow(10.0, v) : v) << "</text>\n";
  };
  auto emit_ytick = [&](double v) {
    const double y = mt + ph - (v - y0) / (y1 - y0) * ph;
    svg << "<line x1=\"" << fmt(ml - 5) << "\" y1=\"" << fmt(y) << "\" x2=\""
        << fmt(ml) << "\" y2=\"" << fmt(y) << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << fmt(ml - 9) << "\" y=\"" << fmt(y + 4)
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">"
        << fmt_tick(log_y ? std::pow(10.0, v) : v) << "</text>\n";
  };
  const int n_ticks = 5;
  for (int i = 0; i <= n_ticks; ++i) {
    if (log_x) {
      // decade ticks, thinned to at most n_ticks+1
      const int lo = static_cast<int>(std::ceil(x0)), hi = static_cast<int>(std::floor(x1));
      if (i == 0)
        for (int d = lo; d <= hi; d += std::max(1, (hi - lo) / n_ticks))
          emit_xtick(static_cast<double>(d));
    } else {
      emit_xtick(x0 + (x1 - x0) * i / n_ticks);
    }
    if (log_y) {
      const int lo = static_cast<int>(std::ceil(y0)), hi = static_cast<int>(std::floor(y1));
      if (i == 0)
        for (int d = lo; d <= hi; d += std::max(1, (hi - lo) / n_ticks))
          emit_ytick(static_cast<double>(d));
    } else {
      emit_ytick(y0 + (y1 - y0) * i / n_ticks);
    }
  }

  // axis labels
  svg << "<text x=\"" << fmt(ml + pw / 2) << "\" y=\"" << fmt(height - 12)
      << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">"
      << x_label << "</text>\n"
      << "<text x=\"18\" y=\"" << fmt(mt + ph / 2)
      << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 18 " << fmt(mt + ph / 2) << ")\">" << y_label
      << "</text>\n";

  // series
  for (std::size_t si = 0; si < series.size(); ++si) {
    svg << "<polyline fill=\"none\" stroke=\"" << palette(si)
        << "\" stroke-width=\"1.8\" points=\"";
    for (const auto& [x, y] : series[si].points)
      svg << fmt(px(x)) << ',' << fmt(py(y)) << ' ';
    svg << "\"/>\n";
    for (const auto& [x, y] : series[si].points)
      svg << "<circle cx=\"" << fmt(px(x)) << "\" cy=\"" << fmt(py(y))
          << "\" r=\"2.5\" fill=\"" << palette(si) << "\"/>\n";
    // legend entry
    const double ly = mt + 12 + 18.0 * static_cast<double>(si);
    svg << "<rect x=\"" << fmt(ml + pw + 14) << "\" y=\"" << fmt(ly - 8)
        << "\" width=\"10\" height=\"10\" fill=\"" << palette(si) << "\"/>\n"
        << "<text x=\"" << fmt(ml + pw + 29) << "\" y=\"" << fmt(ly + 1)
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << series[si].label
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

} // namespace plot_detail

/// Render a CSV produced by the bench or sgmcmc subcommands as a standalone
/// SVG 1.1 document: log-log for timing sweeps, linear for residual traces.
inline std::string render_csv_plot(const std::string& csv_text) {
  const CsvTable table = parse_csv(csv_text);
  const std::string header = [&] {
    std::string h;
    for (std::size_t i = 0; i < table.header.size(); ++i)
      h += (i ? "," : "") + table.header[i];
    return h;
  }();

  auto col = [&](const char* name) {
    const auto it = std::find(table.header.begin(), table.header.end(), name);
    return static_cast<std::size_t>(it - table.header.begin());
  };

  if (header == kBenchCsvHeader) {
    // pick the dimension column that varies
    const std::vector<std::string> dims = {"k", "k1", "k2", "n", "p"};
    std::string x_field;
    for (const auto& d : dims) {
      std::vector<std::string> seen;
      for (const auto& row : table.rows) {
        const auto& v = row[col(d.c_str())];
        if (v.empty()) continue;
        if (std::find(seen.begin(), seen.end(), v) == seen.end())
          seen.push_back(v);
      }
      if (seen.size() > 1) {
        x_field = d;
        break;
      }
      if (!seen.empty() && x_field.empty()) x_field = d;
    }
    if (x_field.empty()) throw ParseError("no dimension column populated", 2);

    // median wall time per (algorithm/cov_kind, x)
    std::map<std::string, std::map<double, std::vector<double>>> grouped;
    long line_no = 1;
    for (const auto& row : table.rows) {
      ++line_no;
      const std::string& xv = row[col(x_field.c_str())];
      if (xv.empty()) continue;
      const double x = plot_detail::parse_number(xv, line_no);
      const double y =
          plot_detail::parse_number(row[col("wall_time_ms")], line_no);
      std::string key = row[col("algorithm")];
      if (!row[col("cov_kind")].empty()) key += "/" + row[col("cov_kind")];
      grouped[key][x].push_back(y);
    }
    std::vector<plot_detail::Series> series;
    for (auto& [label, xs] : grouped) {
      plot_detail::Series s;
      s.label = label;
      for (auto& [x, ys] : xs) {
        std::sort(ys.begin(), ys.end());
        s.points.emplace_back(x, ys[ys.size() / 2]);
      }
      series.push_back(std::move(s));
    }
    const std::string title =
        table.rows.empty() ? "timing" : table.rows.front()[col("experiment")];
    return plot_detail::render_frame(series, title + " sweep", true, true,
                                     x_field, "wall time per batch [ms]");
  }

  if (header == kSgmcmcCsvHeader) {
    std::map<std::string, std::map<double, double>> grouped;
    long line_no = 1;
    for (const auto& row : table.rows) {
      ++line_no;
      const double x = plot_detail::parse_number(row[col("minibatch")], line_no);
      const double y = plot_detail::parse_number(row[col("residual")], line_no);
      grouped[row[col("algorithm")]][x] = y;
    }
    std::vector<plot_detail::Series> series;
    for (auto& [label, xs] : grouped) {
      plot_detail::Series s;
      s.label = label;
      for (const auto& [x, y] : xs) s.points.emplace_back(x, y);
      series.push_back(std::move(s));
    }
    return plot_detail::render_frame(series, "sgmcmc residuals", false, false,
                                     "minibatch", "residual");
  }

  throw ParseError("unrecognized CSV header: " + header, 1);
}

inline void plot_csv_file(const std::string& csv_path, const std::string& out_svg) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + csv_path);
  std::ostringstream buf;
  buf << in.rdbuf();
  write_text_file(out_svg, render_csv_plot(buf.str()));
}

} // namespace fastmvn
