#ifndef QAC_REPORT_HPP_
#define QAC_REPORT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qac/errors.hpp"

namespace qac {

namespace fs = std::filesystem;

class AlignmentError : public std::runtime_error {
 public:
  AlignmentError(const std::string& what, std::vector<std::string> files)
      : std::runtime_error(what), files_(std::move(files)) {}
  const std::vector<std::string>& files() const { return files_; }

 private:
  std::vector<std::string> files_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path.string() + ": empty file");
  t.header = split_csv_line(line);
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != t.header.size())
      throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                        ": expected " + std::to_string(t.header.size()) +
                        " columns");
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      char* end = nullptr;
      const double v = std::strtod(c.c_str(), &end);
      if (c.empty() || *end != '\0')
        throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                          ": not a number '" + c + "'");
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

// Per-seed metric files of one run directory, sorted by seed.
inline std::vector<fs::path> seed_files(const fs::path& dir) {
  static const std::regex kName(R"(seed_(\d+)\.csv)");
  std::vector<std::pair<unsigned long long, fs::path>> found;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    std::smatch m;
    if (e.is_regular_file() && std::regex_match(name, m, kName))
      found.emplace_back(std::stoull(m[1].str()), e.path());
  }
  std::sort(found.begin(), found.end());
  std::vector<fs::path> out;
  for (auto& [s, p] : found) out.push_back(p);
  return out;
}

// Mean and population std of every metric column across seed files. Rows
// must line up on rollout_index in every file.
inline CsvTable aggregate_tables(const std::vector<CsvTable>& tables,
                                 const std::vector<std::string>& names) {
  if (tables.empty()) throw ConfigError("nothing to aggregate");
  const CsvTable& ref = tables.front();
  const int idx = ref.column("rollout_index");
  const int steps = ref.column("env_steps");
  if (idx < 0) throw ConfigError("missing rollout_index column");
  std::vector<std::string> bad;
  for (std::size_t f = 0; f < tables.size(); ++f) {
    const auto& t = tables[f];
    bool ok = t.header == ref.header && t.rows.size() == ref.rows.size();
    for (std::size_t r = 0; ok && r < t.rows.size(); ++r)
      ok = t.rows[r][idx] == ref.rows[r][idx];
    if (!ok) bad.push_back(names[f]);
  }
  if (!bad.empty()) {
    std::string msg = "misaligned metric files (compared with " +
                      names.front() + "):";
    for (const auto& b : bad) msg += " " + b;
    throw AlignmentError(msg, bad);
  }

  CsvTable out;
  out.header.push_back("rollout_index");
  if (steps >= 0) out.header.push_back("env_steps");
  std::vector<int> metric_cols;
  for (std::size_t c = 0; c < ref.header.size(); ++c) {
    if (static_cast<int>(c) == idx || static_cast<int>(c) == steps) continue;
    metric_cols.push_back(static_cast<int>(c));
    out.header.push_back(ref.header[c] + "_mean");
    out.header.push_back(ref.header[c] + "_std");
  }
  out.header.push_back("n_seeds");
  const double n = static_cast<double>(tables.size());
  for (std::size_t r = 0; r < ref.rows.size(); ++r) {
    std::vector<double> row{ref.rows[r][idx]};
    if (steps >= 0) row.push_back(ref.rows[r][steps]);
    for (int c : metric_cols) {
      double mean = 0.0;
      for (const auto& t : tables) mean += t.rows[r][c];
      mean /= n;
      double var = 0.0;
      for (const auto& t : tables) var += (t.rows[r][c] - mean) * (t.rows[r][c] - mean);
      row.push_back(mean);
      row.push_back(std::sqrt(var / n));
    }
    row.push_back(n);
    out.rows.push_back(std::move(row));
  }
  return out;
}

inline void write_csv(const fs::path& path, const CsvTable& t) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  for (std::size_t i = 0; i < t.header.size(); ++i)
    out << (i ? "," : "") << t.header[i];
  out << "\n";
  char buf[64];
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.6g", row[i]);
      out << (i ? "," : "") << buf;
    }
    out << "\n";
  }
}

// Directories holding seed files: `dir` itself or its immediate children.
inline std::vector<fs::path> run_directories(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!seed_files(dir).empty()) out.push_back(dir);
  std::vector<fs::path> children;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory()) children.push_back(e.path());
  std::sort(children.begin(), children.end());
  for (const auto& c : children)
    if (!seed_files(c).empty()) out.push_back(c);
  return out;
}

// Writes aggregate.csv into every run directory under `dir`.
inline std::vector<fs::path> aggregate_directory(const fs::path& dir) {
  if (!fs::is_directory(dir))
    throw ConfigError("not a directory: " + dir.string());
  std::vector<fs::path> written;
  for (const auto& run : run_directories(dir)) {
    std::vector<CsvTable> tables;
    std::vector<std::string> names;
    for (const auto& f : seed_files(run)) {
      tables.push_back(read_csv(f));
      names.push_back(f.string());
    }
    const auto path = run / "aggregate.csv";
    write_csv(path, aggregate_tables(tables, names));
    written.push_back(path);
  }
  if (written.empty())
    throw ConfigError("no seed_<n>.csv files under " + dir.string());
  return written;
}

// ---------------------------------------------------------------------------
// SVG learning curves

struct Series {
  std::string label;
  std::vector<double> x, mean, std;
};

inline std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// One mean line per series with a shaded +-1 std band.
inline std::string render_svg(const std::vector<Series>& series,
                              const std::string& title,
                              const std::string& y_label) {
  static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                   "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                   "#bcbd22", "#17becf"};
  const double W = 720, H = 440, L = 70, R = 180, T = 40, B = 50;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 0;
  bool first = true;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (first) {
        x0 = x1 = s.x[i];
        first = false;
      }
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.mean[i] - s.std[i]);
      y1 = std::max(y1, s.mean[i] + s.std[i]);
    }
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) y1 = y0 + 1;
  const double pw = W - L - R, ph = H - T - B;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return T + (1.0 - (y - y0) / (y1 - y0)) * ph; };
  char buf[256];
  std::ostringstream os;
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" "
                "height=\"%.0f\" viewBox=\"0 0 %.0f %.0f\">\n",
                W, H, W, H);
  os << buf << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf,
                "<text x=\"%.1f\" y=\"24\" font-family=\"sans-serif\" "
                "font-size=\"15\" text-anchor=\"middle\">",
                L + pw / 2);
  os << buf << svg_escape(title) << "</text>\n";
  std::snprintf(buf, sizeof buf,
                "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" "
                "fill=\"none\" stroke=\"black\"/>\n",
                L, T, pw, ph);
  os << buf;
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" "
                  "font-size=\"11\" text-anchor=\"middle\">%.4g</text>\n",
                  px(xv), T + ph + 16, xv);
    os << buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" "
                  "font-size=\"11\" text-anchor=\"end\">%.3g</text>\n",
                  L - 6, py(yv) + 4, yv);
    os << buf;
  }
  std::snprintf(buf, sizeof buf,
                "<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" "
                "font-size=\"12\" text-anchor=\"middle\">environment steps</text>\n",
                L + pw / 2, H - 10);
  os << buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"16\" y=\"%.1f\" font-family=\"sans-serif\" "
                "font-size=\"12\" text-anchor=\"middle\" "
                "transform=\"rotate(-90 16 %.1f)\">",
                T + ph / 2, T + ph / 2);
  os << buf << svg_escape(y_label) << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& sr = series[s];
    const char* color = kPalette[s % std::size(kPalette)];
    if (sr.x.empty()) continue;
    os << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < sr.x.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(sr.x[i]),
                    py(sr.mean[i] + sr.std[i]));
      os << buf;
    }
    for (std::size_t i = sr.x.size(); i-- > 0;) {
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(sr.x[i]),
                    py(sr.mean[i] - sr.std[i]));
      os << buf;
    }
    os << "\"/>\n<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" << color
       << "\" points=\"";
    for (std::size_t i = 0; i < sr.x.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(sr.x[i]), py(sr.mean[i]));
      os << buf;
    }
    os << "\"/>\n";
    const double ly = T + 14 + 18.0 * static_cast<double>(s);
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                  "stroke=\"%s\" stroke-width=\"3\"/>\n"
                  "<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" "
                  "font-size=\"11\">",
                  L + pw + 10, ly, L + pw + 30, ly, color, L + pw + 36, ly + 4);
    os << buf << svg_escape(sr.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

// Reads every aggregate.csv below `dir` and plots `metric` (e.g.
// "success_rate") as one SVG. Aggregates missing files first.
inline fs::path plot_directory(const fs::path& dir, const std::string& metric) {
  std::vector<Series> series;
  for (const auto& run : run_directories(dir)) {
    const auto agg = run / "aggregate.csv";
    if (!fs::exists(agg)) aggregate_directory(run);
    const CsvTable t = read_csv(agg);
    const int xs = t.column("env_steps") >= 0 ? t.column("env_steps")
                                              : t.column("rollout_index");
    const int m = t.column(metric + "_mean");
    const int s = t.column(metric + "_std");
    if (m < 0 || s < 0)
      throw ConfigError(agg.string() + ": no metric '" + metric + "'");
    Series sr;
    sr.label = run == dir ? dir.filename().string() : run.filename().string();
    for (const auto& row : t.rows) {
      sr.x.push_back(row[xs]);
      sr.mean.push_back(row[m]);
      sr.std.push_back(row[s]);
    }
    series.push_back(std::move(sr));
  }
  if (series.empty())
    throw ConfigError("no run directories under " + dir.string());
  const auto out = dir / (metric + ".svg");
  std::ofstream f(out);
  f << render_svg(series, metric, metric);
  return out;
}

}  // namespace qac

#endif  // QAC_REPORT_HPP_
