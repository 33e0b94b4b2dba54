#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "netf/experiment.hpp"

namespace netf {

namespace {

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  Eigen::Index column_index(const std::string& name) const {
    auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end())
      throw std::runtime_error("csv schema error: missing column '" + name + "'");
    return static_cast<Eigen::Index>(it - columns.begin());
  }
};

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  CsvTable t;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (header) {
      t.columns = std::move(cells);
      header = false;
    } else {
      t.rows.push_back(std::move(cells));
    }
  }
  return t;
}

struct Series {
  std::vector<double> x, y;
};

struct Panel {
  std::string column;   // metrics column, or special "margin_distribution"
  std::string title;
};

const std::map<std::string, Panel>& panel_defs() {
  static const std::map<std::string, Panel> defs = {
      {"loss", {"loss", "CE loss"}},
      {"cosine_margin", {"mean_cosine_margin", "Avg cosine margin"}},
      {"margin_distribution", {"margin_distribution", "Cosine margin distribution at end of training"}},
      {"nc1", {"nc1", "NC1"}},
      {"nc3", {"nc3", "NC3"}},
      {"equinorm", {"equinorm_gap", "W/H equinorm gap"}},
      {"accuracy", {"train_top1", "Train top-1 accuracy"}},
  };
  return defs;
}

const char* mode_colour(const std::string& mode) {
  if (mode == "standard") return "#d62728";
  if (mode == "fixed_etf") return "#1f77b4";
  if (mode == "implicit_etf") return "#2ca02c";
  return "#7f7f7f";
}

// Minimal static SVG line plot with optional min/max bands.
class SvgPlot {
 public:
  SvgPlot(std::string title) : title_(std::move(title)) {}

  void add_band(const std::string& label, const Series& median, const Series& lo,
                const Series& hi) {
    bands_.push_back({label, median, lo, hi});
  }

  void write(const std::filesystem::path& path) const {
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& b : bands_) {
      for (double v : b.median.x) {
        xmin = std::min(xmin, v);
        xmax = std::max(xmax, v);
      }
      for (const auto* s : {&b.lo, &b.hi, &b.median})
        for (double v : s->y) {
          if (!std::isfinite(v)) continue;
          ymin = std::min(ymin, v);
          ymax = std::max(ymax, v);
        }
    }
    if (xmax <= xmin) xmax = xmin + 1.0;
    if (ymax <= ymin) ymax = ymin + 1.0;
    double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    const double W = 640, H = 420, L = 70, R = 20, T = 40, B = 50;
    auto sx = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
    auto sy = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
    out << "<rect width='100%' height='100%' fill='white'/>\n";
    out << "<text x='" << W / 2 << "' y='24' text-anchor='middle' font-size='16'>" << title_
        << "</text>\n";
    // axes
    out << "<line x1='" << L << "' y1='" << H - B << "' x2='" << W - R << "' y2='" << H - B
        << "' stroke='black'/>\n";
    out << "<line x1='" << L << "' y1='" << T << "' x2='" << L << "' y2='" << H - B
        << "' stroke='black'/>\n";
    for (int k = 0; k <= 4; ++k) {
      double xv = xmin + k * (xmax - xmin) / 4;
      double yv = ymin + k * (ymax - ymin) / 4;
      out << "<text x='" << sx(xv) << "' y='" << H - B + 18
          << "' text-anchor='middle' font-size='11'>" << format_tick(xv) << "</text>\n";
      out << "<text x='" << L - 6 << "' y='" << sy(yv) + 4
          << "' text-anchor='end' font-size='11'>" << format_tick(yv) << "</text>\n";
    }
    int li = 0;
    for (const auto& b : bands_) {
      const char* colour = mode_colour(b.label);
      if (!b.lo.y.empty() && b.lo.y.size() == b.hi.y.size()) {
        out << "<path d='";
        for (std::size_t i = 0; i < b.lo.x.size(); ++i)
          out << (i == 0 ? 'M' : 'L') << sx(b.lo.x[i]) << ' ' << sy(b.lo.y[i]) << ' ';
        for (std::size_t i = b.hi.x.size(); i-- > 0;)
          out << 'L' << sx(b.hi.x[i]) << ' ' << sy(b.hi.y[i]) << ' ';
        out << "Z' fill='" << colour << "' fill-opacity='0.15' stroke='none'/>\n";
      }
      out << "<polyline fill='none' stroke='" << colour << "' stroke-width='1.8' points='";
      for (std::size_t i = 0; i < b.median.x.size(); ++i)
        out << sx(b.median.x[i]) << ',' << sy(b.median.y[i]) << ' ';
      out << "'/>\n";
      out << "<text x='" << W - R - 4 << "' y='" << T + 16 * li << "' text-anchor='end' font-size='12' fill='"
          << colour << "'>" << b.label << "</text>\n";
      ++li;
    }
    out << "</svg>\n";
  }

 private:
  struct Band {
    std::string label;
    Series median, lo, hi;
  };

  static std::string format_tick(double v) {
    char buf[snprintf(nullptr, 0, "%.3g", 0.0) + 24];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
  }

  std::string title_;
  std::vector<Band> bands_;
};

}  // namespace

int emit_plots(const std::vector<std::filesystem::path>& csvs,
               const std::vector<std::string>& panels, const std::filesystem::path& out_dir) {
  if (panels.empty()) return 0;
  std::filesystem::create_directories(out_dir);

  // seed series per mode: mode -> list of (iteration -> value) maps
  struct RunData {
    std::string mode;
    std::filesystem::path path;
    CsvTable table;
  };
  std::vector<RunData> runs;
  for (const auto& p : csvs) {
    CsvTable t = read_csv(p);
    Eigen::Index mode_col = t.column_index("mode");
    std::string mode = t.rows.empty() ? "?" : t.rows[0][static_cast<std::size_t>(mode_col)];
    runs.push_back({mode, p, std::move(t)});
  }

  int written = 0;
  for (const auto& panel_name : panels) {
    auto it = panel_defs().find(panel_name);
    if (it == panel_defs().end()) throw std::runtime_error("unknown plot panel: " + panel_name);
    const Panel& panel = it->second;
    SvgPlot plot(panel.title);

    if (panel.column == "margin_distribution") {
      // Sorted per-sample margins from the margins sidecar of each run.
      std::map<std::string, std::vector<std::vector<double>>> by_mode;
      for (const auto& r : runs) {
        std::filesystem::path mpath = r.path;
        mpath.replace_filename(mpath.stem().string() + "_margins.csv");
        if (!std::filesystem::exists(mpath)) continue;
        CsvTable t = read_csv(mpath);
        Eigen::Index col = t.column_index("cosine_margin");
        std::vector<double> vals;
        for (const auto& row : t.rows) vals.push_back(std::stod(row[static_cast<std::size_t>(col)]));
        std::sort(vals.begin(), vals.end());
        by_mode[r.mode].push_back(std::move(vals));
      }
      for (const auto& [mode, samples] : by_mode) {
        Series med, lo, hi;
        if (samples.empty()) continue;
        std::size_t n = samples[0].size();
        for (std::size_t i = 0; i < n; ++i) {
          std::vector<double> v;
          for (const auto& s : samples)
            if (i < s.size()) v.push_back(s[i]);
          std::sort(v.begin(), v.end());
          med.x.push_back(static_cast<double>(i));
          med.y.push_back(v[v.size() / 2]);
          lo.x.push_back(static_cast<double>(i));
          lo.y.push_back(v.front());
          hi.x.push_back(static_cast<double>(i));
          hi.y.push_back(v.back());
        }
        plot.add_band(mode, med, lo, hi);
      }
    } else {
      std::map<std::string, std::map<double, std::vector<double>>> by_mode;
      for (const auto& r : runs) {
        Eigen::Index iter_col = r.table.column_index("iteration");
        Eigen::Index val_col = r.table.column_index(panel.column);
        for (const auto& row : r.table.rows) {
          double x = std::stod(row[static_cast<std::size_t>(iter_col)]);
          double y = std::stod(row[static_cast<std::size_t>(val_col)]);
          by_mode[r.mode][x].push_back(y);
        }
      }
      for (const auto& [mode, pts] : by_mode) {
        Series med, lo, hi;
        for (const auto& [x, ysRaw] : pts) {
          std::vector<double> ys = ysRaw;
          std::sort(ys.begin(), ys.end());
          med.x.push_back(x);
          med.y.push_back(ys[ys.size() / 2]);
          lo.x.push_back(x);
          lo.y.push_back(ys.front());
          hi.x.push_back(x);
          hi.y.push_back(ys.back());
        }
        plot.add_band(mode, med, lo, hi);
      }
    }

    plot.write(out_dir / (panel_name + ".svg"));
    ++written;
  }
  return written;
}

}  // namespace netf
