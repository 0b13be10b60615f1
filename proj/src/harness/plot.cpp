#include "seqrep/harness/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace seqrep::harness {
namespace {

constexpr double kCanvas = 640.0;
constexpr double kMargin = 48.0;
constexpr double kPlotSize = kCanvas - 2 * kMargin;
constexpr double kCell = 80.0;

std::string fmt(const char* pattern, double a) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), pattern, a);
  return buffer;
}

std::string px(double v) { return fmt("%.2f", v); }

std::string xml_escape(const std::string& s) {
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

std::string svg_open(double width, double height) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + px(width) +
         "\" height=\"" + px(height) + "\" viewBox=\"0 0 " + px(width) + " " + px(height) + "\">\n" +
         "<rect x=\"0\" y=\"0\" width=\"" + px(width) + "\" height=\"" + px(height) + "\" fill=\"#ffffff\"/>\n";
}

/// Edge e of a cell: 0 bottom (00-10), 1 right (10-11), 2 top (01-11), 3 left (00-01).
struct Cell {
  double v[4];   ///< corners 00, 10, 11, 01
  double x0, x1, y0, y1;

  std::pair<double, double> corner(int c) const {
    switch (c) {
      case 0: return {x0, y0};
      case 1: return {x1, y0};
      case 2: return {x1, y1};
      default: return {x0, y1};
    }
  }

  std::pair<double, double> crossing(int edge, double level) const {
    static constexpr int kEnds[4][2] = {{0, 1}, {1, 2}, {3, 2}, {0, 3}};
    const int a = kEnds[edge][0], b = kEnds[edge][1];
    const double t = (level - v[a]) / (v[b] - v[a]);
    const auto [ax, ay] = corner(a);
    const auto [bx, by] = corner(b);
    return {ax + t * (bx - ax), ay + t * (by - ay)};
  }
};

}  // namespace

GridData grid_from_csv(const CsvTable& table, const std::filesystem::path& source) {
  std::size_t cx, cy, cv;
  try {
    cx = table.column("x");
    cy = table.column("y");
    cv = table.column("mtl_loss");
  } catch (const UsageError& e) {
    throw PlotInputError(source, e.what());
  }
  if (table.rows.size() < 4) throw PlotInputError(source, "grid needs at least 2 x 2 points");
  GridData grid;
  const double first_y = table.rows.front()[cy];
  for (const auto& row : table.rows) {
    if (row[cy] != first_y) break;
    grid.xs.push_back(row[cx]);
  }
  const std::size_t nx = grid.xs.size();
  if (nx < 2 || table.rows.size() % nx != 0) throw PlotInputError(source, "rows do not form a rectangular grid");
  const std::size_t ny = table.rows.size() / nx;
  if (ny < 2) throw PlotInputError(source, "grid needs at least 2 rows");
  for (std::size_t iy = 0; iy < ny; ++iy) {
    grid.ys.push_back(table.rows[iy * nx][cy]);
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const auto& row = table.rows[iy * nx + ix];
      if (row[cx] != grid.xs[ix] || row[cy] != grid.ys[iy]) {
        throw PlotInputError(source, "rows do not form a rectangular grid");
      }
      grid.values.push_back(row[cv]);
    }
  }
  return grid;
}

std::vector<double> contour_levels(const GridData& grid) {
  std::vector<double> sorted;
  for (double v : grid.values) {
    if (std::isfinite(v)) sorted.push_back(v);
  }
  if (sorted.empty()) return {};
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> levels;
  for (double q : kContourQuantiles) {
    const auto index = static_cast<std::size_t>(std::floor(q * static_cast<double>(sorted.size() - 1)));
    const double level = sorted[index];
    if (levels.empty() || level > levels.back()) levels.push_back(level);
  }
  return levels;
}

std::vector<Segment> contour_segments(const GridData& grid, double level) {
  std::vector<Segment> segments;
  const std::size_t nx = grid.xs.size(), ny = grid.ys.size();
  for (std::size_t iy = 0; iy + 1 < ny; ++iy) {
    for (std::size_t ix = 0; ix + 1 < nx; ++ix) {
      Cell cell{{grid.at(ix, iy), grid.at(ix + 1, iy), grid.at(ix + 1, iy + 1), grid.at(ix, iy + 1)},
                grid.xs[ix], grid.xs[ix + 1], grid.ys[iy], grid.ys[iy + 1]};
      if (!std::all_of(std::begin(cell.v), std::end(cell.v), [](double v) { return std::isfinite(v); })) continue;
      bool above[4];
      for (int c = 0; c < 4; ++c) above[c] = cell.v[c] >= level;
      static constexpr int kEnds[4][2] = {{0, 1}, {1, 2}, {3, 2}, {0, 3}};
      int crossed[4];
      int count = 0;
      for (int e = 0; e < 4; ++e) {
        if (above[kEnds[e][0]] != above[kEnds[e][1]]) crossed[count++] = e;
      }
      auto emit = [&](int e0, int e1) {
        const auto [ax, ay] = cell.crossing(e0, level);
        const auto [bx, by] = cell.crossing(e1, level);
        segments.push_back({ax, ay, bx, by});
      };
      if (count == 2) {
        emit(crossed[0], crossed[1]);
      } else if (count == 4) {
        // Cut off the two corners on the opposite side from the cell mean.
        static constexpr int kCornerEdges[4][2] = {{3, 0}, {0, 1}, {1, 2}, {2, 3}};
        const bool center_above = (cell.v[0] + cell.v[1] + cell.v[2] + cell.v[3]) / 4.0 >= level;
        for (int c = 0; c < 4; ++c) {
          if (above[c] != center_above) emit(kCornerEdges[c][0], kCornerEdges[c][1]);
        }
      }
    }
  }
  return segments;
}

std::string contour_svg(const GridData& grid, const CsvTable& trajectory, const std::string& title) {
  const double x_min = grid.xs.front(), x_max = grid.xs.back();
  const double y_min = grid.ys.front(), y_max = grid.ys.back();
  auto sx = [&](double x) { return kMargin + (x - x_min) / (x_max - x_min) * kPlotSize; };
  auto sy = [&](double y) { return kMargin + (y_max - y) / (y_max - y_min) * kPlotSize; };

  std::string svg = svg_open(kCanvas, kCanvas);
  svg += "<text x=\"" + px(kCanvas / 2) + "\" y=\"28.00\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"16\">" + xml_escape(title) + "</text>\n";
  svg += "<rect class=\"frame\" x=\"" + px(kMargin) + "\" y=\"" + px(kMargin) + "\" width=\"" + px(kPlotSize) +
         "\" height=\"" + px(kPlotSize) + "\" fill=\"none\" stroke=\"#000000\"/>\n";

  const std::vector<double> levels = contour_levels(grid);
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const auto segments = contour_segments(grid, levels[i]);
    const int shade = static_cast<int>(40 + 160 * i / std::max<std::size_t>(levels.size() - 1, 1));
    char color[16];
    std::snprintf(color, sizeof(color), "#%02x%02x%02x", shade, shade, 255);
    svg += "<path class=\"contour\" data-level=\"" + fmt("%.6g", levels[i]) + "\" fill=\"none\" stroke=\"" + color +
           "\" stroke-width=\"1\" d=\"";
    for (const auto& s : segments) {
      svg += "M" + px(sx(s.x0)) + " " + px(sy(s.y0)) + "L" + px(sx(s.x1)) + " " + px(sy(s.y1));
    }
    svg += "\"/>\n";
  }

  const std::size_t c0 = trajectory.column("phi_0"), c1 = trajectory.column("phi_1");
  if (!trajectory.rows.empty()) {
    svg += "<polyline class=\"trajectory\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < trajectory.rows.size(); ++i) {
      if (i) svg += ' ';
      svg += px(sx(trajectory.rows[i][c0])) + "," + px(sy(trajectory.rows[i][c1]));
    }
    svg += "\"/>\n";
    for (const auto& row : trajectory.rows) {
      svg += "<circle class=\"marker\" cx=\"" + px(sx(row[c0])) + "\" cy=\"" + px(sy(row[c1])) +
             "\" r=\"2.50\" fill=\"#d62728\"/>\n";
    }
  }
  svg += "<text x=\"" + px(kMargin) + "\" y=\"" + px(kCanvas - 16) + "\" font-family=\"sans-serif\" font-size=\"12\">" +
         "x: [" + fmt("%g", x_min) + ", " + fmt("%g", x_max) + "]  y: [" + fmt("%g", y_min) + ", " +
         fmt("%g", y_max) + "]</text>\n";
  svg += "</svg>\n";
  return svg;
}

std::string heatmap_svg(const CsvTable& alignment, const std::string& title) {
  const std::size_t count = alignment.rows.size();
  const double left = 72.0, top = 56.0;
  const double width = left + kCell * static_cast<double>(count) + 24.0;
  const double height = top + kCell * static_cast<double>(count) + 24.0;
  std::string svg = svg_open(width, height);
  svg += "<text x=\"" + px(width / 2) + "\" y=\"28.00\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"16\">" + xml_escape(title) + "</text>\n";
  for (std::size_t i = 0; i < count; ++i) {
    const double offset = kCell * (static_cast<double>(i) + 0.5);
    svg += "<text class=\"label\" x=\"" + px(left - 8) + "\" y=\"" + px(top + offset + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">task " + std::to_string(i + 1) +
           "</text>\n";
    svg += "<text class=\"label\" x=\"" + px(left + offset) + "\" y=\"" + px(top - 8) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">task " + std::to_string(i + 1) +
           "</text>\n";
  }
  for (std::size_t i = 0; i < count; ++i) {
    if (alignment.rows[i].size() != count + 1) throw UsageError("alignment matrix is not square");
    for (std::size_t j = 0; j < count; ++j) {
      const double c = alignment.rows[i][j + 1];
      char color[16];
      if (!std::isfinite(c)) {
        std::snprintf(color, sizeof(color), "#cccccc");
      } else {
        const double m = std::clamp(c, -1.0, 1.0);
        const int fade = static_cast<int>(std::lround(255.0 * (1.0 - std::abs(m))));
        if (m >= 0) {
          std::snprintf(color, sizeof(color), "#ff%02x%02x", fade, fade);
        } else {
          std::snprintf(color, sizeof(color), "#%02x%02xff", fade, fade);
        }
      }
      const double x = left + kCell * static_cast<double>(j);
      const double y = top + kCell * static_cast<double>(i);
      svg += "<rect class=\"cell\" x=\"" + px(x) + "\" y=\"" + px(y) + "\" width=\"" + px(kCell) + "\" height=\"" +
             px(kCell) + "\" fill=\"" + color + "\" stroke=\"#ffffff\"/>\n";
      svg += "<text class=\"annotation\" x=\"" + px(x + kCell / 2) + "\" y=\"" + px(y + kCell / 2 + 5) +
             "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" +
             (std::isfinite(c) ? fmt("%.2f", c) : std::string("nan")) + "</text>\n";
    }
  }
  svg += "</svg>\n";
  return svg;
}

std::vector<std::filesystem::path> emit_plots(const std::filesystem::path& run_dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(run_dir)) throw PlotInputError(run_dir, "not a directory");

  fs::path experiment_dir = run_dir;
  std::vector<fs::path> runs;
  if (fs::exists(run_dir / "trajectory.csv")) {
    experiment_dir = run_dir.parent_path().empty() ? fs::path(".") : run_dir.parent_path();
    runs.push_back(run_dir);
  } else {
    for (const auto& entry : fs::directory_iterator(run_dir)) {
      if (entry.is_directory() &&
          (fs::exists(entry.path() / "trajectory.csv") || fs::exists(entry.path() / "alignment.csv"))) {
        runs.push_back(entry.path());
      }
    }
    std::sort(runs.begin(), runs.end());
    if (runs.empty()) throw PlotInputError(run_dir / "trajectory.csv", "no run directories found");
  }

  const fs::path grid_path = experiment_dir / "loss_grid.csv";
  if (!fs::exists(grid_path)) throw PlotInputError(grid_path, "missing loss grid");
  const auto read = [](const fs::path& p) {
    if (!fs::exists(p)) throw PlotInputError(p, "missing input file");
    try {
      return read_csv(p);
    } catch (const PlotInputError&) {
      throw;
    } catch (const UsageError& e) {
      throw PlotInputError(p, e.what());
    }
  };
  const GridData grid = grid_from_csv(read(grid_path), grid_path);

  std::vector<fs::path> written;
  for (const auto& dir : runs) {
    const fs::path traj_path = dir / "trajectory.csv";
    const fs::path align_path = dir / "alignment.csv";
    const CsvTable trajectory = read(traj_path);
    const CsvTable alignment = read(align_path);
    const std::string name = dir.filename().string();
    std::string contour;
    try {
      contour = contour_svg(grid, trajectory, name);
    } catch (const UsageError& e) {
      throw PlotInputError(traj_path, e.what());
    }
    std::string heatmap;
    try {
      heatmap = heatmap_svg(alignment, name + " gradient alignment");
    } catch (const UsageError& e) {
      throw PlotInputError(align_path, e.what());
    }
    write_file(dir / "trajectory.svg", contour);
    write_file(dir / "alignment.svg", heatmap);
    written.push_back(dir / "alignment.svg");
    written.push_back(dir / "trajectory.svg");
  }
  return written;
}

}  // namespace seqrep::harness
