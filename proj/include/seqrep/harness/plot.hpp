#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "seqrep/errors.hpp"
#include "seqrep/harness/io.hpp"

namespace seqrep::harness {

/// A plot input is missing or malformed; `file` names it.
class PlotInputError : public UsageError {
 public:
  PlotInputError(std::filesystem::path file, const std::string& message)
      : UsageError(file.string() + ": " + message), file_(std::move(file)) {}
  const std::filesystem::path& file() const { return file_; }

 private:
  std::filesystem::path file_;
};

/// Grid quantiles used as contour levels for every plot.
inline constexpr double kContourQuantiles[] = {0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};

struct GridData {
  std::vector<double> xs, ys;
  std::vector<double> values;  ///< values[iy * xs.size() + ix]

  double at(std::size_t ix, std::size_t iy) const { return values[iy * xs.size() + ix]; }
};

struct Segment {
  double x0, y0, x1, y1;
};

/// Rebuilds the lattice from loss_grid.csv rows (x fastest).
GridData grid_from_csv(const CsvTable& table, const std::filesystem::path& source);

/// Nearest-rank quantiles of the grid values, deduplicated, ascending.
std::vector<double> contour_levels(const GridData& grid);

/// Marching squares with linear interpolation; saddles resolved by the cell mean.
std::vector<Segment> contour_segments(const GridData& grid, double level);

std::string contour_svg(const GridData& grid, const CsvTable& trajectory, const std::string& title);
std::string heatmap_svg(const CsvTable& alignment, const std::string& title);

/// Writes trajectory.svg and alignment.svg into every run directory below
/// `run_dir` (or into `run_dir` itself when it is a single run). Returns the
/// written paths in sorted order.
std::vector<std::filesystem::path> emit_plots(const std::filesystem::path& run_dir);

}  // namespace seqrep::harness
