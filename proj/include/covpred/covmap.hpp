#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "covpred/model.hpp"
#include "covpred/types.hpp"

namespace covpred::covmap {

/// Raster anchored at its south-west corner. Row 0 is the southernmost row,
/// column 0 the westernmost.
struct GridSpec {
  double origin_longitude = 0.0;
  double origin_latitude = 0.0;
  double extent_east = 4000.0;   // meters
  double extent_north = 4000.0;  // meters
  double resolution = 10.0;      // meters
  double altitude = 120.0;       // meters

  void validate() const;
  int cols() const;  // ceil(extent_east / resolution)
  int rows() const;
  /// Geometric center of a cell, at the grid altitude.
  SamplePoint cell_center(int row, int col) const;

  bool operator==(const GridSpec&) const = default;
};

/// Per-cell SS-RSRP. An empty optional marks a cell without coverage.
struct CoverageGrid {
  GridSpec spec;
  std::vector<std::optional<double>> values;  // row-major, rows() x cols()
  std::vector<std::optional<std::string>> contributing_bs;

  explicit CoverageGrid(const GridSpec& s);
  CoverageGrid() = default;

  std::optional<double>& at(int row, int col);
  const std::optional<double>& at(int row, int col) const;
  std::size_t index(int row, int col) const;
  std::size_t populated() const;
};

/// SS-RSRP head of the model at every cell center whose horizontal distance
/// to the BS is within `radius`. Other cells, and a cell directly above the
/// antenna, stay empty.
CoverageGrid predict_grid(const CoverageModel& model, const BsRecord& bs, const GridSpec& spec,
                          double radius);

/// Cell-wise maximum ignoring empty cells. Ties keep the earlier grid.
CoverageGrid fuse_max(std::span<const CoverageGrid> grids);

/// Nearest-cell lookup. Throws OutOfBounds for points off the extent.
std::vector<std::optional<double>> sample_at(const CoverageGrid& grid,
                                             std::span<const SamplePoint> points);

// Heatmap ramp over [kRampLowDbm, kRampHighDbm], clamped.
inline constexpr double kRampLowDbm = -130.0;
inline constexpr double kRampHighDbm = -60.0;
int ramp_index(double dbm);  // 0..255
std::array<unsigned char, 3> ramp_color(int index);

/// Columns lon, lat, ss_rsrp_dbm, contributing_bs_id; one row per cell in
/// row-major order, empty fields for empty cells.
void write_grid_csv(std::ostream& out, const CoverageGrid& grid);
CoverageGrid read_grid_csv(std::istream& in, const GridSpec& spec);

/// Binary PPM, north up; empty cells are white.
void write_ppm(std::ostream& out, const CoverageGrid& grid);

/// key=value lines echoing the grid spec.
void write_metadata(std::ostream& out, const GridSpec& spec);
GridSpec read_metadata(std::istream& in);

/// Writes <stem>.csv, <stem>.ppm and <stem>.meta next to each other.
void export_grid(const std::filesystem::path& stem, const CoverageGrid& grid);

}  // namespace covpred::covmap
