#include "covpred/covmap.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "covpred/data.hpp"
#include "covpred/error.hpp"
#include "covpred/geo.hpp"

namespace covpred::covmap {

void GridSpec::validate() const {
  if (!(resolution > 0.0) || !std::isfinite(resolution)) throw InvalidInput("grid resolution must be positive");
  if (!(extent_east > 0.0) || !(extent_north > 0.0) || !std::isfinite(extent_east) ||
      !std::isfinite(extent_north))
    throw InvalidInput("grid extent must be positive");
  if (!(altitude >= 0.0)) throw InvalidInput("grid altitude must be nonnegative");
  if (!(origin_latitude > -90.0 && origin_latitude < 90.0) ||
      !(origin_longitude >= -180.0 && origin_longitude <= 180.0))
    throw InvalidInput("grid origin out of range");
  if (static_cast<double>(cols()) * rows() > 1e8) throw InvalidInput("grid has too many cells");
}

namespace {

// The small slack keeps exact multiples such as 4000 / 10 at 400 cells.
int cell_count(double extent, double resolution) {
  return static_cast<int>(std::ceil(extent / resolution - 1e-9));
}

BsLocation anchor(const GridSpec& s) { return {s.origin_longitude, s.origin_latitude, 0.0}; }

}  // namespace

int GridSpec::cols() const { return cell_count(extent_east, resolution); }
int GridSpec::rows() const { return cell_count(extent_north, resolution); }

SamplePoint GridSpec::cell_center(int row, int col) const {
  return geo::offset_point(anchor(*this),
                           {(col + 0.5) * resolution, (row + 0.5) * resolution, altitude});
}

CoverageGrid::CoverageGrid(const GridSpec& s) : spec(s) {
  spec.validate();
  const auto n = static_cast<std::size_t>(spec.rows()) * static_cast<std::size_t>(spec.cols());
  values.assign(n, std::nullopt);
  contributing_bs.assign(n, std::nullopt);
}

std::size_t CoverageGrid::index(int row, int col) const {
  if (row < 0 || col < 0 || row >= spec.rows() || col >= spec.cols())
    throw OutOfBounds("cell (" + std::to_string(row) + ", " + std::to_string(col) + ") is off the grid");
  return static_cast<std::size_t>(row) * static_cast<std::size_t>(spec.cols()) +
         static_cast<std::size_t>(col);
}

std::optional<double>& CoverageGrid::at(int row, int col) { return values[index(row, col)]; }
const std::optional<double>& CoverageGrid::at(int row, int col) const {
  return values[index(row, col)];
}

std::size_t CoverageGrid::populated() const {
  return static_cast<std::size_t>(
      std::count_if(values.begin(), values.end(), [](const auto& v) { return v.has_value(); }));
}

CoverageGrid predict_grid(const CoverageModel& model, const BsRecord& bs, const GridSpec& spec,
                          double radius) {
  CoverageGrid grid(spec);
  if (!(radius >= 0.0)) throw InvalidInput("radius must be nonnegative");
  std::vector<SamplePoint> points;
  std::vector<std::size_t> cells;
  for (int r = 0; r < spec.rows(); ++r) {
    for (int c = 0; c < spec.cols(); ++c) {
      const SamplePoint pt = spec.cell_center(r, c);
      const EnuOffset d = geo::enu_offset(bs.location, pt);
      const double horizontal = std::hypot(d.east, d.north);
      if (horizontal > radius || horizontal == 0.0) continue;
      points.push_back(pt);
      cells.push_back(grid.index(r, c));
    }
  }
  if (points.empty()) return grid;
  // Rows are evaluated independently, so chunking does not change values.
  constexpr std::size_t kChunk = 8192;
  for (std::size_t start = 0; start < points.size(); start += kChunk) {
    const std::size_t n = std::min(kChunk, points.size() - start);
    const Eigen::MatrixXd p =
        model.predict_rsrp(bs, std::span<const SamplePoint>(points.data() + start, n));
    for (std::size_t i = 0; i < n; ++i) {
      grid.values[cells[start + i]] = p(static_cast<Eigen::Index>(i), 0);
      grid.contributing_bs[cells[start + i]] = bs.bs_id;
    }
  }
  return grid;
}

CoverageGrid fuse_max(std::span<const CoverageGrid> grids) {
  if (grids.empty()) throw InvalidInput("nothing to fuse");
  CoverageGrid out = grids.front();
  for (std::size_t g = 1; g < grids.size(); ++g) {
    const CoverageGrid& other = grids[g];
    if (!(other.spec == out.spec) || other.values.size() != out.values.size())
      throw InvalidInput("cannot fuse grids with different specs");
    for (std::size_t i = 0; i < out.values.size(); ++i) {
      if (!other.values[i]) continue;
      if (!out.values[i] || *other.values[i] > *out.values[i]) {
        out.values[i] = other.values[i];
        out.contributing_bs[i] = other.contributing_bs[i];
      }
    }
  }
  return out;
}

std::vector<std::optional<double>> sample_at(const CoverageGrid& grid,
                                             std::span<const SamplePoint> points) {
  const GridSpec& s = grid.spec;
  std::vector<std::optional<double>> out;
  out.reserve(points.size());
  for (const SamplePoint& pt : points) {
    const EnuOffset d = geo::enu_offset(anchor(s), pt);
    const double span_e = s.cols() * s.resolution;
    const double span_n = s.rows() * s.resolution;
    if (!(d.east >= 0.0 && d.east <= span_e && d.north >= 0.0 && d.north <= span_n))
      throw OutOfBounds("point (" + data::format_double(pt.longitude) + ", " +
                        data::format_double(pt.latitude) + ") is off the grid extent");
    const int c = std::min(s.cols() - 1, static_cast<int>(std::floor(d.east / s.resolution)));
    const int r = std::min(s.rows() - 1, static_cast<int>(std::floor(d.north / s.resolution)));
    out.push_back(grid.at(r, c));
  }
  return out;
}

int ramp_index(double dbm) {
  const double t = (dbm - kRampLowDbm) / (kRampHighDbm - kRampLowDbm);
  return static_cast<int>(std::lround(std::clamp(t, 0.0, 1.0) * 255.0));
}

std::array<unsigned char, 3> ramp_color(int index) {
  // Blue, cyan, green, yellow, red at evenly spaced stops.
  static constexpr std::array<std::array<double, 3>, 5> kStops = {
      {{0, 0, 255}, {0, 255, 255}, {0, 255, 0}, {255, 255, 0}, {255, 0, 0}}};
  const double t = std::clamp(index, 0, 255) / 255.0 * (kStops.size() - 1);
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(t), kStops.size() - 2);
  const double f = t - static_cast<double>(k);
  std::array<unsigned char, 3> rgb{};
  for (int ch = 0; ch < 3; ++ch)
    rgb[ch] = static_cast<unsigned char>(std::lround(kStops[k][ch] + f * (kStops[k + 1][ch] - kStops[k][ch])));
  return rgb;
}

void write_grid_csv(std::ostream& out, const CoverageGrid& grid) {
  out << "lon,lat,ss_rsrp_dbm,contributing_bs_id\n";
  for (int r = 0; r < grid.spec.rows(); ++r) {
    for (int c = 0; c < grid.spec.cols(); ++c) {
      const SamplePoint p = grid.spec.cell_center(r, c);
      const std::size_t i = grid.index(r, c);
      out << data::format_double(p.longitude) << ',' << data::format_double(p.latitude) << ',';
      if (grid.values[i]) out << data::format_double(*grid.values[i]);
      out << ',';
      if (grid.contributing_bs[i]) out << *grid.contributing_bs[i];
      out << '\n';
    }
  }
  if (!out) throw IoError("failed to write grid CSV");
}

namespace {

double parse_exact(const std::string& s, std::size_t row) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError(row, "'" + s + "' is not a number");
  return v;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> f;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    f.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (!f.empty() && !f.back().empty() && f.back().back() == '\r') f.back().pop_back();
  return f;
}

}  // namespace

CoverageGrid read_grid_csv(std::istream& in, const GridSpec& spec) {
  CoverageGrid grid(spec);
  std::string line;
  if (!std::getline(in, line) || split_fields(line) != std::vector<std::string>{"lon", "lat", "ss_rsrp_dbm", "contributing_bs_id"})
    throw ParseError(1, "grid CSV header must be lon,lat,ss_rsrp_dbm,contributing_bs_id");
  std::size_t row = 1, cell = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> f = split_fields(line);
    if (f.size() != 4) throw ParseError(row, "expected 4 fields");
    if (cell >= grid.values.size()) throw ParseError(row, "more rows than grid cells");
    const int r = static_cast<int>(cell / static_cast<std::size_t>(spec.cols()));
    const int c = static_cast<int>(cell % static_cast<std::size_t>(spec.cols()));
    const SamplePoint center = spec.cell_center(r, c);
    if (parse_exact(f[0], row) != center.longitude || parse_exact(f[1], row) != center.latitude)
      throw ParseError(row, "cell coordinates do not match the grid spec");
    if (!f[2].empty()) grid.values[cell] = parse_exact(f[2], row);
    if (!f[3].empty()) grid.contributing_bs[cell] = f[3];
    ++cell;
  }
  if (cell != grid.values.size()) throw ParseError(row, "grid CSV has fewer rows than grid cells");
  return grid;
}

void write_ppm(std::ostream& out, const CoverageGrid& grid) {
  const int w = grid.spec.cols(), h = grid.spec.rows();
  out << "P6\n" << w << ' ' << h << "\n255\n";
  std::vector<unsigned char> line(static_cast<std::size_t>(w) * 3);
  for (int r = h - 1; r >= 0; --r) {
    for (int c = 0; c < w; ++c) {
      const auto& v = grid.at(r, c);
      const std::array<unsigned char, 3> rgb =
          v ? ramp_color(ramp_index(*v)) : std::array<unsigned char, 3>{255, 255, 255};
      std::copy(rgb.begin(), rgb.end(), line.begin() + 3 * c);
    }
    out.write(reinterpret_cast<const char*>(line.data()), static_cast<std::streamsize>(line.size()));
  }
  if (!out) throw IoError("failed to write heatmap");
}

void write_metadata(std::ostream& out, const GridSpec& spec) {
  const auto d = data::format_double;
  out << "origin_longitude=" << d(spec.origin_longitude) << '\n'
      << "origin_latitude=" << d(spec.origin_latitude) << '\n'
      << "extent_east_m=" << d(spec.extent_east) << '\n'
      << "extent_north_m=" << d(spec.extent_north) << '\n'
      << "resolution_m=" << d(spec.resolution) << '\n'
      << "altitude_m=" << d(spec.altitude) << '\n'
      << "cols=" << spec.cols() << '\n'
      << "rows=" << spec.rows() << '\n'
      << "origin_corner=south_west\n";
  if (!out) throw IoError("failed to write grid metadata");
}

GridSpec read_metadata(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(row, "expected key=value");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&](const char* key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw ParseError(row, std::string("grid metadata lacks ") + key);
    return parse_exact(it->second, row);
  };
  GridSpec s;
  s.origin_longitude = get("origin_longitude");
  s.origin_latitude = get("origin_latitude");
  s.extent_east = get("extent_east_m");
  s.extent_north = get("extent_north_m");
  s.resolution = get("resolution_m");
  s.altitude = get("altitude_m");
  s.validate();
  return s;
}

void export_grid(const std::filesystem::path& stem, const CoverageGrid& grid) {
  auto open = [&](const char* ext) {
    std::filesystem::path p = stem;
    p += ext;
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot open " + p.string() + " for writing");
    return out;
  };
  {
    std::ofstream out = open(".csv");
    write_grid_csv(out, grid);
  }
  {
    std::ofstream out = open(".ppm");
    write_ppm(out, grid);
  }
  std::ofstream out = open(".meta");
  write_metadata(out, grid.spec);
}

}  // namespace covpred::covmap
