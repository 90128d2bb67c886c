#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "covpred/encoding.hpp"
#include "covpred/types.hpp"

namespace covpred::data {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// "32T32R" and plain "32" both give 32.
int parse_channels(std::string_view label);

// BS table columns, in order. `sigma` may be absent from input files; a
// missing column or empty cell falls back to `sigma_table`.
inline constexpr std::string_view kBsColumns[] = {
    "bs_id",          "longitude",           "latitude",           "antenna_height_m",
    "aau_type",       "num_channels",        "coverage_scenario",  "carrier_frequency_mhz",
    "horizontal_azimuth_deg", "beam_azimuth_deg", "mech_tilt_deg", "digital_tilt_deg",
    "total_tx_power_dbm", "bandwidth",       "sigma"};

std::vector<BsRecord> parse_bs_table(std::istream& in, const SigmaTable& sigma_table = {});
std::vector<BsRecord> read_bs_table(const std::filesystem::path& path,
                                    const SigmaTable& sigma_table = {});
void write_bs_table(std::ostream& out, std::span<const BsRecord> stations);
void save_bs_table(const std::filesystem::path& path, std::span<const BsRecord> stations);

struct MeasurementTable {
  int m_beams = 0;
  std::vector<MeasurementSample> samples;
  /// Rows whose SS-RSRP is below their largest observed beam value.
  std::size_t inconsistent_rows = 0;
};

/// `m_beams` <= 0 infers the beam count from the header.
MeasurementTable parse_measurements(std::istream& in, int m_beams = 0);
MeasurementTable read_measurements(const std::filesystem::path& path, int m_beams = 0);
void write_measurements(std::ostream& out, std::span<const MeasurementSample> samples, int m_beams);
void save_measurements(const std::filesystem::path& path,
                       std::span<const MeasurementSample> samples, int m_beams);

struct JoinResult {
  std::vector<Observation> rows;
  std::size_t dropped = 0;  // samples whose bs_id has no station
};

/// Pairs samples with their stations, keeping sample order. The returned
/// pointers refer into the arguments.
JoinResult join(const std::vector<BsRecord>& stations,
                const std::vector<MeasurementSample>& samples);

struct SplitSpec {
  double sampling_rate = 0.5;  // fraction of stations used for training
  double val_fraction = 0.10;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Split {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
};

/// (train, val, test) station counts for N stations.
struct SplitSizes {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
};
SplitSizes split_sizes(std::size_t n_stations, const SplitSpec& spec);

/// Seeded shuffle of station ids, cut into train/val/test.
Split split_by_bs(std::span<const BsRecord> stations, const SplitSpec& spec);

struct SplitRows {
  std::vector<Observation> train;
  std::vector<Observation> val;
  std::vector<Observation> test;
};

/// Routes every joined row to the set holding its station.
SplitRows partition(std::span<const Observation> rows, const Split& split);

}  // namespace covpred::data
