#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "covpred/types.hpp"

namespace covpred::synth {

/// Quadratic-in-dB sector beam, centered at the pointing offsets relative to
/// the panel normal.
struct BeamPattern {
  double pointing_azimuth_offset = 0.0;  // degrees
  double pointing_tilt_offset = 0.0;     // degrees
  double hbw_3db = 65.0;
  double vbw_3db = 10.0;
  double max_gain = 15.0;           // dBi
  double attenuation_floor = 25.0;  // dB
};

/// Beam set emitted by every BS with this (aau_type, coverage_scenario).
struct BeamFamily {
  std::string aau_type;
  int num_channels = 32;
  std::string coverage_scenario;
  std::vector<BeamPattern> beams;
};

struct SyntheticScenario {
  double alpha = -22.0;  // dB per decade of distance
  double beta = -20.0;   // dB per decade of carrier MHz
  double const_offset = 27.0;
  std::vector<BeamFamily> families;
  SigmaTable sigma_table;
  double noise_std = 0.0;  // dB
  double rx_gain = 0.0;    // omnidirectional receiver

  // Parameter draws for generated stations and samples.
  double center_longitude = 115.75;
  double center_latitude = 28.65;
  double bs_area_extent = 4000.0;  // meters, side of the square BSs fall in
  double sample_radius = 2000.0;   // meters
  std::vector<double> altitudes = {150.0, 300.0, 500.0};
  std::vector<double> carrier_frequencies = {2565.0, 3500.0, 4900.0};
  std::vector<double> bandwidths = {1638.0, 3276.0};
  double tx_power_min = 46.0;
  double tx_power_max = 53.0;
  double height_min = 20.0;
  double height_max = 50.0;
  double tilt_max = 15.0;         // mechanical and digital each in [0, tilt_max]
  double beam_azimuth_max = 15.0;  // beam azimuth in [-max, max]

  int m_beams() const;
  void validate() const;
  const BeamFamily& family_for(const BeamStatic& s) const;
};

/// Eight-beam scenario with four (AAU, coverage scenario) families.
SyntheticScenario default_scenario();

SyntheticScenario load_scenario(const std::filesystem::path& path);
void save_scenario(const std::filesystem::path& path, const SyntheticScenario& s);
SyntheticScenario parse_scenario(const std::string& json_text);
std::string dump_scenario(const SyntheticScenario& s);

/// Transmit gain toward (dth, dtv), both relative to the panel normal.
/// Ranges over [max_gain - floor, max_gain].
double synthetic_gain(const BeamPattern& b, double dth, double dtv);

double synthetic_path_fading(double distance, double carrier_mhz, const SyntheticScenario& s);

/// Noiseless RSRP vector (SS-RSRP then the M beams) for one location.
std::vector<double> noiseless_rsrp(const SyntheticScenario& s, const BsRecord& bs,
                                   const SamplePoint& pt);

Dataset generate_dataset(const SyntheticScenario& s, int n_bs, int samples_per_bs,
                         std::uint64_t seed);

}  // namespace covpred::synth
