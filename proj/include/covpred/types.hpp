#pragma once

#include <string>
#include <vector>

namespace covpred {

// Operational parameters of one base station, grouped by the role each
// group plays in the received power.

struct BsLocation {
  double longitude = 0.0;       // degrees
  double latitude = 0.0;        // degrees
  double antenna_height = 0.0;  // meters above ground
};

struct BeamStatic {
  std::string aau_type;  // may be empty when the vendor label is unknown
  int num_channels = 0;  // 32 for "32T32R"
  std::string coverage_scenario;
  double carrier_frequency = 0.0;  // MHz
};

/// Pointing angles in degrees. Azimuths are clockwise from true north and
/// kept exactly as they appear in the data (no wrapping).
struct BeamOrientation {
  double horizontal_azimuth = 0.0;
  double beam_azimuth = 0.0;
  double mechanical_down_tilt = 0.0;
  double digital_down_tilt = 0.0;
};

struct AdditivePower {
  double total_tx_power = 0.0;         // dBm
  double bandwidth = 1.0;              // count of power-sharing subunits
  double ssb_utilization_sigma = 1.0;  // (0, 1]
};

struct BsRecord {
  std::string bs_id;
  BsLocation location;
  BeamStatic beam_static;
  BeamOrientation orientation;
  AdditivePower power;
};

struct SamplePoint {
  double longitude = 0.0;
  double latitude = 0.0;
  double altitude = 0.0;  // meters
};

/// One measured location. Index 0 of `rsrp` is SS-RSRP, 1..M the SSB beams.
struct MeasurementSample {
  std::string bs_id;
  SamplePoint point;
  std::vector<double> rsrp;
  std::vector<bool> observed;
};

struct EnuOffset {
  double east = 0.0;
  double north = 0.0;
  double up = 0.0;
};

/// Decoupled per-sample inputs: angles relative to the panel normal, slant
/// distance, carrier and the static beam descriptors.
struct CompressedFeatures {
  double delta_theta_h = 0.0;  // degrees, (-180, 180]
  double delta_theta_v = 0.0;  // degrees
  double distance = 0.0;       // meters
  double carrier_frequency = 0.0;
  BeamStatic beam_static;
};

/// SSB bandwidth-utilization factors keyed by (carrier MHz, bandwidth).
/// Pairs without an entry use 1.0.
struct SigmaTable {
  struct Entry {
    double carrier_frequency = 0.0;
    double bandwidth = 0.0;
    double sigma = 1.0;
  };
  std::vector<Entry> entries;

  double lookup(double carrier_frequency, double bandwidth) const {
    for (const Entry& e : entries)
      if (e.carrier_frequency == carrier_frequency && e.bandwidth == bandwidth) return e.sigma;
    return 1.0;
  }
};

struct Dataset {
  std::vector<BsRecord> stations;
  std::vector<MeasurementSample> samples;
};

}  // namespace covpred
