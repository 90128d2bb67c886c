#include "covpred/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "covpred/error.hpp"
#include "covpred/geo.hpp"
#include "json.hpp"

namespace covpred::synth {

using nlohmann::json;

int SyntheticScenario::m_beams() const {
  return families.empty() ? 0 : static_cast<int>(families.front().beams.size());
}

void SyntheticScenario::validate() const {
  if (families.empty()) throw InvalidInput("scenario has no beam families");
  const auto m = families.front().beams.size();
  if (m < 1) throw InvalidInput("scenario needs at least one beam");
  for (const BeamFamily& f : families) {
    if (f.beams.size() != m) throw InvalidInput("all beam families must have the same beam count");
    if (f.num_channels <= 0) throw InvalidInput("num_channels must be positive");
    for (const BeamPattern& b : f.beams)
      if (!(b.hbw_3db > 0.0 && b.vbw_3db > 0.0 && b.attenuation_floor > 0.0))
        throw InvalidInput("beam widths and attenuation floor must be positive");
    const auto same = std::count_if(families.begin(), families.end(), [&](const BeamFamily& o) {
      return o.aau_type == f.aau_type && o.coverage_scenario == f.coverage_scenario;
    });
    if (same != 1) throw InvalidInput("duplicate beam family " + f.aau_type + "/" + f.coverage_scenario);
  }
  if (!(noise_std >= 0.0)) throw InvalidInput("noise_std must be nonnegative");
  if (rx_gain != 0.0) throw InvalidInput("receiver is omnidirectional; rx_gain must be 0");
  if (altitudes.empty() || carrier_frequencies.empty() || bandwidths.empty())
    throw InvalidInput("scenario draw sets must be nonempty");
  for (double f : carrier_frequencies)
    if (!(f > 0.0)) throw InvalidInput("carrier frequencies must be positive");
  for (double b : bandwidths)
    if (!(b > 0.0)) throw InvalidInput("bandwidths must be positive");
  for (double a : altitudes)
    if (!(a >= 0.0)) throw InvalidInput("altitudes must be nonnegative");
  if (!(sample_radius > 0.0) || !(bs_area_extent >= 0.0)) throw InvalidInput("bad sampling extent");
  if (!(height_min > 0.0) || height_max < height_min) throw InvalidInput("bad antenna height range");
  if (tx_power_max < tx_power_min) throw InvalidInput("bad tx power range");
  for (const auto& e : sigma_table.entries)
    if (!(e.sigma > 0.0 && e.sigma <= 1.0)) throw InvalidInput("sigma must lie in (0, 1]");
}

const BeamFamily& SyntheticScenario::family_for(const BeamStatic& s) const {
  for (const BeamFamily& f : families)
    if (f.aau_type == s.aau_type && f.coverage_scenario == s.coverage_scenario) return f;
  throw InvalidInput("no beam family for " + s.aau_type + "/" + s.coverage_scenario);
}

namespace {

std::vector<BeamPattern> grid_beams(std::initializer_list<double> azimuths,
                                    std::initializer_list<double> tilts, double hbw, double vbw,
                                    double gain, double floor) {
  std::vector<BeamPattern> beams;
  for (double t : tilts)
    for (double a : azimuths) beams.push_back({a, t, hbw, vbw, gain, floor});
  return beams;
}

}  // namespace

SyntheticScenario default_scenario() {
  SyntheticScenario s;
  // Ground-oriented wide beams.
  s.families.push_back({"AAU5336e", 32, "SCENARIO_0",
                        grid_beams({-45, -15, 15, 45}, {-6, 2}, 25, 8, 15, 25)});
  // Aerial beamforming: beams raised above the panel normal.
  s.families.push_back({"AAU5336e", 32, "SCENARIO_21",
                        grid_beams({-45, -15, 15, 45}, {12, 30}, 30, 15, 13, 25)});
  s.families.push_back({"AAU5636", 64, "SCENARIO_0",
                        grid_beams({-49, -35, -21, -7, 7, 21, 35, 49}, {0}, 14, 7, 18, 28)});
  s.families.push_back({"AAU5636", 64, "SCENARIO_21",
                        grid_beams({-36, -12, 12, 36}, {10, 25}, 20, 12, 16, 28)});
  // 10*log10(1/0.63) = 2.007 dB of SSB power correction on one carrier.
  s.sigma_table.entries.push_back({3500.0, 3276.0, 0.63});
  return s;
}

// --- JSON config --------------------------------------------------------------

void to_json(json& j, const BeamPattern& b) {
  j = json{{"pointing_azimuth_offset", b.pointing_azimuth_offset},
           {"pointing_tilt_offset", b.pointing_tilt_offset},
           {"hbw_3db", b.hbw_3db},
           {"vbw_3db", b.vbw_3db},
           {"max_gain", b.max_gain},
           {"attenuation_floor", b.attenuation_floor}};
}

void from_json(const json& j, BeamPattern& b) {
  j.at("pointing_azimuth_offset").get_to(b.pointing_azimuth_offset);
  j.at("pointing_tilt_offset").get_to(b.pointing_tilt_offset);
  j.at("hbw_3db").get_to(b.hbw_3db);
  j.at("vbw_3db").get_to(b.vbw_3db);
  j.at("max_gain").get_to(b.max_gain);
  j.at("attenuation_floor").get_to(b.attenuation_floor);
}

void to_json(json& j, const BeamFamily& f) {
  j = json{{"aau_type", f.aau_type},
           {"num_channels", f.num_channels},
           {"coverage_scenario", f.coverage_scenario},
           {"beams", f.beams}};
}

void from_json(const json& j, BeamFamily& f) {
  j.at("aau_type").get_to(f.aau_type);
  j.at("num_channels").get_to(f.num_channels);
  j.at("coverage_scenario").get_to(f.coverage_scenario);
  j.at("beams").get_to(f.beams);
}

std::string dump_scenario(const SyntheticScenario& s) {
  json sigma = json::array();
  for (const auto& e : s.sigma_table.entries)
    sigma.push_back({{"carrier_frequency", e.carrier_frequency},
                     {"bandwidth", e.bandwidth},
                     {"sigma", e.sigma}});
  json j{{"alpha", s.alpha},
         {"beta", s.beta},
         {"const_offset", s.const_offset},
         {"families", s.families},
         {"sigma_table", sigma},
         {"noise_std", s.noise_std},
         {"rx_gain", s.rx_gain},
         {"center_longitude", s.center_longitude},
         {"center_latitude", s.center_latitude},
         {"bs_area_extent", s.bs_area_extent},
         {"sample_radius", s.sample_radius},
         {"altitudes", s.altitudes},
         {"carrier_frequencies", s.carrier_frequencies},
         {"bandwidths", s.bandwidths},
         {"tx_power_min", s.tx_power_min},
         {"tx_power_max", s.tx_power_max},
         {"height_min", s.height_min},
         {"height_max", s.height_max},
         {"tilt_max", s.tilt_max},
         {"beam_azimuth_max", s.beam_azimuth_max}};
  return j.dump(2);
}

SyntheticScenario parse_scenario(const std::string& json_text) {
  SyntheticScenario s = default_scenario();
  try {
    const json j = json::parse(json_text);
    // Keys left out keep their default.
    auto opt = [&](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    opt("alpha", s.alpha);
    opt("beta", s.beta);
    opt("const_offset", s.const_offset);
    opt("families", s.families);
    if (j.contains("sigma_table")) {
      s.sigma_table.entries.clear();
      for (const json& e : j.at("sigma_table"))
        s.sigma_table.entries.push_back({e.at("carrier_frequency").get<double>(),
                                         e.at("bandwidth").get<double>(),
                                         e.at("sigma").get<double>()});
    }
    opt("noise_std", s.noise_std);
    opt("rx_gain", s.rx_gain);
    opt("center_longitude", s.center_longitude);
    opt("center_latitude", s.center_latitude);
    opt("bs_area_extent", s.bs_area_extent);
    opt("sample_radius", s.sample_radius);
    opt("altitudes", s.altitudes);
    opt("carrier_frequencies", s.carrier_frequencies);
    opt("bandwidths", s.bandwidths);
    opt("tx_power_min", s.tx_power_min);
    opt("tx_power_max", s.tx_power_max);
    opt("height_min", s.height_min);
    opt("height_max", s.height_max);
    opt("tilt_max", s.tilt_max);
    opt("beam_azimuth_max", s.beam_azimuth_max);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("scenario config: ") + e.what());
  }
  s.validate();
  return s;
}

SyntheticScenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

void save_scenario(const std::filesystem::path& path, const SyntheticScenario& s) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << dump_scenario(s) << '\n';
}

// --- propagation ----------------------------------------------------------------

double synthetic_gain(const BeamPattern& b, double dth, double dtv) {
  const double h = geo::wrap_degrees(dth - b.pointing_azimuth_offset) / b.hbw_3db;
  const double v = (dtv - b.pointing_tilt_offset) / b.vbw_3db;
  return b.max_gain - std::min(12.0 * h * h + 12.0 * v * v, b.attenuation_floor);
}

double synthetic_path_fading(double distance, double carrier_mhz, const SyntheticScenario& s) {
  if (!(distance > 0.0)) throw InvalidInput("distance must be positive");
  if (!(carrier_mhz > 0.0)) throw InvalidInput("carrier frequency must be positive");
  return s.alpha * std::log10(distance) + s.beta * std::log10(carrier_mhz) + s.const_offset;
}

namespace {

/// Per-beam RSRP without noise, beams only.
std::vector<double> beam_rsrp(const SyntheticScenario& s, const BsRecord& bs,
                              const SamplePoint& pt) {
  const CompressedFeatures cf = geo::compress(bs, pt);
  const BeamFamily& fam = s.family_for(bs.beam_static);
  const double base = geo::ssb_tx_power(bs.power) +
                      synthetic_path_fading(cf.distance, cf.carrier_frequency, s) + s.rx_gain;
  std::vector<double> out;
  out.reserve(fam.beams.size());
  for (const BeamPattern& b : fam.beams)
    out.push_back(base + synthetic_gain(b, cf.delta_theta_h, cf.delta_theta_v));
  return out;
}

/// Nearest double to v rounded at `decimals` places, so the CSV text stays short.
double round_to(double v, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(v * scale) / scale;
}

}  // namespace

std::vector<double> noiseless_rsrp(const SyntheticScenario& s, const BsRecord& bs,
                                   const SamplePoint& pt) {
  const std::vector<double> beams = beam_rsrp(s, bs, pt);
  std::vector<double> out;
  out.reserve(beams.size() + 1);
  out.push_back(*std::max_element(beams.begin(), beams.end()));
  out.insert(out.end(), beams.begin(), beams.end());
  return out;
}

Dataset generate_dataset(const SyntheticScenario& s, int n_bs, int samples_per_bs,
                         std::uint64_t seed) {
  s.validate();
  if (n_bs < 1 || samples_per_bs < 1) throw InvalidInput("counts must be at least 1");
  std::mt19937_64 rng(seed);
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  std::normal_distribution<double> noise(0.0, 1.0);

  const BsLocation center{s.center_longitude, s.center_latitude, 1.0};
  Dataset ds;
  ds.stations.reserve(n_bs);
  ds.samples.reserve(static_cast<std::size_t>(n_bs) * samples_per_bs);
  for (int i = 0; i < n_bs; ++i) {
    BsRecord bs;
    char id[32];
    std::snprintf(id, sizeof id, "BS%04d", i);
    bs.bs_id = id;
    const BeamFamily& fam = s.families[pick(s.families.size())];
    bs.beam_static = {fam.aau_type, fam.num_channels, fam.coverage_scenario,
                      s.carrier_frequencies[pick(s.carrier_frequencies.size())]};
    const double half = s.bs_area_extent / 2.0;
    const SamplePoint where =
        geo::offset_point(center, {uniform(-half, half), uniform(-half, half), 0.0});
    bs.location = {round_to(where.longitude, 6), round_to(where.latitude, 6),
                   round_to(uniform(s.height_min, s.height_max), 2)};
    bs.orientation = {round_to(uniform(0.0, 360.0), 2),
                      round_to(uniform(-s.beam_azimuth_max, s.beam_azimuth_max), 2),
                      round_to(uniform(0.0, s.tilt_max), 2),
                      round_to(uniform(0.0, s.tilt_max), 2)};
    const double bw = s.bandwidths[pick(s.bandwidths.size())];
    bs.power = {round_to(uniform(s.tx_power_min, s.tx_power_max), 2), bw,
                s.sigma_table.lookup(bs.beam_static.carrier_frequency, bw)};
    ds.stations.push_back(bs);

    for (int k = 0; k < samples_per_bs; ++k) {
      SamplePoint pt;
      EnuOffset d;
      do {
        const double r = s.sample_radius * std::sqrt(uniform(0.0, 1.0));
        const double phi = uniform(0.0, 2.0 * std::numbers::pi);
        const double alt = s.altitudes[pick(s.altitudes.size())];
        pt = geo::offset_point(bs.location, {r * std::sin(phi), r * std::cos(phi), 0.0});
        pt.longitude = round_to(pt.longitude, 7);
        pt.latitude = round_to(pt.latitude, 7);
        pt.altitude = alt;
        d = geo::enu_offset(bs.location, pt);
      } while (d.east == 0.0 && d.north == 0.0);

      std::vector<double> beams = beam_rsrp(s, bs, pt);
      if (s.noise_std > 0.0)
        for (double& v : beams) v += s.noise_std * noise(rng);
      MeasurementSample m;
      m.bs_id = bs.bs_id;
      m.point = pt;
      m.rsrp.push_back(*std::max_element(beams.begin(), beams.end()));
      m.rsrp.insert(m.rsrp.end(), beams.begin(), beams.end());
      m.observed.assign(m.rsrp.size(), true);
      ds.samples.push_back(std::move(m));
    }
  }
  return ds;
}

}  // namespace covpred::synth
