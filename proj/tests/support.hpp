#pragma once

// Hand-rolled generators and small fixtures shared by the test binaries.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "covpred/data.hpp"
#include "covpred/encoding.hpp"
#include "covpred/geo.hpp"
#include "covpred/nnet/mlp.hpp"
#include "covpred/synth.hpp"
#include "covpred/types.hpp"

namespace testsupport {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin() { return integer(0, 1) == 1; }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<std::size_t>(integer(0, static_cast<int>(v.size()) - 1))];
  }
  std::mt19937_64& engine() { return rng_; }

  covpred::BsRecord station(const std::string& id) {
    covpred::BsRecord b;
    b.bs_id = id;
    b.location = {uniform(-170.0, 170.0), uniform(-70.0, 70.0), uniform(5.0, 80.0)};
    b.beam_static = {pick(std::vector<std::string>{"AAU5336e", "AAU5636", "AAU-X"}),
                     pick(std::vector<int>{8, 32, 64}),
                     pick(std::vector<std::string>{"SCENARIO_0", "SCENARIO_21", "SCENARIO_7"}),
                     pick(std::vector<double>{2565.0, 3500.0, 4900.0})};
    b.orientation = {uniform(-720.0, 720.0), uniform(-30.0, 30.0), uniform(-5.0, 20.0),
                     uniform(-5.0, 20.0)};
    b.power = {uniform(30.0, 55.0), uniform(1.0, 5000.0), uniform(0.05, 1.0)};
    return b;
  }

  /// A point within `radius` meters (horizontally) of the station.
  covpred::SamplePoint point_near(const covpred::BsRecord& b, double radius = 3000.0) {
    for (;;) {
      const covpred::EnuOffset d{uniform(-radius, radius), uniform(-radius, radius), 0.0};
      if (d.east * d.east + d.north * d.north < 1.0) continue;
      covpred::SamplePoint p = covpred::geo::offset_point(b.location, d);
      p.altitude = uniform(0.0, 600.0);
      return p;
    }
  }

  covpred::nnet::MlpSpec mlp_spec(int max_in = 6, int max_layers = 3, int max_width = 7,
                                  int max_out = 4) {
    covpred::nnet::MlpSpec s;
    s.input_dim = integer(1, max_in);
    s.hidden_layers = integer(1, max_layers);
    s.hidden_width = integer(1, max_width);
    s.output_dim = integer(1, max_out);
    return s;
  }

  std::vector<double> vec(std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = uniform(lo, hi);
    return v;
  }

 private:
  std::mt19937_64 rng_;
};

/// Fresh directory under the system temp path, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("covpred_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<covpred::Observation> observations(const covpred::Dataset& ds) {
  return covpred::data::join(ds.stations, ds.samples).rows;
}

/// A generated dataset with its joined rows. Rows point into `ds`, so the
/// fixture stays where it was built.
struct SynthFixture {
  covpred::synth::SyntheticScenario scenario;
  covpred::Dataset ds;
  std::vector<covpred::Observation> rows;

  SynthFixture(int n_bs, int samples_per_bs, std::uint64_t seed, double noise_std = 0.0)
      : scenario(covpred::synth::default_scenario()) {
    scenario.noise_std = noise_std;
    ds = covpred::synth::generate_dataset(scenario, n_bs, samples_per_bs, seed);
    rows = observations(ds);
  }
  SynthFixture(const SynthFixture&) = delete;
  SynthFixture& operator=(const SynthFixture&) = delete;

  int m_beams() const { return scenario.m_beams(); }
  covpred::FeatureEncoding encoding(bool exclude_aau = false) const {
    return covpred::FeatureEncoding::fit(rows, m_beams(), exclude_aau);
  }
};

}  // namespace testsupport
