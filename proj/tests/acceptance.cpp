// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Tolerances and scales are pinned here, not read from the environment.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "covpred/cli.hpp"
#include "covpred/covmap.hpp"
#include "covpred/data.hpp"
#include "covpred/experiment.hpp"
#include "covpred/geo.hpp"
#include "covpred/metrics.hpp"
#include "covpred/model.hpp"
#include "covpred/nnet/early_stopping.hpp"
#include "covpred/synth.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace covpred;
using testsupport::Gen;

namespace {

constexpr double kAngleTol = 1e-9;       // degrees
constexpr double kDistanceRelTol = 1e-6;
constexpr double kGradRelTol = 1e-5;
constexpr double kRecoveryMaeDb = 1.0;
constexpr double kEquivarianceTol = 1e-9;

constexpr double kGeometrySeconds = 5.0;
constexpr double kGradSeconds = 30.0;
constexpr double kRecoverySeconds = 300.0;
constexpr double kSweepSeconds = 7200.0;

// Sweep scale for criteria 4 to 6: 60 stations of 100 samples, width 32.
constexpr int kSweepStations = 60;
constexpr int kSweepSamples = 100;
constexpr int kSweepWidth = 32;
constexpr std::uint64_t kSweepDataSeed = 7;

// Recovery scale for criterion 3. Width 128 keeps the run inside its budget.
constexpr int kRecoveryWidth = 128;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Outcome geometry_oracle() {
  Gen g(101);
  std::vector<std::pair<BsRecord, SamplePoint>> pairs;
  for (int i = 0; i < 10000; ++i) {
    BsRecord b = g.station("B" + std::to_string(i));
    const SamplePoint p = g.point_near(b);
    pairs.emplace_back(std::move(b), p);
  }
  const auto t0 = Clock::now();
  double worst_angle = 0.0, worst_dist = 0.0;
  for (const auto& [b, p] : pairs) {
    const CompressedFeatures cf = geo::compress(b, p);
    const oracle::Geometry o = oracle::geometry(b, p);
    worst_angle = std::max({worst_angle, std::abs(std::remainder(cf.delta_theta_h - o.dth, 360.0)),
                            std::abs(cf.delta_theta_v - o.dtv)});
    worst_dist = std::max(worst_dist, std::abs(cf.distance - o.distance) / o.distance);
  }
  const double secs = seconds_since(t0);
  return {worst_angle <= kAngleTol && worst_dist <= kDistanceRelTol && secs < kGeometrySeconds,
          "10000 pairs, max angle error " + fmt("%.3g", worst_angle) + " deg, max relative distance error " +
              fmt("%.3g", worst_dist) + ", " + fmt("%.2f", secs) + " s"};
}

Eigen::MatrixXd random_matrix(Gen& g, Eigen::Index r, Eigen::Index c) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g.uniform(-1.0, 1.0);
  return m;
}

void randomize_biases(Gen& g, nnet::Mlp& m) {
  for (nnet::Layer& l : m.layers())
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias[i] = g.uniform(-0.3, 0.3);
}

Outcome gradient_check() {
  Gen g(202);
  testsupport::SynthFixture f(6, 20, 3);
  const FeatureEncoding enc = f.encoding();
  const auto t0 = Clock::now();
  double worst = 0.0;
  int checked = 0, skipped = 0;
  for (int t = 0; t < 100; ++t) {
    gradcheck::Result r;
    if (t % 2 == 0) {
      nnet::Mlp m = nnet::Mlp::init(g.mlp_spec(6, 3, 8, 9), static_cast<std::uint64_t>(t));
      randomize_biases(g, m);
      const auto x = g.vec(static_cast<std::size_t>(m.spec().input_dim));
      const auto y = g.vec(static_cast<std::size_t>(m.spec().output_dim));
      std::vector<bool> mask(y.size());
      for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = i == 0 || g.coin();
      r = gradcheck::check_mlp(m, x, y, mask);
    } else {
      // Disentangled layouts of every trainable variant at a small width.
      const Variant v = kAllVariants[static_cast<std::size_t>(t / 2) % kAllVariants.size()];
      ModelConfig cfg;
      cfg.hidden_width = g.integer(3, 8);
      cfg.subnet_hidden_layers = g.integer(1, 3);
      cfg.single_hidden_layers = g.integer(1, 3);
      const CoverageModel model = CoverageModel::build(v, f.m_beams(), enc, static_cast<std::uint64_t>(t), cfg);
      nnet::FusedNet net = model.net();
      for (auto& part : net.parts()) randomize_biases(g, part.net);
      const Eigen::Index n = g.integer(2, 6);
      const Eigen::Index out = net.output_dim();
      const Eigen::MatrixXd x = random_matrix(g, n, net.input_dim()), y = random_matrix(g, n, out);
      Eigen::MatrixXd mask = Eigen::MatrixXd::Ones(n, out);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 1; j < out; ++j) mask(i, j) = g.coin() ? 1.0 : 0.0;
      r = gradcheck::check_fused(net, x, y, mask);
    }
    worst = std::max(worst, r.max_rel_error);
    checked += r.checked;
    skipped += r.skipped;
  }
  const double secs = seconds_since(t0);
  return {worst < kGradRelTol && checked > 0 && secs < kGradSeconds,
          "100 instances, " + std::to_string(checked) + " parameters checked (" + std::to_string(skipped) +
              " at ReLU kinks skipped), max relative error " + fmt("%.3g", worst) + ", " + fmt("%.1f", secs) +
              " s"};
}

Outcome synthetic_recovery() {
  const auto t0 = Clock::now();
  const synth::SyntheticScenario scenario = synth::default_scenario();  // noiseless
  const Dataset ds = synth::generate_dataset(scenario, 60, 500, 0);
  const data::JoinResult joined = data::join(ds.stations, ds.samples);
  data::SplitSpec split;
  split.sampling_rate = 0.5;
  split.seed = 0;
  const data::SplitRows rows = data::partition(joined.rows, data::split_by_bs(ds.stations, split));
  ModelConfig mc;
  mc.hidden_width = kRecoveryWidth;
  nnet::TrainConfig tc;
  tc.seed = 0;
  const FitResult fit = fit_model(Variant::proposed, scenario.m_beams(), rows.train, rows.val, mc, tc, false);

  const Eigen::MatrixXd pred = fit.model.predict_observations(rows.test);
  Eigen::MatrixXd truth(pred.rows(), pred.cols());
  for (std::size_t r = 0; r < rows.test.size(); ++r)
    for (Eigen::Index j = 0; j < truth.cols(); ++j)
      truth(static_cast<Eigen::Index>(r), j) = rows.test[r].sample->observed[static_cast<std::size_t>(j)]
                                                   ? rows.test[r].sample->rsrp[static_cast<std::size_t>(j)]
                                                   : std::numeric_limits<double>::quiet_NaN();
  const eval::PooledErrors err = eval::pooled_errors(truth, pred);
  const double secs = seconds_since(t0);
  return {err.mae < kRecoveryMaeDb && secs < kRecoverySeconds,
          "held-out MAE " + fmt("%.4f", err.mae) + " dB over " + std::to_string(rows.test.size()) +
              " samples, " + std::to_string(fit.training.history.size()) + " epochs, width " +
              std::to_string(kRecoveryWidth) + ", " + fmt("%.0f", secs) + " s"};
}

struct Sweep {
  std::vector<eval::SummaryRow> summary;
  std::vector<double> rates;
  std::size_t failed = 0;
  double seconds = 0.0;
};

Sweep run_sweep() {
  synth::SyntheticScenario scenario = synth::default_scenario();
  scenario.noise_std = 2.0;
  const Dataset ds = synth::generate_dataset(scenario, kSweepStations, kSweepSamples, kSweepDataSeed);
  eval::GridConfig cfg;
  cfg.methods = {"proposed", "benchmark2", "benchmark3", "wrong1", "wrong2", "wrong3", eval::kKnnTag,
                 eval::kLassoTag};
  cfg.sampling_rates = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7};
  for (std::uint64_t s = 0; s < 20; ++s) cfg.seeds.push_back(s);
  cfg.model.hidden_width = kSweepWidth;
  cfg.knn_k = 50;
  cfg.lasso_lambda = 1.0;
  cfg.jobs = 1;
  const auto t0 = Clock::now();
  const auto results = eval::run_grid(ds, scenario.m_beams(), cfg);
  Sweep s;
  s.seconds = seconds_since(t0);
  s.summary = eval::summarize(results);
  s.rates = cfg.sampling_rates;
  s.failed = static_cast<std::size_t>(std::count_if(results.begin(), results.end(), [](const auto& r) { return !r.ok; }));
  return s;
}

/// Checks mean MAE(lhs) <= mean MAE(rhs) at every rate and lists the margins.
bool ordered(const Sweep& s, const std::string& lhs, const std::string& rhs, std::string& detail) {
  bool ok = true;
  detail += lhs + " vs " + rhs + " margins (dB):";
  for (double rate : s.rates) {
    const double a = eval::mean_mae(s.summary, lhs, rate), b = eval::mean_mae(s.summary, rhs, rate);
    const double margin = b - a;
    ok = ok && std::isfinite(margin) && margin >= 0.0;
    detail += " " + fmt("%.0f%%", rate * 100.0) + "=" + fmt("%+.3f", margin);
  }
  detail += "\n    ";
  return ok;
}

Outcome sweep_criterion(const Sweep& s, const std::vector<std::pair<std::string, std::string>>& pairs) {
  Outcome o{s.failed == 0 && s.seconds < kSweepSeconds, ""};
  for (const auto& [a, b] : pairs) o.pass = ordered(s, a, b, o.detail) && o.pass;
  o.detail += std::to_string(s.failed) + " failed cells, sweep " + fmt("%.0f", s.seconds) + " s";
  return o;
}

std::string describe_means(const Sweep& s) {
  std::string out = "mean MAE (dB) by rate:";
  for (const char* m : {"proposed", "benchmark2", "benchmark3", "wrong1", "wrong2", "wrong3", "knn", "lasso"}) {
    out += "\n    " + std::string(m) + ":";
    for (double rate : s.rates) out += " " + fmt("%.3f", eval::mean_mae(s.summary, m, rate));
  }
  return out;
}

covmap::CoverageGrid random_grid(Gen& g, const covmap::GridSpec& spec, const std::string& id) {
  covmap::CoverageGrid grid(spec);
  for (std::size_t i = 0; i < grid.values.size(); ++i) {
    if (g.integer(0, 3) == 0) continue;
    grid.values[i] = g.integer(-560, -160) * 0.25;  // quarter-dB steps make ties common
    grid.contributing_bs[i] = id;
  }
  return grid;
}

Outcome fusion_exactness() {
  Gen g(707);
  int mismatches = 0;
  for (int t = 0; t < 1000; ++t) {
    covmap::GridSpec spec;
    spec.origin_longitude = g.uniform(-10.0, 10.0);
    spec.origin_latitude = g.uniform(-10.0, 10.0);
    spec.resolution = 10.0;
    spec.extent_east = 10.0 * g.integer(1, 12);
    spec.extent_north = 10.0 * g.integer(1, 12);
    const covmap::CoverageGrid a = random_grid(g, spec, "A"), b = random_grid(g, spec, "B");
    const std::vector<covmap::CoverageGrid> ab{a, b}, ba{b, a}, aa{a, a};
    const auto fab = covmap::fuse_max(ab), fba = covmap::fuse_max(ba), faa = covmap::fuse_max(aa);
    bool ok = fab.values == fba.values && faa.values == a.values && faa.contributing_bs == a.contributing_bs;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
      std::optional<double> want;
      if (a.values[i] && b.values[i]) want = std::max(*a.values[i], *b.values[i]);
      else if (a.values[i]) want = a.values[i];
      else want = b.values[i];
      ok = ok && fab.values[i] == want;
      if (want && a.values[i] != b.values[i])
        ok = ok && fab.contributing_bs[i] == (want == a.values[i] ? a.contributing_bs[i] : b.contributing_bs[i]);
    }
    mismatches += ok ? 0 : 1;
  }
  return {mismatches == 0, "1000 grid pairs, " + std::to_string(mismatches) + " with a mismatch"};
}

std::vector<double> geometric(double start, double ratio, int n) {
  std::vector<double> v{start};
  for (int i = 1; i < n; ++i) v.push_back(v.back() * ratio);
  return v;
}

/// 1-based epoch at which training stops, or 0 if it runs through.
int stop_epoch(const std::vector<double>& train, const std::vector<double>& val, nnet::StallRule rule,
               bool require_both) {
  nnet::EarlyStopping es(10, 0.01, rule, require_both);
  for (std::size_t i = 0; i < train.size(); ++i)
    if (es.update(train[i], val[i])) return static_cast<int>(i) + 1;
  return 0;
}

Outcome early_stopping_suite() {
  using nnet::StallRule;
  struct Case {
    const char* name;
    std::vector<double> train, val;
    StallRule rule;
    bool require_both;
    int expected;
  };
  const auto plateau = geometric(1.0, 0.995, 30);  // 0.5% per epoch
  const auto steady = geometric(1.0, 0.98, 30);    // 2% per epoch
  auto reset = geometric(1.0, 0.995, 10);          // nine flat epochs, then a 10% drop
  reset.push_back(reset.back() * 0.9);
  for (int i = 0; i < 15; ++i) reset.push_back(reset.back() * 0.995);
  auto late = geometric(1.0, 0.98, 15);
  for (int i = 0; i < 15; ++i) late.push_back(late.back() * 0.999);
  const std::vector<double> flat(20, 0.5), zero(20, 0.0);

  const std::vector<Case> cases = {
      {"ten 0.5% epochs", plateau, plateau, StallRule::per_epoch, true, 11},
      {"steady 2% descent", steady, steady, StallRule::per_epoch, true, 0},
      {"flat curve", flat, flat, StallRule::per_epoch, true, 11},
      {"10% drop resets the count", reset, reset, StallRule::per_epoch, true, 21},
      {"plateau after epoch 15", late, late, StallRule::per_epoch, true, 25},
      {"train stalls, validation improves", plateau, steady, StallRule::per_epoch, true, 0},
      {"either curve may stop", plateau, steady, StallRule::per_epoch, false, 11},
      {"zero loss", zero, zero, StallRule::per_epoch, true, 11},
      {"windowed, 0.5% per epoch", plateau, plateau, StallRule::windowed, true, 0},
      {"windowed, 0.05% per epoch", geometric(1.0, 0.9995, 30), geometric(1.0, 0.9995, 30), StallRule::windowed,
       true, 11},
  };
  Outcome o{true, ""};
  for (const Case& c : cases) {
    const int got = stop_epoch(c.train, c.val, c.rule, c.require_both);
    if (got != c.expected) {
      o.pass = false;
      o.detail += std::string(c.name) + ": expected " + std::to_string(c.expected) + ", got " + std::to_string(got) +
                  "; ";
    }
  }
  o.detail += std::to_string(cases.size()) + " crafted sequences";
  return o;
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"covpred"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli::main_entry(static_cast<int>(argv.size()), argv.data());
}

Outcome determinism() {
  namespace fs = std::filesystem;
  testsupport::TempDir tmp("acceptance");
  const std::vector<std::string> tiny = {"--width", "8", "--subnet-layers", "2", "--single-layers", "2",
                                         "--max-epochs", "5", "--batch-size", "64"};
  auto with = [](std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  // Every seeded command, pointed at a fresh directory per round.
  auto round = [&](const fs::path& d) {
    const std::string bs = (d / "data" / "bs.csv").string(), meas = (d / "data" / "measurements.csv").string();
    int rc = run_cli({"synth", "--seed", "3", "--n-bs", "10", "--samples-per-bs", "40", "--noise-std", "2",
                      "--out", (d / "data").string()});
    rc |= run_cli(with({"train", "--bs-file", bs, "--meas-file", meas, "--variant", "proposed", "--rate", "0.5",
                        "--seed", "4", "--model-out", (d / "model.bin").string(), "--history-out",
                        (d / "history.csv").string(), "--metrics-out", (d / "metrics.csv").string()},
                       tiny));
    rc |= run_cli(with({"eval-grid", "--bs-file", bs, "--meas-file", meas, "--methods",
                        "proposed,benchmark3,wrong2,knn,lasso", "--rates", "0.3,0.6", "--seeds", "0-1", "--jobs", "1",
                        "--knn-k", "10", "--results-out", (d / "results.csv").string(), "--summary-out",
                        (d / "summary.csv").string()},
                       tiny));
    rc |= run_cli({"predict-map", "--model", (d / "model.bin").string(), "--bs-file", bs, "--resolution", "50",
                   "--radius", "800", "--out", (d / "map").string()});
    rc |= run_cli({"inspect-model", "--model", (d / "model.bin").string(), "--out", (d / "inspect.txt").string()});
    return rc;
  };
  if (round(tmp / "a") != 0 || round(tmp / "b") != 0) return {false, "a command failed"};
  int files = 0, differing = 0;
  for (const auto& e : fs::recursive_directory_iterator(tmp / "a")) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), tmp / "a");
    ++files;
    if (testsupport::slurp(e.path()) != testsupport::slurp(tmp / "b" / rel)) ++differing;
  }
  return {differing == 0 && files >= 12,
          std::to_string(files) + " output files from synth, train, eval-grid, predict-map, inspect-model; " +
              std::to_string(differing) + " differ"};
}

Outcome tx_power_equivariance() {
  Gen g(1010);
  testsupport::SynthFixture f(8, 20, 11);
  const std::vector<Variant> variants{Variant::proposed, Variant::benchmark2, Variant::wrong1, Variant::wrong2,
                                      Variant::wrong3};
  double worst = 0.0;
  int entries = 0;
  bool finite = true;
  for (int t = 0; t < 100; ++t) {
    ModelConfig cfg;
    cfg.hidden_width = g.integer(4, 16);
    cfg.subnet_hidden_layers = g.integer(1, 3);
    cfg.single_hidden_layers = g.integer(1, 3);
    CoverageModel m = CoverageModel::build(variants[static_cast<std::size_t>(t) % variants.size()], f.m_beams(),
                                           f.encoding(g.coin()), static_cast<std::uint64_t>(t), cfg);
    nnet::FusedNet net = m.net();
    for (auto& part : net.parts()) randomize_biases(g, part.net);
    m.set_net(net);
    for (int k = 0; k < 5; ++k) {
      // Random station, possibly with labels the encoding has never seen.
      BsRecord bs = k % 2 == 0 ? *g.pick(f.rows).bs : g.station("R");
      const SamplePoint pt = g.point_near(bs);
      const auto before = m.predict_rsrp(bs, pt);
      bs.power.total_tx_power += 3.0;
      const auto after = m.predict_rsrp(bs, pt);
      for (std::size_t i = 0; i < before.size(); ++i) {
        finite = finite && std::isfinite(before[i]) && std::isfinite(after[i]);
        worst = std::max(worst, std::abs(after[i] - before[i] - 3.0));
        ++entries;
      }
    }
  }
  return {finite && worst <= kEquivarianceTol,
          "100 models, " + std::to_string(entries) + " entries, max deviation from +3 dB " + fmt("%.3g", worst)};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  int failures = 0;
  auto report = [&](int id, const char* name, const Outcome& o) {
    std::printf("criterion %d (%s): %s\n    %s\n", id, name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  };
  auto guarded = [](const std::function<Outcome()>& f) {
    try {
      return f();
    } catch (const std::exception& e) {
      return Outcome{false, std::string("threw: ") + e.what()};
    }
  };

  report(1, "geometry oracle", guarded(geometry_oracle));
  report(2, "gradient check", guarded(gradient_check));
  report(3, "synthetic recovery", guarded(synthetic_recovery));

  Sweep sweep;
  std::string sweep_error;
  try {
    sweep = run_sweep();
    std::printf("sweep: %s\n", describe_means(sweep).c_str());
  } catch (const std::exception& e) {
    sweep_error = e.what();
  }
  auto from_sweep = [&](const std::vector<std::pair<std::string, std::string>>& pairs) {
    return sweep_error.empty() ? sweep_criterion(sweep, pairs) : Outcome{false, "sweep threw: " + sweep_error};
  };
  report(4, "ablation ordering", from_sweep({{"proposed", "benchmark2"}, {"benchmark2", "benchmark3"}}));
  report(5, "wrong-model ordering", from_sweep({{"proposed", "wrong1"}, {"proposed", "wrong2"}, {"proposed", "wrong3"}}));
  report(6, "baseline comparison", from_sweep({{"proposed", "knn"}, {"proposed", "lasso"}}));

  report(7, "fusion exactness", guarded(fusion_exactness));
  report(8, "early stopping", guarded(early_stopping_suite));
  report(9, "determinism", guarded(determinism));
  report(10, "tx-power equivariance", guarded(tx_power_equivariance));

  std::printf("%s: %d of 10 criteria failed\n", failures == 0 ? "PASS" : "FAIL", failures);
  return failures == 0 ? 0 : 1;
}
