#include "covpred/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "covpred/covmap.hpp"
#include "covpred/data.hpp"
#include "covpred/encoding.hpp"
#include "covpred/experiment.hpp"
#include "covpred/geo.hpp"
#include "covpred/metrics.hpp"
#include "covpred/model.hpp"
#include "covpred/synth.hpp"

namespace covpred::cli {

namespace fs = std::filesystem;

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  auto number = [&](std::string_view s) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
      throw UsageError("bad seed list '" + text + "'");
    return v;
  };
  std::vector<std::uint64_t> seeds;
  std::string_view rest = text;
  while (!rest.empty()) {
    const std::size_t comma = rest.find(',');
    const std::string_view item = rest.substr(0, comma);
    const std::size_t dash = item.find('-');
    if (dash == std::string_view::npos) {
      seeds.push_back(number(item));
    } else {
      const std::uint64_t lo = number(item.substr(0, dash)), hi = number(item.substr(dash + 1));
      if (hi < lo || hi - lo > 100000) throw UsageError("bad seed range '" + std::string(item) + "'");
      for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    }
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  if (seeds.empty()) throw UsageError("empty seed list");
  return seeds;
}

namespace {

void add_training_options(CLI::App* app, TrainingOptions& o) {
  app->add_option("--width", o.hidden_width, "Hidden layer width")->check(CLI::PositiveNumber);
  app->add_option("--subnet-layers", o.subnet_layers, "Hidden layers per fused subnet")
      ->check(CLI::PositiveNumber);
  app->add_option("--single-layers", o.single_layers, "Hidden layers of the single-network benchmarks")
      ->check(CLI::PositiveNumber);
  app->add_option("--max-epochs", o.max_epochs)->check(CLI::PositiveNumber);
  app->add_option("--batch-size", o.batch_size)->check(CLI::PositiveNumber);
  app->add_option("--lr", o.learning_rate, "Learning rate")->check(CLI::PositiveNumber);
  app->add_option("--stop-window", o.early_stop_window, "Early-stopping window in epochs")
      ->check(CLI::PositiveNumber);
  app->add_option("--stop-threshold", o.early_stop_threshold,
                  "Relative improvement counted as progress")
      ->check(CLI::Range(0.0, 1.0));
  app->add_option("--stall-rule", o.stall_rule, "per-epoch or windowed")
      ->check(CLI::IsMember({"per-epoch", "windowed"}));
  app->add_flag("--stop-on-either", o.stop_on_either,
                "Stop when either loss curve stalls instead of both");
  app->add_flag("--exclude-aau", o.exclude_aau, "Drop the AAU type from the features");
}

std::vector<std::string> variant_tags() {
  std::vector<std::string> tags;
  for (Variant v : kAllVariants) tags.emplace_back(to_string(v));
  return tags;
}

}  // namespace

Command parse_args(int argc, const char* const* argv) {
  CLI::App app{"Low-altitude per-beam RSRP coverage prediction", "covpred"};
  app.require_subcommand(1, 1);

  SynthCommand synth;
  CLI::App* s = app.add_subcommand("synth", "Generate a synthetic dataset from a known propagation model");
  s->add_option("--seed", synth.seed);
  s->add_option("--n-bs", synth.n_bs)->check(CLI::PositiveNumber);
  s->add_option("--samples-per-bs", synth.samples_per_bs)->check(CLI::PositiveNumber);
  s->add_option("--scenario", synth.scenario, "Scenario JSON file")->check(CLI::ExistingFile);
  s->add_option("--noise-std", synth.noise_std, "Measurement noise in dB")->check(CLI::NonNegativeNumber);
  s->add_option("--out", synth.out_dir, "Output directory")->required();

  TrainCommand train;
  CLI::App* t = app.add_subcommand("train", "Train one model variant on a BS-level split");
  t->add_option("--bs-file", train.bs_file)->required()->check(CLI::ExistingFile);
  t->add_option("--meas-file", train.meas_file)->required()->check(CLI::ExistingFile);
  t->add_option("--variant", train.variant)->check(CLI::IsMember(variant_tags()));
  t->add_option("--rate", train.rate, "Fraction of BSs used for training")->check(CLI::Range(0.0, 0.9));
  t->add_option("--seed", train.seed);
  t->add_option("--model-out", train.model_out)->required();
  t->add_option("--history-out", train.history_out, "Per-epoch loss CSV");
  t->add_option("--metrics-out", train.metrics_out, "Held-out test metrics");
  add_training_options(t, train.training);

  EvalGridCommand grid;
  std::string seeds_text = "0-19";
  CLI::App* g = app.add_subcommand("eval-grid", "Run the methods x rates x seeds experiment grid");
  g->add_option("--bs-file", grid.bs_file)->required()->check(CLI::ExistingFile);
  g->add_option("--meas-file", grid.meas_file)->required()->check(CLI::ExistingFile);
  std::vector<std::string> methods = variant_tags();
  methods.push_back(eval::kKnnTag);
  methods.push_back(eval::kLassoTag);
  g->add_option("--methods", grid.methods, "Comma-separated method tags")
      ->required()
      ->delimiter(',')
      ->check(CLI::IsMember(methods));
  g->add_option("--rates", grid.rates, "Comma-separated sampling rates")
      ->required()
      ->delimiter(',')
      ->check(CLI::Range(0.0, 0.9));
  g->add_option("--seeds", seeds_text, "Seed list such as 0-19 or 1,5,9");
  g->add_option("--results-out", grid.results_out)->required();
  g->add_option("--summary-out", grid.summary_out);
  g->add_option("--timing-out", grid.timing_out, "Per-cell wall-clock times");
  g->add_option("--jobs", grid.jobs, "Cells trained in parallel")->check(CLI::PositiveNumber);
  g->add_option("--knn-k", grid.knn_k)->check(CLI::PositiveNumber);
  g->add_option("--lasso-lambda", grid.lasso_lambda)->check(CLI::NonNegativeNumber);
  add_training_options(g, grid.training);

  PredictMapCommand map;
  CLI::App* p = app.add_subcommand("predict-map", "Predict and fuse per-BS SS-RSRP coverage grids");
  p->add_option("--model", map.model)->required()->check(CLI::ExistingFile);
  p->add_option("--bs-file", map.bs_file)->required()->check(CLI::ExistingFile);
  p->add_option("--bs-ids", map.bs_ids, "Comma-separated station ids (default: all)")->delimiter(',');
  p->add_option("--origin-lon", map.origin_lon, "South-west corner longitude");
  p->add_option("--origin-lat", map.origin_lat, "South-west corner latitude");
  p->add_option("--extent-east", map.extent_east, "Meters")->check(CLI::PositiveNumber);
  p->add_option("--extent-north", map.extent_north, "Meters")->check(CLI::PositiveNumber);
  p->add_option("--resolution", map.resolution, "Cell size in meters")->check(CLI::PositiveNumber);
  p->add_option("--altitude", map.altitude, "Meters")->check(CLI::NonNegativeNumber);
  p->add_option("--radius", map.radius, "Per-BS prediction radius in meters")->check(CLI::NonNegativeNumber);
  p->add_option("--out", map.out_stem, "Output stem")->required();
  p->add_flag("--per-bs", map.per_bs, "Also export each station's own grid");

  SampleMapCommand sample;
  CLI::App* sm = app.add_subcommand("sample-map", "Look up a fused map at given points");
  sm->add_option("--map", sample.map_stem, "Stem written by predict-map")->required();
  sm->add_option("--points", sample.points_file, "CSV with longitude/latitude (or lon/lat) columns")
      ->required()
      ->check(CLI::ExistingFile);
  sm->add_option("--out", sample.out)->required();
  sm->add_flag("--skip-outside", sample.skip_outside, "Leave off-grid points empty instead of failing");

  InspectModelCommand inspect;
  CLI::App* im = app.add_subcommand("inspect-model", "Describe a trained model bundle");
  im->add_option("--model", inspect.model)->required()->check(CLI::ExistingFile);
  im->add_option("--out", inspect.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream out, err;
    const int code = app.exit(e, out, err);
    if (code == 0) throw HelpRequested(out.str());
    throw UsageError(err.str() + out.str());
  }

  if (*s) return synth;
  if (*t) return train;
  if (*g) {
    grid.seeds = parse_seed_list(seeds_text);
    return grid;
  }
  if (*p) {
    if (map.origin_lon.has_value() != map.origin_lat.has_value())
      throw UsageError("--origin-lon and --origin-lat go together");
    return map;
  }
  if (*sm) return sample;
  return inspect;
}

namespace {

ModelConfig model_config(const TrainingOptions& o) {
  ModelConfig m;
  m.hidden_width = o.hidden_width;
  m.subnet_hidden_layers = o.subnet_layers;
  m.single_hidden_layers = o.single_layers;
  return m;
}

nnet::TrainConfig train_config(const TrainingOptions& o, std::uint64_t seed) {
  nnet::TrainConfig c;
  c.learning_rate = o.learning_rate;
  c.max_epochs = o.max_epochs;
  c.batch_size = o.batch_size;
  c.early_stop_window = o.early_stop_window;
  c.early_stop_rel_improvement = o.early_stop_threshold;
  c.stall_rule = o.stall_rule == "windowed" ? nnet::StallRule::windowed : nnet::StallRule::per_epoch;
  c.stop_requires_both = !o.stop_on_either;
  c.seed = seed;
  return c;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  return out;
}

Dataset load_dataset(const std::string& bs_file, const std::string& meas_file, int& m_beams) {
  Dataset ds;
  ds.stations = data::read_bs_table(bs_file);
  data::MeasurementTable mt = data::read_measurements(meas_file);
  ds.samples = std::move(mt.samples);
  m_beams = mt.m_beams;
  if (m_beams < 1) throw InvalidInput("measurement file has no beam columns");
  spdlog::info("loaded {} stations and {} samples with {} beams", ds.stations.size(), ds.samples.size(),
               m_beams);
  return ds;
}

int run_synth(const SynthCommand& c) {
  synth::SyntheticScenario scenario =
      c.scenario ? synth::load_scenario(*c.scenario) : synth::default_scenario();
  if (c.noise_std) scenario.noise_std = *c.noise_std;
  const Dataset ds = synth::generate_dataset(scenario, c.n_bs, c.samples_per_bs, c.seed);
  std::error_code ec;
  fs::create_directories(c.out_dir, ec);
  if (ec) throw IoError("cannot create " + c.out_dir + ": " + ec.message());
  const fs::path dir(c.out_dir);
  data::save_bs_table(dir / "bs.csv", ds.stations);
  data::save_measurements(dir / "measurements.csv", ds.samples, scenario.m_beams());
  synth::save_scenario(dir / "scenario.json", scenario);
  spdlog::info("wrote {} stations and {} samples to {}", ds.stations.size(), ds.samples.size(),
               dir.string());
  return kOk;
}

int run_train(const TrainCommand& c) {
  int m_beams = 0;
  const Dataset ds = load_dataset(c.bs_file, c.meas_file, m_beams);
  const data::JoinResult joined = data::join(ds.stations, ds.samples);
  data::SplitSpec spec;
  spec.sampling_rate = c.rate;
  spec.seed = c.seed;
  const data::SplitRows rows = data::partition(joined.rows, data::split_by_bs(ds.stations, spec));
  spdlog::info("split: {} train, {} validation, {} test samples", rows.train.size(), rows.val.size(),
               rows.test.size());

  const FitResult fit = fit_model(parse_variant(c.variant), m_beams, rows.train, rows.val,
                                  model_config(c.training), train_config(c.training, c.seed),
                                  c.training.exclude_aau);
  spdlog::info("trained {} epochs, best validation loss {:.6g} at epoch {}",
               fit.training.history.size(), fit.training.best_val_loss, fit.training.best_epoch);
  fit.model.save(c.model_out);

  if (c.history_out) {
    std::ofstream out = open_out(*c.history_out);
    out << "epoch,train_loss,val_loss\n";
    for (const nnet::EpochRecord& r : fit.training.history)
      out << r.epoch << ',' << data::format_double(r.train_loss) << ','
          << data::format_double(r.val_loss) << '\n';
  }
  if (!rows.test.empty()) {
    const Eigen::MatrixXd pred = fit.model.predict_observations(rows.test);
    Eigen::MatrixXd truth(pred.rows(), pred.cols());
    for (std::size_t r = 0; r < rows.test.size(); ++r)
      for (int j = 0; j <= m_beams; ++j)
        truth(static_cast<Eigen::Index>(r), j) = rows.test[r].sample->observed[j]
                                                     ? rows.test[r].sample->rsrp[j]
                                                     : std::numeric_limits<double>::quiet_NaN();
    const eval::PooledErrors err = eval::pooled_errors(truth, pred);
    spdlog::info("held-out test MAE {:.4f} dB, MAPE {:.3f}%", err.mae, err.mape);
    if (c.metrics_out) {
      std::ofstream out = open_out(*c.metrics_out);
      out << "metric,value\n"
          << "test_mae_db," << data::format_double(err.mae) << '\n'
          << "test_mape_pct," << data::format_double(err.mape) << '\n'
          << "test_entries," << err.count << '\n'
          << "epochs," << fit.training.history.size() << '\n'
          << "best_epoch," << fit.training.best_epoch << '\n';
      for (std::size_t j = 0; j < err.head_mae.size(); ++j)
        out << (j == 0 ? std::string("mae_ss_db") : "mae_ssb" + std::to_string(j) + "_db") << ','
            << data::format_double(err.head_mae[j]) << '\n';
    }
  }
  return kOk;
}

int run_eval_grid(const EvalGridCommand& c) {
  int m_beams = 0;
  const Dataset ds = load_dataset(c.bs_file, c.meas_file, m_beams);
  eval::GridConfig cfg;
  cfg.methods = c.methods;
  cfg.sampling_rates = c.rates;
  cfg.seeds = c.seeds;
  cfg.model = model_config(c.training);
  cfg.train = train_config(c.training, 0);
  cfg.exclude_aau = c.training.exclude_aau;
  cfg.knn_k = c.knn_k;
  cfg.lasso_lambda = c.lasso_lambda;
  cfg.jobs = c.jobs;
  const std::size_t total = cfg.methods.size() * cfg.sampling_rates.size() * cfg.seeds.size();
  std::size_t done = 0;
  const auto results = eval::run_grid(ds, m_beams, cfg, [&](const eval::CellResult& r) {
    ++done;
    if (r.ok)
      spdlog::info("[{}/{}] {} rate={} seed={} MAE {:.4f} dB", done, total, r.method, r.sampling_rate,
                   r.seed, r.mae);
    else
      spdlog::warn("[{}/{}] {} rate={} seed={} failed: {}", done, total, r.method, r.sampling_rate,
                   r.seed, r.error);
  });
  {
    std::ofstream out = open_out(c.results_out);
    eval::write_results_csv(out, results);
  }
  if (c.summary_out) {
    std::ofstream out = open_out(*c.summary_out);
    eval::write_summary_csv(out, eval::summarize(results));
  }
  if (c.timing_out) {
    std::ofstream out = open_out(*c.timing_out);
    eval::write_timing_csv(out, results);
  }
  const auto failed = std::count_if(results.begin(), results.end(), [](const auto& r) { return !r.ok; });
  if (failed > 0) spdlog::warn("{} of {} cells failed", failed, results.size());
  return kOk;
}

int run_predict_map(const PredictMapCommand& c) {
  const CoverageModel model = CoverageModel::load(c.model);
  const std::vector<BsRecord> all = data::read_bs_table(c.bs_file);
  std::vector<BsRecord> stations;
  if (c.bs_ids.empty()) {
    stations = all;
  } else {
    for (const std::string& id : c.bs_ids) {
      const auto it = std::find_if(all.begin(), all.end(), [&](const BsRecord& b) { return b.bs_id == id; });
      if (it == all.end()) throw InvalidInput("no station with id " + id);
      stations.push_back(*it);
    }
  }
  if (stations.empty()) throw InvalidInput("no stations to map");

  covmap::GridSpec spec;
  spec.resolution = c.resolution;
  spec.altitude = c.altitude;
  double min_lon = stations[0].location.longitude, max_lon = min_lon;
  double min_lat = stations[0].location.latitude, max_lat = min_lat;
  for (const BsRecord& b : stations) {
    min_lon = std::min(min_lon, b.location.longitude);
    max_lon = std::max(max_lon, b.location.longitude);
    min_lat = std::min(min_lat, b.location.latitude);
    max_lat = std::max(max_lat, b.location.latitude);
  }
  // Default extent: the stations' bounding box padded by the radius plus one cell.
  const double pad = c.radius + c.resolution;
  spec.origin_latitude = c.origin_lat.value_or(min_lat - pad / geo::kMetersPerDegree);
  const double m_per_lon =
      geo::kMetersPerDegree * std::cos(spec.origin_latitude * std::numbers::pi / 180.0);
  spec.origin_longitude = c.origin_lon.value_or(min_lon - pad / m_per_lon);
  spec.extent_east = c.extent_east.value_or((max_lon - spec.origin_longitude) * m_per_lon + pad);
  spec.extent_north =
      c.extent_north.value_or((max_lat - spec.origin_latitude) * geo::kMetersPerDegree + pad);
  spec.validate();
  spdlog::info("grid {} x {} cells at {} m", spec.cols(), spec.rows(), spec.resolution);

  std::vector<covmap::CoverageGrid> grids;
  for (const BsRecord& b : stations) {
    grids.push_back(covmap::predict_grid(model, b, spec, c.radius));
    spdlog::info("{}: {} cells covered", b.bs_id, grids.back().populated());
    if (c.per_bs) covmap::export_grid(c.out_stem + "_" + b.bs_id, grids.back());
  }
  const covmap::CoverageGrid fused = covmap::fuse_max(grids);
  covmap::export_grid(c.out_stem, fused);
  spdlog::info("fused map: {} of {} cells covered", fused.populated(), fused.values.size());
  return kOk;
}

std::vector<SamplePoint> read_points(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) return {};
  auto fields = [](const std::string& l) {
    std::vector<std::string> f;
    std::stringstream ss(l);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty() && item.back() == '\r') item.pop_back();
      f.push_back(item);
    }
    return f;
  };
  const std::vector<std::string> header = fields(line);
  auto column = [&](std::initializer_list<const char*> names) {
    for (const char* n : names) {
      const auto it = std::find(header.begin(), header.end(), n);
      if (it != header.end()) return static_cast<std::size_t>(it - header.begin());
    }
    throw ParseError(1, "points file needs a longitude/lon and latitude/lat column");
  };
  const std::size_t lon = column({"longitude", "lon"}), lat = column({"latitude", "lat"});
  std::vector<SamplePoint> pts;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> f = fields(line);
    if (f.size() <= std::max(lon, lat)) throw ParseError(row, "too few fields");
    auto num = [&](const std::string& s) {
      double v = 0.0;
      const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ParseError(row, "'" + s + "' is not a number");
      return v;
    };
    pts.push_back({num(f[lon]), num(f[lat]), 0.0});
  }
  return pts;
}

int run_sample_map(const SampleMapCommand& c) {
  std::ifstream meta(c.map_stem + ".meta");
  if (!meta) throw IoError("cannot open " + c.map_stem + ".meta");
  const covmap::GridSpec spec = covmap::read_metadata(meta);
  std::ifstream csv(c.map_stem + ".csv", std::ios::binary);
  if (!csv) throw IoError("cannot open " + c.map_stem + ".csv");
  const covmap::CoverageGrid grid = covmap::read_grid_csv(csv, spec);
  const std::vector<SamplePoint> pts = read_points(c.points_file);

  std::ofstream out = open_out(c.out);
  out << "longitude,latitude,ss_rsrp_dbm\n";
  std::size_t outside = 0;
  for (const SamplePoint& pt : pts) {
    std::optional<double> v;
    try {
      v = covmap::sample_at(grid, std::span<const SamplePoint>(&pt, 1)).front();
    } catch (const OutOfBounds&) {
      if (!c.skip_outside) throw;
      ++outside;
    }
    out << data::format_double(pt.longitude) << ',' << data::format_double(pt.latitude) << ',';
    if (v) out << data::format_double(*v);
    out << '\n';
  }
  if (outside > 0) spdlog::warn("{} points fell outside the grid", outside);
  return kOk;
}

int run_inspect(const InspectModelCommand& c) {
  const CoverageModel m = CoverageModel::load(c.model);
  std::ostringstream os;
  const FeatureEncoding& enc = m.encoding();
  os << "variant: " << to_string(m.variant()) << '\n'
     << "m_beams: " << m.m_beams() << '\n'
     << "target: " << (m.target_kind() == TargetKind::relative ? "rsrp - p_T" : "absolute rsrp") << '\n'
     << "input_width: " << m.input_width() << '\n'
     << "hidden_width: " << m.config().hidden_width << '\n'
     << "parameters: " << m.net().parameter_count() << '\n'
     << "exclude_aau: " << (enc.exclude_aau() ? "true" : "false") << '\n';
  os << "aau_vocab:";
  for (const auto& v : enc.aau_vocab()) os << ' ' << v;
  os << "\nscenario_vocab:";
  for (const auto& v : enc.scenario_vocab()) os << ' ' << v;
  os << '\n';
  for (std::size_t k = 0; k < m.net().parts().size(); ++k) {
    const auto& part = m.net().parts()[k];
    os << "part " << k << ": " << part.net.spec().hidden_layers << " x " << part.net.spec().hidden_width
       << " hidden, inputs";
    for (int col : part.inputs) os << ' ' << col;
    os << '\n';
  }
  if (c.out) {
    std::ofstream out = open_out(*c.out);
    out << os.str();
  } else {
    std::cout << os.str();
  }
  return kOk;
}

}  // namespace

int run(const Command& cmd) {
  try {
    return std::visit(
        [](const auto& c) -> int {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, SynthCommand>) return run_synth(c);
          else if constexpr (std::is_same_v<T, TrainCommand>) return run_train(c);
          else if constexpr (std::is_same_v<T, EvalGridCommand>) return run_eval_grid(c);
          else if constexpr (std::is_same_v<T, PredictMapCommand>) return run_predict_map(c);
          else if constexpr (std::is_same_v<T, SampleMapCommand>) return run_sample_map(c);
          else return run_inspect(c);
        },
        cmd);
  } catch (const UsageError& e) {
    spdlog::error("{}", e.what());
    return kUsage;
  } catch (const ConvergenceError& e) {
    spdlog::error("convergence failure: {}", e.what());
    return kConvergence;
  } catch (const IoError& e) {
    spdlog::error("I/O failure: {}", e.what());
    return kIoError;
  } catch (const Error& e) {
    spdlog::error("data error: {}", e.what());
    return kDataError;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kFailure;
  }
}

int main_entry(int argc, const char* const* argv) {
  // Data goes to declared files; logs go to stderr.
  if (!spdlog::get("covpred")) spdlog::set_default_logger(spdlog::stderr_color_mt("covpred"));
  Command cmd;
  try {
    cmd = parse_args(argc, argv);
  } catch (const HelpRequested& e) {
    std::cout << e.what();
    return kOk;
  } catch (const UsageError& e) {
    std::cerr << e.what();
    return kUsage;
  }
  return run(cmd);
}

}  // namespace covpred::cli
