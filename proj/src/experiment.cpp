#include "covpred/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include "covpred/baselines.hpp"
#include "covpred/data.hpp"
#include "covpred/error.hpp"
#include "covpred/geo.hpp"
#include "covpred/metrics.hpp"

namespace covpred::eval {

bool is_valid_method(const std::string& tag) {
  if (tag == kKnnTag || tag == kLassoTag) return true;
  try {
    parse_variant(tag);
    return true;
  } catch (const InvalidInput&) {
    return false;
  }
}

void GridConfig::validate() const {
  if (methods.empty() || sampling_rates.empty() || seeds.empty())
    throw InvalidInput("experiment grid needs methods, rates and seeds");
  for (const std::string& m : methods)
    if (!is_valid_method(m)) throw InvalidInput("unknown method '" + m + "'");
  for (double r : sampling_rates)
    if (!(r > 0.0 && r < 0.9)) throw InvalidInput("sampling rates must lie in (0, 0.9)");
  if (knn_k < 1) throw InvalidInput("knn k must be at least 1");
  if (!(lasso_lambda >= 0.0)) throw InvalidInput("lasso lambda must be nonnegative");
  if (jobs < 1) throw InvalidInput("jobs must be at least 1");
  model.validate();
  train.validate();
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Observed RSRP with NaN in unobserved cells.
Eigen::MatrixXd truth_matrix(std::span<const Observation> rows, int m_beams) {
  Eigen::MatrixXd y(static_cast<Eigen::Index>(rows.size()), m_beams + 1);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const MeasurementSample& s = *rows[r].sample;
    for (int j = 0; j <= m_beams; ++j)
      y(static_cast<Eigen::Index>(r), j) = s.observed[j] ? s.rsrp[j] : kNaN;
  }
  return y;
}

/// Compressed feature rows plus relative targets for the baselines.
struct BaselineRows {
  Eigen::MatrixXd x;
  Eigen::MatrixXd y;              // p - p_T, NaN where unobserved
  std::vector<double> p_t;        // per row
  std::vector<bool> valid;        // false for degenerate geometry
};

BaselineRows baseline_rows(const FeatureEncoding& enc, std::span<const Observation> rows) {
  const int width = enc.compressed_width();
  const int outputs = enc.m_beams() + 1;
  BaselineRows b;
  b.x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), width);
  b.y.resize(static_cast<Eigen::Index>(rows.size()), outputs);
  b.p_t.assign(rows.size(), 0.0);
  b.valid.assign(rows.size(), true);
  std::vector<double> buf(static_cast<std::size_t>(width));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto i = static_cast<Eigen::Index>(r);
    const MeasurementSample& s = *rows[r].sample;
    try {
      enc.compressed_row(geo::compress(*rows[r].bs, s.point), buf);
    } catch (const DegenerateGeometry&) {
      b.valid[r] = false;
      b.y.row(i).setConstant(kNaN);
      continue;
    }
    b.x.row(i) = Eigen::Map<const Eigen::RowVectorXd>(buf.data(), width);
    b.p_t[r] = geo::ssb_tx_power(rows[r].bs->power);
    for (int j = 0; j < outputs; ++j) b.y(i, j) = s.observed[j] ? s.rsrp[j] - b.p_t[r] : kNaN;
  }
  return b;
}

BaselineRows only_valid(const BaselineRows& b) {
  std::vector<Eigen::Index> keep;
  for (std::size_t r = 0; r < b.valid.size(); ++r)
    if (b.valid[r]) keep.push_back(static_cast<Eigen::Index>(r));
  BaselineRows out;
  out.x = b.x(keep, Eigen::all);
  out.y = b.y(keep, Eigen::all);
  for (Eigen::Index r : keep) out.p_t.push_back(b.p_t[static_cast<std::size_t>(r)]);
  out.valid.assign(keep.size(), true);
  return out;
}

Eigen::MatrixXd baseline_predict(const std::string& method, const data::SplitRows& rows, int m_beams,
                                 const GridConfig& cfg) {
  const FeatureEncoding enc = FeatureEncoding::fit(rows.train, m_beams, cfg.exclude_aau);
  const BaselineRows train = only_valid(baseline_rows(enc, rows.train));
  const BaselineRows test = baseline_rows(enc, rows.test);
  Eigen::MatrixXd rel(test.x.rows(), m_beams + 1);
  if (method == kKnnTag) {
    for (Eigen::Index r = 0; r < test.x.rows(); ++r) {
      const Eigen::RowVectorXd q = test.x.row(r);
      rel.row(r) = knn_predict(train.x, train.y, std::span<const double>(q.data(), q.size()), cfg.knn_k)
                       .transpose();
    }
  } else {
    LassoConfig lc;
    lc.lambda = cfg.lasso_lambda;
    rel = lasso_predict(lasso_fit(train.x, train.y, lc), test.x);
  }
  for (Eigen::Index r = 0; r < rel.rows(); ++r) {
    if (!test.valid[static_cast<std::size_t>(r)]) {
      rel.row(r).setConstant(kNaN);
      continue;
    }
    rel.row(r).array() += test.p_t[static_cast<std::size_t>(r)];
  }
  return rel;
}

}  // namespace

CellResult run_cell(const Dataset& ds, int m_beams, const std::string& method, double rate,
                    std::uint64_t seed, const GridConfig& cfg) {
  CellResult cell;
  cell.method = method;
  cell.sampling_rate = rate;
  cell.seed = seed;
  const auto start = std::chrono::steady_clock::now();
  try {
    const data::JoinResult joined = data::join(ds.stations, ds.samples);
    data::SplitSpec spec;
    spec.sampling_rate = rate;
    spec.seed = seed;
    const data::Split split = data::split_by_bs(ds.stations, spec);
    const data::SplitRows rows = data::partition(joined.rows, split);
    if (rows.train.empty() || rows.val.empty() || rows.test.empty())
      throw InvalidSplit("a split set has no samples");

    Eigen::MatrixXd predicted;
    if (method == kKnnTag || method == kLassoTag) {
      predicted = baseline_predict(method, rows, m_beams, cfg);
    } else {
      nnet::TrainConfig tc = cfg.train;
      tc.seed = seed;
      const FitResult fit = fit_model(parse_variant(method), m_beams, rows.train, rows.val, cfg.model,
                                      tc, cfg.exclude_aau);
      cell.epochs = static_cast<int>(fit.training.history.size());
      predicted = fit.model.predict_observations(rows.test, false);
    }
    const PooledErrors err = pooled_errors(truth_matrix(rows.test, m_beams), predicted);
    cell.mae = err.mae;
    cell.mape = err.mape;
    cell.head_mae = err.head_mae;
    cell.ok = true;
  } catch (const std::exception& e) {
    cell.ok = false;
    cell.error = e.what();
  }
  cell.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return cell;
}

std::vector<CellResult> run_grid(const Dataset& ds, int m_beams, const GridConfig& cfg,
                                 const std::function<void(const CellResult&)>& on_cell) {
  cfg.validate();
  struct Task {
    const std::string* method;
    double rate;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (const std::string& m : cfg.methods)
    for (double r : cfg.sampling_rates)
      for (std::uint64_t s : cfg.seeds) tasks.push_back({&m, r, s});

  std::vector<CellResult> results(tasks.size());
  std::atomic<std::size_t> next{0};
  std::mutex report;
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      results[i] = run_cell(ds, m_beams, *tasks[i].method, tasks[i].rate, tasks[i].seed, cfg);
      if (on_cell) {
        std::lock_guard lock(report);
        on_cell(results[i]);
      }
    }
  };
  const int threads = std::min<int>(cfg.jobs, static_cast<int>(tasks.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  return results;
}

std::vector<SummaryRow> summarize(const std::vector<CellResult>& results) {
  std::vector<SummaryRow> out;
  std::vector<std::vector<const CellResult*>> groups;
  for (const CellResult& c : results) {
    auto it = std::find_if(out.begin(), out.end(), [&](const SummaryRow& s) {
      return s.method == c.method && s.sampling_rate == c.sampling_rate;
    });
    if (it == out.end()) {
      out.push_back({c.method, c.sampling_rate});
      groups.emplace_back();
      it = out.end() - 1;
    }
    if (c.ok)
      groups[static_cast<std::size_t>(it - out.begin())].push_back(&c);
    else
      ++it->failed;
  }
  auto mean_std = [](const std::vector<double>& v, double& mean, double& sd) {
    mean = kNaN;
    sd = kNaN;
    if (v.empty()) return;
    double sum = 0.0;
    for (double x : v) sum += x;
    mean = sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  };
  for (std::size_t g = 0; g < out.size(); ++g) {
    std::vector<double> maes, mapes;
    for (const CellResult* c : groups[g]) {
      maes.push_back(c->mae);
      mapes.push_back(c->mape);
    }
    out[g].cells = maes.size();
    mean_std(maes, out[g].mae_mean, out[g].mae_std);
    mean_std(mapes, out[g].mape_mean, out[g].mape_std);
  }
  return out;
}

double mean_mae(const std::vector<SummaryRow>& summary, const std::string& method, double rate) {
  for (const SummaryRow& s : summary)
    if (s.method == method && s.sampling_rate == rate) return s.mae_mean;
  return kNaN;
}

namespace {

std::string csv_text(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + '"';
}

std::string num(double v) { return std::isnan(v) ? std::string() : data::format_double(v); }

}  // namespace

void write_results_csv(std::ostream& out, const std::vector<CellResult>& results) {
  std::size_t heads = 0;
  for (const CellResult& c : results) heads = std::max(heads, c.head_mae.size());
  out << "method,sampling_rate,seed,status,mae_db,mape_pct,epochs";
  for (std::size_t j = 0; j < heads; ++j) out << (j == 0 ? ",mae_ss_db" : ",mae_ssb" + std::to_string(j) + "_db");
  out << ",error\n";
  for (const CellResult& c : results) {
    out << c.method << ',' << num(c.sampling_rate) << ',' << c.seed << ',' << (c.ok ? "ok" : "error")
        << ',' << (c.ok ? num(c.mae) : "") << ',' << (c.ok ? num(c.mape) : "") << ',' << c.epochs;
    for (std::size_t j = 0; j < heads; ++j) out << ',' << (j < c.head_mae.size() ? num(c.head_mae[j]) : "");
    out << ',' << csv_text(c.error) << '\n';
  }
  if (!out) throw IoError("failed to write results");
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& summary) {
  out << "method,sampling_rate,cells,failed,mae_mean_db,mae_std_db,mape_mean_pct,mape_std_pct\n";
  for (const SummaryRow& s : summary)
    out << s.method << ',' << num(s.sampling_rate) << ',' << s.cells << ',' << s.failed << ','
        << num(s.mae_mean) << ',' << num(s.mae_std) << ',' << num(s.mape_mean) << ','
        << num(s.mape_std) << '\n';
  if (!out) throw IoError("failed to write summary");
}

void write_timing_csv(std::ostream& out, const std::vector<CellResult>& results) {
  out << "method,sampling_rate,seed,runtime_s\n";
  for (const CellResult& c : results)
    out << c.method << ',' << num(c.sampling_rate) << ',' << c.seed << ',' << num(c.runtime_seconds)
        << '\n';
  if (!out) throw IoError("failed to write timing");
}

}  // namespace covpred::eval
