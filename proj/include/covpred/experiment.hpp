#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "covpred/model.hpp"
#include "covpred/nnet/train.hpp"
#include "covpred/types.hpp"

namespace covpred::eval {

/// Method tags accepted by the grid: the six model variants plus the two
/// classical baselines.
inline constexpr const char* kKnnTag = "knn";
inline constexpr const char* kLassoTag = "lasso";
bool is_valid_method(const std::string& tag);

struct GridConfig {
  std::vector<std::string> methods;
  std::vector<double> sampling_rates;
  std::vector<std::uint64_t> seeds;
  ModelConfig model;
  nnet::TrainConfig train;  // seed is overridden per cell
  bool exclude_aau = false;
  int knn_k = 50;
  double lasso_lambda = 1.0;
  int jobs = 1;

  void validate() const;
};

struct CellResult {
  std::string method;
  double sampling_rate = 0.0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;  // set when !ok
  double mae = 0.0;   // dB, pooled over every observed test entry
  double mape = 0.0;  // percent
  std::vector<double> head_mae;
  int epochs = 0;  // 0 for the baselines
  double runtime_seconds = 0.0;
};

/// Trains and scores one (method, rate, seed) cell. The split, the model
/// initialization and the batch shuffles all use `seed`.
CellResult run_cell(const Dataset& ds, int m_beams, const std::string& method, double rate,
                    std::uint64_t seed, const GridConfig& cfg);

/// Every (method, rate, seed) cell in that nesting order. Cell failures are
/// recorded in the row, not thrown. Rows do not depend on `jobs`.
std::vector<CellResult> run_grid(const Dataset& ds, int m_beams, const GridConfig& cfg,
                                 const std::function<void(const CellResult&)>& on_cell = {});

struct SummaryRow {
  std::string method;
  double sampling_rate = 0.0;
  std::size_t cells = 0;  // successful cells
  std::size_t failed = 0;
  double mae_mean = 0.0;
  double mae_std = 0.0;  // sample standard deviation; 0 for a single cell
  double mape_mean = 0.0;
  double mape_std = 0.0;
};

/// Per (method, rate) statistics, in first-appearance order.
std::vector<SummaryRow> summarize(const std::vector<CellResult>& results);

/// Mean MAE of `method` at `rate`; NaN when no cell succeeded.
double mean_mae(const std::vector<SummaryRow>& summary, const std::string& method, double rate);

void write_results_csv(std::ostream& out, const std::vector<CellResult>& results);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& summary);
/// Wall-clock seconds per cell; kept apart so the results file is
/// reproducible.
void write_timing_csv(std::ostream& out, const std::vector<CellResult>& results);

}  // namespace covpred::eval
