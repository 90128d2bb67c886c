#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace covpred::eval {

/// Mean absolute error over masked-in entries.
double mae(std::span<const double> y, std::span<const double> yhat, const std::vector<bool>& mask);

/// Mean of |yhat - y| / |y| over masked-in entries, in percent.
double mape(std::span<const double> y, std::span<const double> yhat, const std::vector<bool>& mask);

/// Pooled errors over a (samples x outputs) table. Entries where `y` or
/// `yhat` is NaN are treated as unobserved.
struct PooledErrors {
  double mae = 0.0;
  double mape = 0.0;
  std::size_t count = 0;
  std::vector<double> head_mae;  // per output column; NaN when a column is empty
};
PooledErrors pooled_errors(const Eigen::MatrixXd& y, const Eigen::MatrixXd& yhat);

inline constexpr int kErrorBins = 21;  // [0,1), [1,2), ..., [19,20), [20, inf)

struct ErrorDistribution {
  std::array<double, kErrorBins> bin_fraction{};
  double below_5db = 0.0;  // fraction strictly below 5 dB
  double below_8db = 0.0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
};

/// Histogram and quartiles of absolute errors. Quartiles interpolate
/// linearly between order statistics at position q * (n - 1).
ErrorDistribution error_distribution(std::span<const double> abs_errors);

}  // namespace covpred::eval
