#include "covpred/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "covpred/error.hpp"

namespace covpred::eval {
namespace {

void check_lengths(std::span<const double> y, std::span<const double> yhat,
                   const std::vector<bool>& mask) {
  if (y.size() != yhat.size() || y.size() != mask.size())
    throw ShapeError("metric inputs differ in length");
}

double quantile_sorted(const std::vector<double>& s, double q) {
  const double pos = q * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  const double t = pos - static_cast<double>(lo);
  return s[lo] + t * (s[hi] - s[lo]);
}

}  // namespace

double mae(std::span<const double> y, std::span<const double> yhat, const std::vector<bool>& mask) {
  check_lengths(y, yhat, mask);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!mask[i]) continue;
    sum += std::abs(yhat[i] - y[i]);
    ++n;
  }
  if (n == 0) throw InvalidInput("mae: empty mask");
  return sum / static_cast<double>(n);
}

double mape(std::span<const double> y, std::span<const double> yhat, const std::vector<bool>& mask) {
  check_lengths(y, yhat, mask);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!mask[i]) continue;
    if (y[i] == 0.0) throw InvalidInput("mape: ground truth of zero");
    sum += std::abs(yhat[i] - y[i]) / std::abs(y[i]);
    ++n;
  }
  if (n == 0) throw InvalidInput("mape: empty mask");
  return 100.0 * sum / static_cast<double>(n);
}

PooledErrors pooled_errors(const Eigen::MatrixXd& y, const Eigen::MatrixXd& yhat) {
  if (y.rows() != yhat.rows() || y.cols() != yhat.cols())
    throw ShapeError("pooled_errors: shape mismatch");
  PooledErrors out;
  out.head_mae.assign(static_cast<std::size_t>(y.cols()), std::numeric_limits<double>::quiet_NaN());
  double abs_sum = 0.0, pct_sum = 0.0;
  for (Eigen::Index j = 0; j < y.cols(); ++j) {
    double head = 0.0;
    std::size_t n = 0;
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      if (std::isnan(y(i, j)) || std::isnan(yhat(i, j))) continue;
      const double e = std::abs(yhat(i, j) - y(i, j));
      if (y(i, j) == 0.0) throw InvalidInput("mape: ground truth of zero");
      head += e;
      pct_sum += e / std::abs(y(i, j));
      ++n;
    }
    abs_sum += head;
    out.count += n;
    if (n > 0) out.head_mae[static_cast<std::size_t>(j)] = head / static_cast<double>(n);
  }
  if (out.count == 0) throw InvalidInput("pooled_errors: nothing observed");
  out.mae = abs_sum / static_cast<double>(out.count);
  out.mape = 100.0 * pct_sum / static_cast<double>(out.count);
  return out;
}

ErrorDistribution error_distribution(std::span<const double> abs_errors) {
  if (abs_errors.empty()) throw InvalidInput("error_distribution: no errors");
  ErrorDistribution d;
  std::vector<double> sorted(abs_errors.begin(), abs_errors.end());
  for (double e : sorted)
    if (!(e >= 0.0)) throw InvalidInput("error_distribution: errors must be nonnegative");
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  std::array<std::size_t, kErrorBins> counts{};
  std::size_t below5 = 0, below8 = 0;
  for (double e : sorted) {
    ++counts[static_cast<std::size_t>(std::min(kErrorBins - 1, static_cast<int>(std::floor(e))))];
    below5 += e < 5.0;
    below8 += e < 8.0;
  }
  for (int b = 0; b < kErrorBins; ++b)
    d.bin_fraction[b] = static_cast<double>(counts[static_cast<std::size_t>(b)]) / n;
  d.below_5db = static_cast<double>(below5) / n;
  d.below_8db = static_cast<double>(below8) / n;
  d.q25 = quantile_sorted(sorted, 0.25);
  d.median = quantile_sorted(sorted, 0.5);
  d.q75 = quantile_sorted(sorted, 0.75);
  return d;
}

}  // namespace covpred::eval
