#include "covpred/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "covpred/error.hpp"

namespace covpred::eval {

std::vector<Eigen::Index> knn_neighbors(const Eigen::MatrixXd& train_x,
                                        std::span<const double> query, int k) {
  const Eigen::Index n = train_x.rows();
  if (n == 0) throw InvalidInput("knn: empty training set");
  if (k < 1 || k > n) throw InvalidInput("knn: k must lie in [1, training size]");
  if (query.size() != static_cast<std::size_t>(train_x.cols()))
    throw ShapeError("knn: query width does not match training features");
  const Eigen::Map<const Eigen::RowVectorXd> q(query.data(), static_cast<Eigen::Index>(query.size()));
  std::vector<std::pair<double, Eigen::Index>> dist(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) dist[i] = {(train_x.row(i) - q).squaredNorm(), i};
  // Pair ordering compares distance first, then row index.
  std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
  std::vector<Eigen::Index> out(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) out[i] = dist[i].second;
  return out;
}

Eigen::VectorXd knn_predict(const Eigen::MatrixXd& train_x, const Eigen::MatrixXd& train_y,
                            std::span<const double> query, int k) {
  if (train_y.rows() != train_x.rows()) throw ShapeError("knn: targets do not match features");
  const std::vector<Eigen::Index> nn = knn_neighbors(train_x, query, k);
  Eigen::VectorXd out(train_y.cols());
  for (Eigen::Index j = 0; j < train_y.cols(); ++j) {
    double sum = 0.0;
    int used = 0;
    for (Eigen::Index i : nn) {
      const double v = train_y(i, j);
      if (std::isnan(v)) continue;
      sum += v;
      ++used;
    }
    out[j] = used > 0 ? sum / used : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

double soft_threshold(double rho, double lambda) {
  if (rho > lambda) return rho - lambda;
  if (rho < -lambda) return rho + lambda;
  return 0.0;
}

LassoModel lasso_fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const LassoConfig& cfg) {
  if (x.rows() == 0) throw InvalidInput("lasso: empty training set");
  if (y.rows() != x.rows()) throw ShapeError("lasso: targets do not match features");
  if (!(cfg.lambda >= 0.0)) throw InvalidInput("lasso: lambda must be nonnegative");
  const Eigen::Index p = x.cols();
  LassoModel m;
  m.intercept = Eigen::VectorXd::Zero(y.cols());
  m.coef = Eigen::MatrixXd::Zero(p, y.cols());

  for (Eigen::Index j = 0; j < y.cols(); ++j) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < y.rows(); ++i)
      if (!std::isnan(y(i, j))) rows.push_back(i);
    if (rows.empty()) throw InvalidInput("lasso: output " + std::to_string(j) + " has no targets");
    const double n = static_cast<double>(rows.size());

    // Center on the rows this output uses so the intercept drops out.
    Eigen::MatrixXd xc = x(rows, Eigen::all);
    Eigen::VectorXd yc = y(rows, j);
    const Eigen::RowVectorXd x_mean = xc.colwise().mean();
    const double y_mean = yc.mean();
    xc.rowwise() -= x_mean;
    yc.array() -= y_mean;
    const Eigen::VectorXd z = xc.colwise().squaredNorm().transpose() / n;

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd resid = yc;
    int sweep = 0;
    for (;;) {
      if (++sweep > cfg.max_sweeps)
        throw ConvergenceError("lasso: no convergence after " + std::to_string(cfg.max_sweeps) + " sweeps");
      double max_change = 0.0;
      for (Eigen::Index c = 0; c < p; ++c) {
        if (z[c] <= 1e-14) continue;  // constant on these rows
        const double old = beta[c];
        const double rho = xc.col(c).dot(resid) / n + z[c] * old;
        const double fresh = soft_threshold(rho, cfg.lambda) / z[c];
        if (fresh != old) {
          resid -= (fresh - old) * xc.col(c);
          beta[c] = fresh;
          max_change = std::max(max_change, std::abs(fresh - old));
        }
      }
      if (max_change < cfg.tolerance) break;
    }
    m.sweeps = std::max(m.sweeps, sweep);
    m.coef.col(j) = beta;
    m.intercept[j] = y_mean - x_mean.dot(beta);
  }
  return m;
}

Eigen::MatrixXd lasso_predict(const LassoModel& m, const Eigen::MatrixXd& x) {
  if (x.cols() != m.coef.rows()) throw ShapeError("lasso: feature width does not match model");
  Eigen::MatrixXd out = x * m.coef;
  out.rowwise() += m.intercept.transpose();
  return out;
}

}  // namespace covpred::eval
