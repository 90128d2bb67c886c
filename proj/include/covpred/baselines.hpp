#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace covpred::eval {

/// Indices of the k training rows nearest to `query` (Euclidean), nearest
/// first; equal distances keep training-row order.
std::vector<Eigen::Index> knn_neighbors(const Eigen::MatrixXd& train_x,
                                        std::span<const double> query, int k);

/// Mean target of the k nearest rows. NaN targets are skipped per column;
/// a column with no finite neighbor value comes back NaN.
Eigen::VectorXd knn_predict(const Eigen::MatrixXd& train_x, const Eigen::MatrixXd& train_y,
                            std::span<const double> query, int k);

double soft_threshold(double rho, double lambda);

struct LassoConfig {
  double lambda = 1.0;
  double tolerance = 1e-6;  // on the largest coefficient change in a sweep
  int max_sweeps = 10000;
};

/// Per-output linear model with unpenalized intercepts.
struct LassoModel {
  Eigen::VectorXd intercept;  // one per output
  Eigen::MatrixXd coef;       // features x outputs
  int sweeps = 0;             // largest sweep count over outputs
};

/// Minimizes (1/2n)||y - b0 - X beta||^2 + lambda ||beta||_1 by cyclic
/// coordinate descent, separately per output column. Rows whose target is
/// NaN are left out of that column's fit. Throws ConvergenceError when the
/// sweep cap is hit.
LassoModel lasso_fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const LassoConfig& cfg = {});

Eigen::MatrixXd lasso_predict(const LassoModel& m, const Eigen::MatrixXd& x);

}  // namespace covpred::eval
