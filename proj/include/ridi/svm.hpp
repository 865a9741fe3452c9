#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace ridi {

/// Row-major sample matrix; one row per sample. Shared by the solvers below.
using SampleMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Fisher-Yates permutation of 0..n-1 driven only by the seed (no dependence
/// on the standard library's distribution internals). Used for coordinate
/// visit order and cross-validation fold assignment.
std::vector<int> seeded_permutation(int n, std::uint64_t seed);

struct LinearModel {
  Eigen::VectorXd w;
  double b = 0.0;

  double decision(const Eigen::VectorXd& x) const { return w.dot(x) + b; }
};

struct SolverOptions {
  double tol = 1e-6;       ///< dual objective change per full pass
  int max_passes = 200000;
  std::uint64_t seed = 1;  ///< coordinate visit permutation
};

/// epsilon-insensitive linear SVR, L1 loss, trained by dual coordinate
/// descent:  min_w 1/2 |w|^2 + C sum_i max(0, |y_i - w.x_i - b| - eps).
/// The intercept is a regularized augmented coordinate. Throws
/// ConvergenceError (with the last dual objective) when passes run out.
LinearModel train_linear_svr(const SampleMatrix& x, const Eigen::VectorXd& y, double c,
                             double epsilon, const SolverOptions& opt = {});

/// Binary hinge-loss linear SVM (labels +-1), dual coordinate descent.
LinearModel train_linear_svc(const SampleMatrix& x, const Eigen::VectorXd& y, double c,
                             const SolverOptions& opt = {});

/// epsilon-SVR with an RBF kernel exp(-gamma |a-b|^2), trained by SMO-style
/// maximal-violating-pair updates under the sum constraint. Kernel matrix is
/// precomputed; sample counts above ~4000 are rejected (use the linear path).
struct RbfSvrModel {
  SampleMatrix support;    ///< one support vector per row
  Eigen::VectorXd coef;    ///< beta = alpha+ - alpha-
  double b = 0.0;
  double gamma = 0.0;

  double predict(const Eigen::VectorXd& x) const;
};

RbfSvrModel train_rbf_svr(const SampleMatrix& x, const Eigen::VectorXd& y, double c,
                          double epsilon, double gamma, const SolverOptions& opt = {});

}  // namespace ridi
