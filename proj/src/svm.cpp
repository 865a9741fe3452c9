#include "ridi/svm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "ridi/errors.hpp"

namespace ridi {

std::vector<int> seeded_permutation(int n, std::uint64_t seed) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  return idx;
}

LinearModel train_linear_svr(const SampleMatrix& x, const Eigen::VectorXd& y, double c,
                             double epsilon, const SolverOptions& opt) {
  const int n = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  if (n < 1) throw UsageError("empty training set");
  if (c <= 0.0 || epsilon < 0.0) throw UsageError("need C > 0 and epsilon >= 0");

  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  double b = 0.0;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd qii(n);
  for (int i = 0; i < n; ++i) qii(i) = x.row(i).squaredNorm() + 1.0;  // +1: intercept coordinate

  const auto order = seeded_permutation(n, opt.seed);
  auto dual_objective = [&]() {
    double obj = 0.5 * (w.squaredNorm() + b * b);
    for (int i = 0; i < n; ++i) obj += -y(i) * beta(i) + epsilon * std::abs(beta(i));
    return obj;
  };

  double prev = dual_objective();
  for (int pass = 0; pass < opt.max_passes; ++pass) {
    for (int i : order) {
      const double g = w.dot(x.row(i)) + b - y(i);       // smooth gradient part
      const double lin = g - qii(i) * beta(i);            // linear coeff at beta_i = 0
      double z;
      if (lin < -epsilon)
        z = -(lin + epsilon) / qii(i);
      else if (lin > epsilon)
        z = -(lin - epsilon) / qii(i);
      else
        z = 0.0;
      z = std::clamp(z, -c, c);
      const double delta = z - beta(i);
      if (delta != 0.0) {
        w += delta * x.row(i).transpose();
        b += delta;
        beta(i) = z;
      }
    }
    double cur = dual_objective();
    if (std::abs(prev - cur) < opt.tol) {
      LinearModel m;
      m.w = std::move(w);
      m.b = b;
      return m;
    }
    prev = cur;
  }
  throw ConvergenceError("SVR did not converge in " + std::to_string(opt.max_passes) +
                             " passes; last dual objective " + std::to_string(prev),
                         prev);
}

LinearModel train_linear_svc(const SampleMatrix& x, const Eigen::VectorXd& y, double c,
                             const SolverOptions& opt) {
  const int n = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  if (n < 1) throw UsageError("empty training set");
  for (int i = 0; i < n; ++i)
    if (y(i) != 1.0 && y(i) != -1.0) throw UsageError("SVC labels must be +-1");

  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  double b = 0.0;
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd qii(n);
  for (int i = 0; i < n; ++i) qii(i) = x.row(i).squaredNorm() + 1.0;

  const auto order = seeded_permutation(n, opt.seed);
  auto dual_objective = [&]() {
    return 0.5 * (w.squaredNorm() + b * b) - alpha.sum();
  };

  double prev = dual_objective();
  for (int pass = 0; pass < opt.max_passes; ++pass) {
    for (int i : order) {
      const double g = y(i) * (w.dot(x.row(i)) + b) - 1.0;
      const double next = std::clamp(alpha(i) - g / qii(i), 0.0, c);
      const double delta = (next - alpha(i)) * y(i);
      if (delta != 0.0) {
        w += delta * x.row(i).transpose();
        b += delta;
        alpha(i) = next;
      }
    }
    double cur = dual_objective();
    if (std::abs(prev - cur) < opt.tol) {
      LinearModel m;
      m.w = std::move(w);
      m.b = b;
      return m;
    }
    prev = cur;
  }
  throw ConvergenceError("SVC did not converge in " + std::to_string(opt.max_passes) +
                             " passes; last dual objective " + std::to_string(prev),
                         prev);
}

double RbfSvrModel::predict(const Eigen::VectorXd& x) const {
  double s = b;
  for (int i = 0; i < support.rows(); ++i) {
    double d2 = (support.row(i).transpose() - x).squaredNorm();
    s += coef(i) * std::exp(-gamma * d2);
  }
  return s;
}

RbfSvrModel train_rbf_svr(const SampleMatrix& x, const Eigen::VectorXd& y, double c,
                          double epsilon, double gamma, const SolverOptions& opt) {
  const int n = static_cast<int>(x.rows());
  if (n < 1) throw UsageError("empty training set");
  if (n > 4000) throw UsageError("RBF path caps at 4000 samples; use the linear kernel");
  if (gamma <= 0.0) throw UsageError("need gamma > 0");

  // Dense kernel matrix; problem sizes behind the RBF flag stay small.
  Eigen::MatrixXd kmat(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      double v = std::exp(-gamma * (x.row(i) - x.row(j)).squaredNorm());
      kmat(i, j) = v;
      kmat(j, i) = v;
    }
  }

  // 2n-variable box form: t < n are alpha+ (z = +1), t >= n are alpha- (z = -1).
  // min 1/2 a^T Q a + p^T a,  Q(t,u) = z_t z_u K(s_t, s_u),  sum z_t a_t = 0.
  const int m = 2 * n;
  Eigen::VectorXd a = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd grad(m);
  for (int t = 0; t < m; ++t) grad(t) = (t < n) ? epsilon - y(t) : epsilon + y(t - n);
  auto zsign = [&](int t) { return t < n ? 1.0 : -1.0; };
  auto sample = [&](int t) { return t < n ? t : t - n; };

  const long max_iter = 200000L + 100L * m;
  for (long it = 0;; ++it) {
    int i = -1, j = -1;
    double gmax = -1e300, gmin = 1e300;
    for (int t = 0; t < m; ++t) {
      const double z = zsign(t);
      const bool can_up = (z > 0 && a(t) < c) || (z < 0 && a(t) > 0);
      const bool can_low = (z > 0 && a(t) > 0) || (z < 0 && a(t) < c);
      const double v = -z * grad(t);
      if (can_up && v > gmax) {
        gmax = v;
        i = t;
      }
      if (can_low && v < gmin) {
        gmin = v;
        j = t;
      }
    }
    if (i < 0 || j < 0 || gmax - gmin < opt.tol) break;
    if (it >= max_iter)
      throw ConvergenceError("RBF SVR exceeded " + std::to_string(max_iter) + " SMO steps",
                             gmax - gmin);

    const double zi = zsign(i), zj = zsign(j);
    const int si = sample(i), sj = sample(j);
    // Direction d = z_i e_i - z_j e_j preserves sum z_t a_t; along it the
    // curvature d^T Q d collapses to the raw-kernel form below for any signs.
    double quad = kmat(si, si) + kmat(sj, sj) - 2.0 * kmat(si, sj);
    quad = std::max(quad, 1e-12);
    double step = (gmax - gmin) / quad;
    const double ai_max = zi > 0 ? c - a(i) : a(i);
    const double aj_max = zj > 0 ? a(j) : c - a(j);
    step = std::min({step, ai_max, aj_max});
    a(i) += zi * step;
    a(j) -= zj * step;
    for (int t = 0; t < m; ++t)
      grad(t) += zsign(t) * step * (kmat(sample(t), si) - kmat(sample(t), sj));
  }

  // Bias from the KKT midpoint over free/bound sets.
  double lo = -1e300, hi = 1e300;
  for (int t = 0; t < m; ++t) {
    const double z = zsign(t);
    const bool can_up = (z > 0 && a(t) < c) || (z < 0 && a(t) > 0);
    const bool can_low = (z > 0 && a(t) > 0) || (z < 0 && a(t) < c);
    const double v = -z * grad(t);
    if (can_up) lo = std::max(lo, v);
    if (can_low) hi = std::min(hi, v);
  }
  const double rho = (lo + hi) / 2.0;

  Eigen::VectorXd beta(n);
  for (int s = 0; s < n; ++s) beta(s) = a(s) - a(s + n);

  RbfSvrModel model;
  model.gamma = gamma;
  model.b = rho;
  int nsv = 0;
  for (int s = 0; s < n; ++s)
    if (beta(s) != 0.0) ++nsv;
  model.support.resize(nsv, x.cols());
  model.coef.resize(nsv);
  int k = 0;
  for (int s = 0; s < n; ++s) {
    if (beta(s) == 0.0) continue;
    model.support.row(k) = x.row(s);
    model.coef(k) = beta(s);
    ++k;
  }
  return model;
}

}  // namespace ridi
