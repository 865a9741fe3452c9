#include "ridi/correction.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ridi/errors.hpp"

namespace ridi {

namespace {

void check_problem(const CorrectionProblem& p) {
  if (p.r_wd.size() != p.linacc.size()) throw UsageError("r_wd and linacc lengths differ");
  if (p.constraint_frames.size() != p.target_velocity.size() ||
      p.constraint_frames.size() != p.r_sw.size())
    throw UsageError("constraint arrays must have equal lengths");
  if (p.knot_frames.empty()) throw UsageError("need at least one knot");
  if (p.constraint_frames.empty()) throw UsageError("need at least one constraint");
  for (std::size_t i = 1; i < p.knot_frames.size(); ++i)
    if (p.knot_frames[i] <= p.knot_frames[i - 1]) throw UsageError("knot frames must ascend");
  for (std::size_t i = 1; i < p.constraint_frames.size(); ++i)
    if (p.constraint_frames[i] <= p.constraint_frames[i - 1])
      throw UsageError("constraint frames must ascend");
  if (p.constraint_frames.back() >= p.size())
    throw UsageError("constraint frame beyond sequence end");
  if (p.lambda < 0.0) throw UsageError("lambda must be non-negative");
}

// Interpolation weights of frame f onto knots (at most two non-zero).
// Returns {index, weight} pairs.
struct KnotWeight {
  int k0, k1;
  double w0, w1;
};

KnotWeight weights_at(const std::vector<int>& knots, int f) {
  const int K = static_cast<int>(knots.size());
  if (f <= knots.front()) return {0, 0, 1.0, 0.0};
  if (f >= knots.back()) return {K - 1, K - 1, 1.0, 0.0};
  // Find segment via binary search; callers on hot paths use bias_table.
  int j = static_cast<int>(std::upper_bound(knots.begin(), knots.end(), f) - knots.begin()) - 1;
  double span = knots[static_cast<std::size_t>(j + 1)] - knots[static_cast<std::size_t>(j)];
  double w1 = (f - knots[static_cast<std::size_t>(j)]) / span;
  return {j, j + 1, 1.0 - w1, w1};
}

}  // namespace

std::vector<int> default_knot_frames(int n_frames, int spacing) {
  if (n_frames < 1 || spacing < 1) throw UsageError("bad knot grid");
  std::vector<int> out;
  for (int f = 0; f < n_frames; f += spacing) out.push_back(f);
  return out;
}

Eigen::Vector3d interpolate_bias(const CorrectionKnots& knots, int frame) {
  if (knots.empty()) return Eigen::Vector3d::Zero();
  KnotWeight w = weights_at(knots.frames, frame);
  if (w.k0 == w.k1 || w.w1 == 0.0) return knots.bias[static_cast<std::size_t>(w.k0)];
  return w.w0 * knots.bias[static_cast<std::size_t>(w.k0)] +
         w.w1 * knots.bias[static_cast<std::size_t>(w.k1)];
}

std::vector<Eigen::Vector3d> bias_table(const CorrectionKnots& knots, int n) {
  std::vector<Eigen::Vector3d> out(static_cast<std::size_t>(n));
  for (int f = 0; f < n; ++f) out[static_cast<std::size_t>(f)] = interpolate_bias(knots, f);
  return out;
}

Eigen::Vector3d integrated_velocity_world(const CorrectionProblem& p, const CorrectionKnots& k,
                                          int f) {
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  for (int i = 0; i < f; ++i) {
    const std::size_t ui = static_cast<std::size_t>(i);
    v += p.r_wd[ui] * (p.linacc[ui] + interpolate_bias(k, i));
  }
  return p.v0_world + v * p.dt;
}

Eigen::Vector3d corrected_velocity(const CorrectionProblem& p, const CorrectionKnots& k, int i) {
  const std::size_t ui = static_cast<std::size_t>(i);
  return p.r_sw[ui] * integrated_velocity_world(p, k, p.constraint_frames[ui]);
}

DesignMatrix build_design(const CorrectionProblem& p) {
  check_problem(p);
  const int K = static_cast<int>(p.knot_frames.size());
  const int nc = static_cast<int>(p.constraint_frames.size());
  const int rows_per = p.horizontal_only ? 2 : 3;
  const int nrows = rows_per * nc;

  DesignMatrix d;
  d.at.setZero(3 * K, nrows);
  d.b.setZero(nrows);

  // Single forward pass accumulating, per knot, the rotation-weighted prefix
  // sum; snapshots are taken at each constraint frame.
  std::vector<Eigen::Matrix3d> acc(static_cast<std::size_t>(K), Eigen::Matrix3d::Zero());
  Eigen::Vector3d c_acc = Eigen::Vector3d::Zero();
  int next = 0;
  const int last_f = p.constraint_frames.back();

  for (int f = 0; f <= last_f && next < nc; ++f) {
    while (next < nc && p.constraint_frames[static_cast<std::size_t>(next)] == f) {
      const std::size_t un = static_cast<std::size_t>(next);
      const Eigen::Matrix3d& rsw = p.r_sw[un];
      Eigen::Vector3d t(p.target_velocity[un].x(), 0.0, p.target_velocity[un].y());
      Eigen::Vector3d resid = t - rsw * (p.v0_world + c_acc * p.dt);
      for (int k = 0; k < K; ++k) {
        Eigen::Matrix3d blk = rsw * acc[static_cast<std::size_t>(k)] * p.dt;
        for (int a = 0; a < 3; ++a) {
          int out_r = 0;
          for (int r = 0; r < 3; ++r) {
            if (p.horizontal_only && r == 1) continue;
            d.at(3 * k + a, rows_per * next + out_r) = blk(r, a);
            ++out_r;
          }
        }
      }
      int out_r = 0;
      for (int r = 0; r < 3; ++r) {
        if (p.horizontal_only && r == 1) continue;
        d.b(rows_per * next + out_r) = resid(r);
        ++out_r;
      }
      ++next;
    }
    if (f == last_f) break;
    const std::size_t uf = static_cast<std::size_t>(f);
    KnotWeight w = weights_at(p.knot_frames, f);
    acc[static_cast<std::size_t>(w.k0)] += w.w0 * p.r_wd[uf];
    if (w.k1 != w.k0 && w.w1 != 0.0) acc[static_cast<std::size_t>(w.k1)] += w.w1 * p.r_wd[uf];
    c_acc += p.r_wd[uf] * p.linacc[uf];
  }
  return d;
}

void gram_serial(const DesignMatrix& d, Eigen::MatrixXd& gram, Eigen::VectorXd& rhs) {
  const int n = static_cast<int>(d.at.rows());
  const int m = static_cast<int>(d.at.cols());
  gram.setZero(n, n);
  rhs.setZero(n);
  for (int i = 0; i < n; ++i) {
    const double* ri = d.at.row(i).data();
    for (int j = i; j < n; ++j) {
      const double* rj = d.at.row(j).data();
      double s = 0.0;
      for (int r = 0; r < m; ++r) s += ri[r] * rj[r];
      gram(i, j) = s;
      gram(j, i) = s;
    }
    double s = 0.0;
    for (int r = 0; r < m; ++r) s += ri[r] * d.b(r);
    rhs(i) = s;
  }
}

void gram_parallel(const DesignMatrix& d, Eigen::MatrixXd& gram, Eigen::VectorXd& rhs) {
  const int n = static_cast<int>(d.at.rows());
  const int m = static_cast<int>(d.at.cols());
  gram.setZero(n, n);
  rhs.setZero(n);
#pragma omp parallel for schedule(dynamic, 8)
  for (int i = 0; i < n; ++i) {
    const double* ri = d.at.row(i).data();
    for (int j = i; j < n; ++j) {
      const double* rj = d.at.row(j).data();
      double s = 0.0;
      for (int r = 0; r < m; ++r) s += ri[r] * rj[r];
      gram(i, j) = s;
    }
    double s = 0.0;
    for (int r = 0; r < m; ++r) s += ri[r] * d.b(r);
    rhs(i) = s;
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) gram(j, i) = gram(i, j);
}

SolveResult solve(const CorrectionProblem& p) {
  DesignMatrix d = build_design(p);
  const int n = static_cast<int>(d.at.rows());
  Eigen::VectorXd x;

  if (p.lambda > 0.0) {
    Eigen::MatrixXd gram;
    Eigen::VectorXd rhs;
    gram_parallel(d, gram, rhs);
    gram.diagonal().array() += p.lambda;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    x = ldlt.solve(rhs);
    if (ldlt.info() != Eigen::Success || !x.allFinite()) {
      // Damped systems are positive definite; hitting this means severe
      // conditioning, so fall back to QR on the stacked system.
      Eigen::MatrixXd stacked(d.at.cols() + n, n);
      stacked.topRows(d.at.cols()) = d.at.transpose();
      stacked.bottomRows(n) = std::sqrt(p.lambda) * Eigen::MatrixXd::Identity(n, n);
      Eigen::VectorXd rhs2 = Eigen::VectorXd::Zero(d.at.cols() + n);
      rhs2.head(d.at.cols()) = d.b;
      x = stacked.colPivHouseholderQr().solve(rhs2);
    }
  } else {
    Eigen::MatrixXd a = d.at.transpose();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    qr.setThreshold(1e-10);
    if (qr.rank() < n)
      throw RankDeficiencyError(
          "normal matrix is rank-deficient with lambda = 0 (rank " +
          std::to_string(qr.rank()) + " of " + std::to_string(n) +
          "); use lambda > 0");
    x = qr.solve(d.b);
  }

  SolveResult out;
  out.knots.frames = p.knot_frames;
  out.knots.bias.resize(p.knot_frames.size());
  for (std::size_t k = 0; k < p.knot_frames.size(); ++k)
    out.knots.bias[k] = x.segment<3>(static_cast<int>(3 * k));
  out.objective = objective(p, out.knots);
  return out;
}

double objective(const CorrectionProblem& p, const CorrectionKnots& k) {
  check_problem(p);
  std::vector<Eigen::Vector3d> bias = bias_table(k, p.size());
  double data = 0.0;
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  int next = 0;
  const int nc = static_cast<int>(p.constraint_frames.size());
  for (int f = 0; f <= p.constraint_frames.back() && next < nc; ++f) {
    while (next < nc && p.constraint_frames[static_cast<std::size_t>(next)] == f) {
      const std::size_t un = static_cast<std::size_t>(next);
      Eigen::Vector3d vs = p.r_sw[un] * (p.v0_world + v * p.dt);
      Eigen::Vector3d t(p.target_velocity[un].x(), 0.0, p.target_velocity[un].y());
      Eigen::Vector3d r = vs - t;
      if (p.horizontal_only)
        data += r.x() * r.x() + r.z() * r.z();
      else
        data += r.squaredNorm();
      ++next;
    }
    if (f == p.constraint_frames.back()) break;
    const std::size_t uf = static_cast<std::size_t>(f);
    v += p.r_wd[uf] * (p.linacc[uf] + bias[uf]);
  }
  double reg = 0.0;
  for (const auto& x : k.bias) reg += x.squaredNorm();
  return data + p.lambda * reg;
}

}  // namespace ridi
