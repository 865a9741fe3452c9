#pragma once

#include <Eigen/Dense>

#include <vector>

#include "ridi/sequence.hpp"

namespace ridi {

/// Piecewise-linear low-frequency acceleration bias, device frame. Bias at a
/// non-knot frame interpolates linearly between the neighbouring knots and
/// clamps outside the knot span.
struct CorrectionKnots {
  std::vector<int> frames;            ///< ascending
  std::vector<Eigen::Vector3d> bias;  ///< m/s^2

  bool empty() const { return frames.empty(); }
};

/// Knot frames every `spacing` frames from 0 through the last multiple inside
/// the sequence.
std::vector<int> default_knot_frames(int n_frames, int spacing = 50);

Eigen::Vector3d interpolate_bias(const CorrectionKnots& knots, int frame);

/// Expands knots to a per-frame bias table for [0, n).
std::vector<Eigen::Vector3d> bias_table(const CorrectionKnots& knots, int n);

/// Least-squares bias estimation: corrected velocities at the constraint
/// frames should match the regressed velocities, with an L2 penalty keeping
/// knot magnitudes small.
struct CorrectionProblem {
  std::vector<Eigen::Matrix3d> r_wd;    ///< World<-Device per frame
  std::vector<Eigen::Vector3d> linacc;  ///< raw device-frame linear acceleration
  double dt = 1.0 / 200.0;

  std::vector<int> knot_frames;
  std::vector<int> constraint_frames;           ///< ascending, < size()
  std::vector<Eigen::Matrix3d> r_sw;            ///< Stabilized<-World at each constraint
  std::vector<Eigen::Vector2d> target_velocity; ///< horizontal (x, z) in S, m/s

  double lambda = 0.1;
  /// When false (default) each constraint also pins the vertical velocity
  /// component in S to zero; when true only the two horizontal rows are used.
  bool horizontal_only = false;
  /// World velocity at frame 0 of this problem. Zero for whole-sequence
  /// solves; window-local solves pass the integral up to the window start.
  Eigen::Vector3d v0_world = Eigen::Vector3d::Zero();

  int size() const { return static_cast<int>(r_wd.size()); }
};

/// Velocity at frame f:
///   v_W(f) = v0 + dt * sum_{f' < f} R_WD[f'] (a[f'] + bias(f')).
/// Direct O(f) evaluation; solve() uses an equivalent prefix formulation.
Eigen::Vector3d integrated_velocity_world(const CorrectionProblem& p, const CorrectionKnots& k,
                                          int f);

/// Corrected velocity in the stabilized frame at constraint index i.
Eigen::Vector3d corrected_velocity(const CorrectionProblem& p, const CorrectionKnots& k, int i);

/// Data-term design matrix (stored transposed, unknowns x rows) and residual
/// offset for the linearized problem. Exposed for the solver tests and the
/// serial/parallel benchmark.
struct DesignMatrix {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> at;  ///< 3K x rows
  Eigen::VectorXd b;
};

DesignMatrix build_design(const CorrectionProblem& p);

/// gram = At * At^T, rhs = At * b with a fixed-order inner summation.
void gram_serial(const DesignMatrix& d, Eigen::MatrixXd& gram, Eigen::VectorXd& rhs);
/// OpenMP twin of gram_serial; bit-identical at any thread count.
void gram_parallel(const DesignMatrix& d, Eigen::MatrixXd& gram, Eigen::VectorXd& rhs);

struct SolveResult {
  CorrectionKnots knots;
  double objective = 0.0;  ///< data term + lambda * sum |x|^2 at the solution
};

/// Minimizes sum_i |v_C(i) - target_i|^2 + lambda * sum_k |x_k|^2.
/// lambda > 0 solves the normal equations by LDLT (QR fallback); lambda = 0
/// uses rank-revealing QR and throws RankDeficiencyError when underdetermined.
SolveResult solve(const CorrectionProblem& p);

/// Objective evaluated from first principles (direct velocity integration);
/// shared by the solver result and the test oracles.
double objective(const CorrectionProblem& p, const CorrectionKnots& k);

}  // namespace ridi
