#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "ridi/cascade.hpp"
#include "ridi/correction.hpp"
#include "ridi/sequence.hpp"
#include "ridi/smoothing.hpp"

namespace ridi {

/// World-frame trajectory at the sequence sample rate. Position starts at the
/// origin with zero velocity; the vertical position stays 0 whenever the
/// flat-floor constraint is on.
struct Trajectory {
  std::vector<double> t;
  std::vector<Eigen::Vector3d> position;  ///< meters
  std::vector<Eigen::Vector3d> velocity;  ///< m/s

  int size() const { return static_cast<int>(t.size()); }
};

struct IntegrationOptions {
  bool zero_vertical_velocity = true;  ///< flat-floor: clamp world v_y to 0 each step
  bool semi_implicit = false;          ///< position update uses the post-update velocity
};

/// Forward Euler double integration of bias-corrected accelerations:
///   v_{f+1} = v_f + R_WD(f) (a_f + bias(f)) dt,  p_{f+1} = p_f + v_f dt.
/// Empty knots mean zero bias (the RAW baseline shares this code path).
Trajectory double_integrate(const Sequence& seq, const CorrectionKnots& knots,
                            const IntegrationOptions& opt = {});

/// CSV `t,x,y,z,vx,vy,vz`, 9 significant digits.
void write_trajectory_csv(const Trajectory& traj, const std::string& path);
Trajectory read_trajectory_csv(const std::string& path);

/// Ground-truth poses as a Trajectory (velocities by central differences).
/// Throws SchemaError when the sequence carries no ground truth.
Trajectory gt_trajectory(const Sequence& seq);

/// Constraint frames: multiples of `stride` late enough to carry a full
/// feature window (f >= kWindowFrames), strictly inside the sequence.
std::vector<int> offline_constraint_frames(int n_frames, int stride = 50);

/// Cascade evaluations at the constraint frames of a sequence.
struct RegressedConstraints {
  std::vector<int> frames;
  std::vector<Eigen::Vector2d> velocity;  ///< v_R in S (x, z), m/s
  std::vector<Eigen::Matrix3d> r_sw;      ///< Stabilized<-World per constraint
};

RegressedConstraints regress_constraints(const Sequence& seq, const CascadeModel& model,
                                         const SmoothingConfig& smoothing = {}, int stride = 50);

struct OfflineConfig {
  double lambda = 0.1;
  int knot_spacing = 50;
  int constraint_stride = 50;
  bool horizontal_only = false;
  IntegrationOptions integration;
  SmoothingConfig smoothing;
};

/// Whole-sequence pipeline: regress velocities, solve one global correction
/// problem, double-integrate. lambda >= 1e12 short-circuits to zero knots, so
/// the output is bit-identical to the RAW baseline.
Trajectory run_offline(const Sequence& seq, const CascadeModel& model,
                       const OfflineConfig& cfg = {});

struct OnlineConfig {
  int correction_period = 200;   ///< frames between window solves
  int correction_window = 1000;  ///< trailing frames covered by each solve
  int regression_stride = 50;    ///< frames between cascade evaluations
  int blend_frames = 50;         ///< publication blend-in span
  double lambda = 0.1;
  bool horizontal_only = false;
  IntegrationOptions integration;
  SmoothingConfig smoothing;
};

/// Streaming estimator: integrates every pushed frame with the currently
/// published correction knots (initialized to zero), evaluates the cascade
/// every regression_stride frames once a feature window exists, and every
/// correction_period frames solves a window-local correction problem over the
/// trailing correction_window frames. New knots are published atomically,
/// blended linearly over blend_frames with the prior knots, and the velocity
/// state is re-based to the re-integrated history so later constraints stay
/// anchored to the regressed velocities. Feature smoothing is causal
/// (trailing half-kernel), unlike the offline symmetric smoother.
class OnlineEngine {
 public:
  OnlineEngine(const CascadeModel& model, const OnlineConfig& cfg = {},
               double sample_rate = 200.0);

  /// Throws SchemaError when the timestamp does not increase.
  void push(const SensorFrame& frame);

  /// One final window solve at the last frame (skipped when one just ran
  /// there). Call after the stream ends; idempotent.
  void finish();

  const Trajectory& trajectory() const { return traj_; }
  const CorrectionKnots& published_knots() const { return knots_; }
  int regression_calls() const { return regression_calls_; }
  int solve_count() const { return solve_count_; }

 private:
  void solve_window(int f);
  Eigen::Vector3d effective_bias(int f) const;

  const CascadeModel* model_;
  OnlineConfig cfg_;
  double dt_;
  std::vector<double> kernel_;

  std::vector<SensorFrame> frames_;
  Signal raw_dev_;   ///< 6 x N device channels as pushed
  Signal stab_;      ///< 6 x N causally smoothed, stabilized channels

  Trajectory traj_;
  Eigen::Vector3d v_state_ = Eigen::Vector3d::Zero();
  std::vector<Eigen::Vector3d> v_pure_;  ///< integral with knots_, no blend/zeroing

  CorrectionKnots knots_;       ///< published global knot array
  CorrectionKnots prev_knots_;  ///< snapshot blended against after a publication
  int blend_from_ = -1;         ///< frame of the latest publication, -1 before any

  std::vector<int> c_frames_;
  std::vector<Eigen::Vector2d> c_velocity_;
  std::vector<Eigen::Matrix3d> c_rsw_;

  int last_solved_ = -1;
  int regression_calls_ = 0;
  int solve_count_ = 0;
};

/// Push the whole sequence through an OnlineEngine, finish, and return the
/// trajectory. Deterministic for a fixed frame order.
Trajectory run_online(const Sequence& seq, const CascadeModel& model,
                      const OnlineConfig& cfg = {});

struct ThroughputReport {
  int frames = 0;
  double wall_seconds = 0.0;
  double fps = 0.0;  ///< frames / wall_seconds; hardware-dependent, report-only
  int regression_calls = 0;
  int solve_count = 0;
};

ThroughputReport throughput_report(const Sequence& seq, const CascadeModel& model,
                                   const OnlineConfig& cfg = {});

}  // namespace ridi
