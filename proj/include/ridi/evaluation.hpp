#pragma once

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

#include "ridi/cascade.hpp"
#include "ridi/integrator.hpp"
#include "ridi/sequence.hpp"

namespace ridi {

/// Yaw rotation plus translation acting on the horizontal (x, z) coordinates;
/// the vertical coordinate passes through untouched.
struct RigidTransform2D {
  double angle = 0.0;
  Eigen::Vector2d translation = Eigen::Vector2d::Zero();

  Eigen::Vector2d apply(const Eigen::Vector2d& p) const;
  Eigen::Vector3d apply(const Eigen::Vector3d& p) const;
};

/// Closed-form least-squares rigid alignment of the estimate onto the
/// reference over the first `window` frames (fewer when the trajectories are
/// shorter). Coincident points degrade gracefully to an identity rotation
/// with a centroid translation.
RigidTransform2D align(const Trajectory& estimate, const Trajectory& reference,
                       int window = 2000);

double horizontal_path_length(const Trajectory& t);

/// Mean horizontal distance between the transformed estimate and the
/// reference, over all frames.
double mean_position_error(const Trajectory& estimate, const Trajectory& reference,
                           const RigidTransform2D& xf);

struct EvalReport {
  std::string tag;
  double mpe_m = 0.0;
  double mpe_ratio = 0.0;  ///< mpe_m over reference path length; NaN if degenerate
};

EvalReport evaluate(const Trajectory& estimate, const Trajectory& reference,
                    const std::string& tag, int align_window = 2000);

/// Double integration with no correction at all.
Trajectory baseline_raw(const Sequence& seq, const IntegrationOptions& opt = {});

/// Keeps the regressed speed but takes the heading from the device yaw
/// (orientation with pitch/roll removed), so it cannot represent motion that
/// is not along the device forward axis.
Trajectory baseline_ridi_mag(const Sequence& seq, const CascadeModel& model,
                             const SmoothingConfig& smoothing = {}, int stride = 50);

/// Keeps the regressed direction but replaces the magnitude with the mean
/// ground-truth speed, so it cannot represent speed changes.
Trajectory baseline_ridi_ori(const Sequence& seq, const CascadeModel& model,
                             const SmoothingConfig& smoothing = {}, int stride = 50);

/// Runs the offline pipeline once per regularizer value and reports the MPE
/// ratio against ground truth; results keep the input order.
std::vector<std::pair<double, double>> lambda_sweep(const Sequence& seq,
                                                    const CascadeModel& model,
                                                    const std::vector<double>& lambdas,
                                                    const OfflineConfig& base = {});

/// Top-down SVG plot of several trajectories with a legend and a scale bar.
void write_overlay_svg(const std::string& path,
                       const std::vector<std::pair<std::string, const Trajectory*>>& tracks,
                       const std::string& title = {});

void write_eval_csv(const std::string& path, const std::vector<EvalReport>& reports);

}  // namespace ridi
