#pragma once

#include <Eigen/Dense>

#include <vector>

#include "ridi/sequence.hpp"
#include "ridi/smoothing.hpp"

namespace ridi {

/// Feature window geometry: 1 s of history at 200 Hz, six channels per frame
/// (stabilized gyro xyz then stabilized linear acceleration xyz), oldest frame
/// first. This layout is normative and baked into the model file.
constexpr int kWindowFrames = 200;
constexpr int kChannelsPerFrame = 6;
constexpr int kFeatureDim = kWindowFrames * kChannelsPerFrame;

using FeatureVector = Eigen::VectorXd;

struct TrainingSample {
  FeatureVector feature;      ///< kFeatureDim
  Eigen::Vector2d target;     ///< horizontal velocity in S: (x, z), m/s
  Placement placement;
  int frame;                  ///< window end frame in the source sequence
};

/// Minimal rotation taking the measured gravity direction onto +y, axis
/// orthogonal to both, so yaw is preserved. Anti-parallel gravity (within
/// 1e-6 rad of -y) rotates 180 degrees about +x by convention.
RotSD stabilizing_rotation(const Vec3<Frame::Device>& gravity);

/// Smoothed device signals rotated into the stabilized frame, plus the
/// per-frame rotations needed elsewhere (R_SD and R_SW).
struct StabilizedSignals {
  Signal channels;            ///< 6 x N: gyro xyz, linacc xyz in S
  std::vector<RotSD> stab;    ///< per-frame stabilizing rotation
};

/// Smoothing happens on raw device-frame channels first (sigma_imu), then each
/// frame is rotated into S. `causal` switches to the trailing-kernel smoother
/// used by the online path.
StabilizedSignals to_stabilized(const Sequence& seq, const SmoothingConfig& cfg = {},
                                bool causal = false);

/// R_SW at frame f: stabilizing rotation composed with the inverse device
/// orientation.
RotSW stabilized_from_world(const SensorFrame& frame);

/// Feature for the window ending at frame f (f >= kWindowFrames - 1).
FeatureVector feature_at(const StabilizedSignals& sig, int f);

std::vector<FeatureVector> features_at_serial(const StabilizedSignals& sig,
                                              const std::vector<int>& frames);
/// OpenMP twin of features_at_serial; bit-identical.
std::vector<FeatureVector> features_at(const StabilizedSignals& sig,
                                       const std::vector<int>& frames);

/// Ground-truth horizontal velocity in S per frame: central differences of
/// ground-truth positions (one-sided at the ends), rotated into S, vertical
/// dropped, then smoothed with sigma_velocity. Throws SchemaError when the
/// sequence has no ground-truth poses.
std::vector<Eigen::Vector2d> ground_truth_velocity(const Sequence& seq,
                                                   const SmoothingConfig& cfg = {});

/// One sample per stride frames, first window ending at frame 199. Returns an
/// empty list when the sequence is shorter than one window. Requires a
/// placement label on the sequence.
std::vector<TrainingSample> make_samples(const Sequence& seq, int stride = 10,
                                         const SmoothingConfig& cfg = {});

}  // namespace ridi
