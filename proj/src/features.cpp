#include "ridi/features.hpp"

#include <cmath>
#include <string>

#include "ridi/errors.hpp"

namespace ridi {

RotSD stabilizing_rotation(const Vec3<Frame::Device>& gravity) {
  Eigen::Vector3d g = gravity.v;
  double n = g.norm();
  if (n <= 0.0) throw SchemaError("zero gravity vector");
  g /= n;
  const Eigen::Vector3d up(0.0, 1.0, 0.0);
  double c = g.dot(up);
  if (c <= -1.0 + 5e-13) {
    // Anti-parallel within ~1e-6 rad: rotation axis is +x by convention.
    return RotSD(Eigen::Quaterniond(0.0, 1.0, 0.0, 0.0));
  }
  // Half-angle form of the minimal rotation taking g to up.
  Eigen::Quaterniond q;
  q.w() = 1.0 + c;
  q.vec() = g.cross(up);
  q.normalize();
  return RotSD(q);
}

RotSW stabilized_from_world(const SensorFrame& frame) {
  return stabilizing_rotation(frame.gravity) * frame.orientation.inverse();
}

StabilizedSignals to_stabilized(const Sequence& seq, const SmoothingConfig& cfg, bool causal) {
  const int n = seq.size();
  Signal device(6);
  for (auto& c : device) c.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const SensorFrame& f = seq.frames[static_cast<std::size_t>(i)];
    for (int a = 0; a < 3; ++a) {
      device[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)] = f.gyro.v[a];
      device[static_cast<std::size_t>(3 + a)][static_cast<std::size_t>(i)] = f.linacc.v[a];
    }
  }
  Signal smoothed = causal ? smooth_channels_causal(device, cfg.sigma_imu)
                           : smooth_channels(device, cfg.sigma_imu);

  StabilizedSignals out;
  out.channels.assign(6, std::vector<double>(static_cast<std::size_t>(n)));
  out.stab.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const std::size_t ui = static_cast<std::size_t>(i);
    RotSD r = stabilizing_rotation(seq.frames[ui].gravity);
    out.stab[ui] = r;
    Eigen::Vector3d gyro(smoothed[0][ui], smoothed[1][ui], smoothed[2][ui]);
    Eigen::Vector3d acc(smoothed[3][ui], smoothed[4][ui], smoothed[5][ui]);
    Eigen::Vector3d gs = r.q * gyro;
    Eigen::Vector3d as = r.q * acc;
    for (int a = 0; a < 3; ++a) {
      out.channels[static_cast<std::size_t>(a)][ui] = gs[a];
      out.channels[static_cast<std::size_t>(3 + a)][ui] = as[a];
    }
  }
  return out;
}

FeatureVector feature_at(const StabilizedSignals& sig, int f) {
  const int n = static_cast<int>(sig.channels[0].size());
  if (f < kWindowFrames - 1 || f >= n)
    throw UsageError("feature window ending at frame " + std::to_string(f) +
                     " out of range for " + std::to_string(n) + " frames");
  FeatureVector x(kFeatureDim);
  const int start = f - (kWindowFrames - 1);
  for (int i = 0; i < kWindowFrames; ++i)
    for (int c = 0; c < kChannelsPerFrame; ++c)
      x[i * kChannelsPerFrame + c] =
          sig.channels[static_cast<std::size_t>(c)][static_cast<std::size_t>(start + i)];
  if (!x.allFinite()) throw SchemaError("non-finite feature at frame " + std::to_string(f));
  return x;
}

std::vector<FeatureVector> features_at_serial(const StabilizedSignals& sig,
                                              const std::vector<int>& frames) {
  std::vector<FeatureVector> out(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) out[i] = feature_at(sig, frames[i]);
  return out;
}

std::vector<FeatureVector> features_at(const StabilizedSignals& sig,
                                       const std::vector<int>& frames) {
  std::vector<FeatureVector> out(frames.size());
  const int m = static_cast<int>(frames.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i)
    out[static_cast<std::size_t>(i)] = feature_at(sig, frames[static_cast<std::size_t>(i)]);
  return out;
}

std::vector<Eigen::Vector2d> ground_truth_velocity(const Sequence& seq,
                                                   const SmoothingConfig& cfg) {
  const int n = seq.size();
  if (!seq.has_ground_truth()) throw SchemaError("sequence has no ground-truth poses");
  if (n < 2) throw SchemaError("need at least 2 frames for velocities");
  const double dt = seq.dt();

  Signal vel(2);
  vel[0].resize(static_cast<std::size_t>(n));
  vel[1].resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const std::size_t ui = static_cast<std::size_t>(i);
    if (!seq.frames[ui].gt_position)
      throw SchemaError("missing ground-truth pose at frame " + std::to_string(i));
    Eigen::Vector3d v;
    if (i == 0)
      v = (seq.frames[1].gt_position->v - seq.frames[0].gt_position->v) / dt;
    else if (i == n - 1)
      v = (seq.frames[static_cast<std::size_t>(n - 1)].gt_position->v -
           seq.frames[static_cast<std::size_t>(n - 2)].gt_position->v) /
          dt;
    else
      v = (seq.frames[ui + 1].gt_position->v - seq.frames[ui - 1].gt_position->v) / (2.0 * dt);
    Eigen::Vector3d vs = stabilized_from_world(seq.frames[ui]).q * v;
    vel[0][ui] = vs.x();
    vel[1][ui] = vs.z();
  }
  Signal smoothed = smooth_channels(vel, cfg.sigma_velocity);
  std::vector<Eigen::Vector2d> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const std::size_t ui = static_cast<std::size_t>(i);
    out[ui] = Eigen::Vector2d(smoothed[0][ui], smoothed[1][ui]);
  }
  return out;
}

std::vector<TrainingSample> make_samples(const Sequence& seq, int stride,
                                         const SmoothingConfig& cfg) {
  if (stride < 1) throw UsageError("stride must be >= 1");
  if (seq.size() < kWindowFrames) return {};
  if (!seq.placement) throw SchemaError("sequence has no placement label");

  StabilizedSignals sig = to_stabilized(seq, cfg);
  std::vector<Eigen::Vector2d> vel = ground_truth_velocity(seq, cfg);

  std::vector<int> frames;
  for (int f = kWindowFrames - 1; f < seq.size(); f += stride) frames.push_back(f);
  std::vector<FeatureVector> feats = features_at(sig, frames);

  std::vector<TrainingSample> out;
  out.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    TrainingSample s;
    s.feature = std::move(feats[i]);
    s.target = vel[static_cast<std::size_t>(frames[i])];
    if (s.target.norm() > 5.0)
      throw SchemaError("ground-truth speed " + std::to_string(s.target.norm()) +
                        " m/s exceeds 5 m/s at frame " + std::to_string(frames[i]));
    s.placement = *seq.placement;
    s.frame = frames[i];
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace ridi
