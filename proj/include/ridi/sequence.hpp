#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ridi/frames.hpp"

namespace ridi {

/// One synchronized 200 Hz sample. Gyro and linear acceleration are raw device
/// readings; gravity is the system gravity vector (device frame, |g| ~ 9.81);
/// orientation is the system attitude World<-Device. Ground-truth channels are
/// present on capture-rig and synthetic data only.
struct SensorFrame {
  double t = 0.0;                       ///< seconds
  Vec3<Frame::Device> gyro;             ///< rad/s
  Vec3<Frame::Device> linacc;           ///< m/s^2, gravity already removed
  Vec3<Frame::Device> gravity;          ///< m/s^2
  RotWD orientation;                    ///< World<-Device
  std::optional<Vec3<Frame::World>> gt_position;  ///< meters
  std::optional<RotWD> gt_orientation;
};

/// Uniformly sampled sensor sequence.
struct Sequence {
  std::vector<SensorFrame> frames;
  double sample_rate = 200.0;  ///< Hz
  std::optional<Placement> placement;
  std::string subject;

  double dt() const { return 1.0 / sample_rate; }
  int size() const { return static_cast<int>(frames.size()); }
  bool has_ground_truth() const {
    return !frames.empty() && frames.front().gt_position.has_value();
  }

  /// Enforces the type invariants: >= 200 frames, uniform timestamps within
  /// 1e-6 s, gravity magnitude in [9.0, 10.5]. Throws SchemaError.
  void validate() const;
};

}  // namespace ridi
