#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cstdint>
#include <vector>

#include "ridi/sequence.hpp"

namespace ridi {

/// One motion segment. Turns happen in place (entry speed must be zero), so
/// every segment integrates in closed form and scripted loops close exactly.
struct Segment {
  enum class Kind { Straight, Turn, Pause, Ramp };
  Kind kind = Kind::Pause;
  double duration = 0.0;  ///< seconds
  double speed = 0.0;     ///< straight, m/s
  double rate = 0.0;      ///< turn, rad/s (positive = left)
  double v0 = 0.0;        ///< ramp start speed
  double v1 = 0.0;        ///< ramp end speed
  int direction = 1;      ///< +1 walk forward, -1 walk backward (straight/ramp)
};

struct MotionScript {
  std::vector<Segment> segments;

  static Segment straight(double speed, double duration, int direction = 1);
  static Segment turn(double rate, double duration);
  static Segment pause(double duration);
  static Segment ramp(double v0, double v1, double duration, int direction = 1);

  double total_duration() const;

  /// Speeds within [0, 3] m/s, total duration >= 10 s, segment boundary
  /// speeds continuous (so positions stay C1), turns only at rest.
  void validate() const;
};

/// One sinusoidal component of a carriage signature. Frequencies are always
/// multiples of 4 Hz (whole cycles per 50 frames at 200 Hz) and phases are
/// locked to the session clock, so feature windows sampled on a 50-frame grid
/// always see the component at the same phase. That keeps the windowed signal
/// family affine in walking speed, which is what lets a linear model read
/// speed back out of it.
struct OscComponent {
  double amp = 0.0;    ///< m/s^2 (or rad for sway) at 1 m/s walking speed
  double hz = 4.0;
  double phase = 0.0;  ///< rad at t = 0
};

/// Carriage model for one placement: a fixed device-to-body yaw, a gait
/// oscillation whose acceleration amplitude scales linearly with speed
/// (position amplitude amp / (2 pi f)^2), an attitude sway, and a
/// speed-independent "carriage ripple" (micro-tremor of the mount, present
/// even at rest) that tags the placement for the classifier. The gait's
/// fore-aft surge flips sign when walking backward; the ripple belongs to
/// the mount, so it keeps its phase regardless of walking direction.
///
/// Body deliberately shadows Hand: mount yaw pi with fore/lat phases shifted
/// by pi produces the exact same device-frame speed-scaled signals while the
/// velocity targets point the opposite way. Only the ripples tell the two
/// apart, and the ripples carry no speed, so a single pooled regressor
/// cannot fit both placements; the classifier + per-placement cascade can.
struct PlacementSignature {
  double mount_yaw;              ///< rad, device forward vs body forward
  OscComponent fore, lat, vert;  ///< body-axis gait surge, m/s^2 at 1 m/s
  OscComponent pitch, roll;      ///< device-axis sway, rad at 1 m/s
  int ripple_axis;               ///< 0 = fore, 1 = vert, 2 = lat (body axes)
  OscComponent ripple;           ///< fixed amplitude m/s^2, speed-independent
};

const PlacementSignature& signature(Placement p);

/// Minimum pairwise distance between placements in device-frame observable
/// space: in-phase and quadrature acceleration amplitudes per device axis and
/// frequency (gait at 1 m/s plus ripple). Hand and Body share their gait
/// terms by design, so their margin is set entirely by the ripples; the
/// suite asserts the minimum stays above 0.25 m/s^2.
double signature_separation_margin();

struct PoseTrack {
  double rate = 200.0;
  std::vector<double> t;
  std::vector<Eigen::Vector3d> position;        ///< device position, world, meters
  std::vector<Eigen::Vector3d> body_position;   ///< script path before oscillation
  std::vector<Eigen::Quaterniond> orientation;  ///< World<-Device
  std::vector<double> speed;                    ///< scalar body speed
  std::vector<double> heading;                  ///< body yaw, rad
};

struct SynthOptions {
  double rate = 200.0;
  double oscillation_scale = 1.0;  ///< 0 removes the position oscillation
  double attitude_scale = 1.0;     ///< 0 removes pitch/roll wobble (tilt tests)
};

/// Sampled ground-truth poses: body path from the script, plus the placement
/// signature oscillation and device mount orientation.
PoseTrack generate_poses(const MotionScript& script, Placement placement,
                         const SynthOptions& opt = {});

/// Sensor error model. The bias is a per-axis constant plus low-frequency
/// sinusoids; periods must stay above 5 s so the spectrum sits strictly below
/// 0.2 Hz and the 50-frame correction knots can represent it.
struct NoiseSpec {
  double gyro_noise_std = 0.01;    ///< rad/s
  double acc_noise_std = 0.04;     ///< m/s^2
  double gravity_tilt_std = 0.003; ///< rad, constant per-sequence tilt
  double bias_const_mag = 0.15;    ///< m/s^2, constant offset magnitude
  std::vector<double> bias_sin_amp = {0.05, 0.03};     ///< m/s^2
  std::vector<double> bias_sin_period = {11.0, 23.0};  ///< s, > 5
  std::uint64_t seed = 1;

  void validate() const;

  static NoiseSpec clean(std::uint64_t seed = 1) {
    NoiseSpec n;
    n.gyro_noise_std = 0.0;
    n.acc_noise_std = 0.0;
    n.gravity_tilt_std = 0.0;
    n.bias_const_mag = 0.0;
    n.bias_sin_amp.clear();
    n.bias_sin_period.clear();
    n.seed = seed;
    return n;
  }
};

struct SynthResult {
  Sequence seq;
  std::vector<Eigen::Vector3d> injected_bias;  ///< device frame, one per frame
};

/// Inverse sensor model: linear acceleration from central second differences
/// of the positions (endpoints copied), gyro from quaternion log increments,
/// gravity from the (optionally tilted) world vertical. Then white noise and
/// the bias track are injected; the bias is returned for oracle tests.
SynthResult derive_imu(const PoseTrack& poses, Placement placement,
                       const NoiseSpec& noise = {});

/// generate_poses + derive_imu.
SynthResult synthesize(const MotionScript& script, Placement placement,
                       const NoiseSpec& noise = {}, const SynthOptions& opt = {});

/// Remounted copy of a sequence: rotates every device-frame channel by the
/// zero-twist rotation taking the sequence's (constant) gravity direction to
/// `h`, and composes orientations accordingly. Features are invariant to this
/// family. Requires the device gravity direction constant over the sequence.
Sequence make_tilted_copy(const Sequence& seq, const Eigen::Vector3d& h);

}  // namespace ridi
