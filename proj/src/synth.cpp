#include "ridi/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "ridi/errors.hpp"
#include "ridi/features.hpp"

namespace ridi {

namespace {

constexpr double kMaxSpeed = 3.0;
constexpr double kMinDuration = 10.0;
constexpr double kGravity = 9.81;
constexpr double kTwoPi = 2.0 * M_PI;

double entry_speed(const Segment& s) {
  switch (s.kind) {
    case Segment::Kind::Straight: return s.speed;
    case Segment::Kind::Ramp: return s.v0;
    default: return 0.0;
  }
}

double exit_speed(const Segment& s) {
  switch (s.kind) {
    case Segment::Kind::Straight: return s.speed;
    case Segment::Kind::Ramp: return s.v1;
    default: return 0.0;
  }
}

// Body forward direction for heading theta; +y is up, theta grows to the left.
Eigen::Vector3d heading_dir(double theta) {
  return {std::cos(theta), 0.0, -std::sin(theta)};
}

Eigen::Vector3d lateral_dir(double theta) {  // up x forward
  return {-std::sin(theta), 0.0, -std::cos(theta)};
}

// Deterministic normal sampler (Box-Muller over mt19937_64 bits) so sequence
// bytes do not depend on the standard library's distribution internals.
class GaussDraw {
 public:
  explicit GaussDraw(std::uint64_t seed) : rng_(seed) {}

  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  double operator()() {
    if (have_) {
      have_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(kTwoPi * u2);
    have_ = true;
    return r * std::cos(kTwoPi * u2);
  }

  Eigen::Vector3d unit_vector() {
    while (true) {
      const Eigen::Vector3d v{(*this)(), (*this)(), (*this)()};
      const double n = v.norm();
      if (n > 1e-6) return v / n;
    }
  }

 private:
  std::mt19937_64 rng_;
  bool have_ = false;
  double spare_ = 0.0;
};

// Rotation vector of a unit quaternion (always the short arc).
Eigen::Vector3d quat_log_vec(Eigen::Quaterniond q) {
  if (q.w() < 0.0) q.coeffs() *= -1.0;
  const double vn = q.vec().norm();
  if (vn < 1e-14) return 2.0 * q.vec();
  const double angle = 2.0 * std::atan2(vn, q.w());
  return (angle / vn) * q.vec();
}

struct SegmentState {
  double t0 = 0.0;
  Eigen::Vector3d pos = Eigen::Vector3d::Zero();
  double heading = 0.0;
};

}  // namespace

Segment MotionScript::straight(double speed, double duration, int direction) {
  Segment s;
  s.kind = Segment::Kind::Straight;
  s.speed = speed;
  s.duration = duration;
  s.direction = direction;
  return s;
}

Segment MotionScript::turn(double rate, double duration) {
  Segment s;
  s.kind = Segment::Kind::Turn;
  s.rate = rate;
  s.duration = duration;
  return s;
}

Segment MotionScript::pause(double duration) {
  Segment s;
  s.kind = Segment::Kind::Pause;
  s.duration = duration;
  return s;
}

Segment MotionScript::ramp(double v0, double v1, double duration, int direction) {
  Segment s;
  s.kind = Segment::Kind::Ramp;
  s.v0 = v0;
  s.v1 = v1;
  s.duration = duration;
  s.direction = direction;
  return s;
}

double MotionScript::total_duration() const {
  double total = 0.0;
  for (const Segment& s : segments) total += s.duration;
  return total;
}

void MotionScript::validate() const {
  if (segments.empty()) throw UsageError("motion script has no segments");
  double prev_exit = 0.0;  // scripts start at rest: integration assumes v(0)=0
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const Segment& s = segments[i];
    std::ostringstream where;
    where << "segment " << i;
    if (!(s.duration > 0.0))
      throw UsageError(where.str() + ": duration must be positive");
    if (s.direction != 1 && s.direction != -1)
      throw UsageError(where.str() + ": direction must be +1 or -1");
    const double speeds[] = {s.speed, s.v0, s.v1};
    for (double v : speeds) {
      if (v < 0.0 || v > kMaxSpeed)
        throw UsageError(where.str() + ": speeds must lie in [0, 3] m/s");
    }
    if (std::abs(entry_speed(s) - prev_exit) > 1e-12)
      throw UsageError(where.str() +
                       ": entry speed must match the previous segment's exit "
                       "speed (insert a ramp)");
    prev_exit = exit_speed(s);
  }
  if (total_duration() < kMinDuration)
    throw UsageError("motion script must cover at least 10 s");
}

const PlacementSignature& signature(Placement p) {
  // Axis mixes and ripples keep the four carriage styles apart in device
  // frame; see signature_separation_margin(). Body mirrors Hand's gait terms
  // (yaw pi, fore/lat phases shifted pi) so that a belt clip worn facing
  // backward produces the same case-relative motion as a hand-held device.
  static const PlacementSignature table[4] = {
      /* Leg: trouser pocket, device sideways, strong fore-aft leg swing. */
      {M_PI / 2.0,
       {2.0, 4.0, 0.0},
       {0.45, 4.0, 2.1},
       {0.80, 8.0, 0.7},
       {0.040, 4.0, 0.4},
       {0.010, 4.0, 1.9},
       2,
       {0.35, 8.0, 0.9}},
      /* Bag: shoulder bag, lateral pendulum sway, roll-heavy attitude. */
      {-M_PI / 2.0,
       {1.2, 4.0, 0.3},
       {1.00, 4.0, 1.2},
       {0.50, 8.0, 2.6},
       {0.012, 4.0, 2.8},
       {0.045, 4.0, 0.6},
       0,
       {0.30, 8.0, 2.4}},
      /* Hand: held in front, vertical bob dominates, moderate surge. */
      {0.0,
       {1.0, 4.0, 0.0},
       {0.25, 4.0, 1.0},
       {1.10, 8.0, 0.7},
       {0.030, 4.0, 0.4},
       {0.015, 4.0, 2.2},
       2,
       {0.30, 8.0, 1.3}},
      /* Body: belt clip facing backward; gait terms shadow Hand's. */
      {M_PI,
       {1.0, 4.0, M_PI},
       {0.25, 4.0, 1.0 + M_PI},
       {1.10, 8.0, 0.7},
       {0.030, 4.0, 0.4},
       {0.015, 4.0, 2.2},
       2,
       {0.30, 8.0, 2.24}},
  };
  return table[static_cast<int>(p)];
}

namespace {

// Device-frame acceleration of one signature at 1 m/s, as in-phase and
// quadrature amplitude per (frequency bin, device axis): what a classifier
// working on stabilized windows can actually distinguish. The mount yaw folds
// fore/lat into the device axes; Body's pi yaw plus pi phase shift cancels
// against Hand's gait exactly, so that pair differs only through the ripples,
// and keeping quadrature is what makes that difference visible here.
Eigen::Matrix<double, 12, 1> device_observable(const PlacementSignature& s) {
  auto bin = [](double hz) { return hz < 6.0 ? 0 : 1; };
  double dev[2][3][2] = {};  // [freq bin][device axis x,y,z][cos,sin]
  const double c = std::cos(s.mount_yaw);
  const double sn = std::sin(s.mount_yaw);
  // Body fore maps to device (cos yaw, sin yaw), lateral to (sin yaw, -cos yaw).
  struct Comp {
    OscComponent osc;
    int axis;  // 0 fore, 1 vert, 2 lat
  };
  const Comp comps[] = {{s.fore, 0}, {s.vert, 1}, {s.lat, 2}, {s.ripple, s.ripple_axis}};
  for (const Comp& k : comps) {
    const double a_cos = k.osc.amp * std::cos(k.osc.phase);
    const double a_sin = k.osc.amp * std::sin(k.osc.phase);
    const int b = bin(k.osc.hz);
    if (k.axis == 1) {
      dev[b][1][0] += a_cos;
      dev[b][1][1] += a_sin;
    } else {
      const double fx = k.axis == 0 ? c : sn;
      const double fz = k.axis == 0 ? sn : -c;
      dev[b][0][0] += fx * a_cos;
      dev[b][0][1] += fx * a_sin;
      dev[b][2][0] += fz * a_cos;
      dev[b][2][1] += fz * a_sin;
    }
  }
  Eigen::Matrix<double, 12, 1> d;
  int i = 0;
  for (int b = 0; b < 2; ++b)
    for (int a = 0; a < 3; ++a)
      for (int q = 0; q < 2; ++q) d[i++] = dev[b][a][q];
  return d;
}

}  // namespace

double signature_separation_margin() {
  double margin = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 4; ++a) {
    for (int b = a + 1; b < 4; ++b) {
      const Eigen::Matrix<double, 12, 1> da = device_observable(signature(kAllPlacements[a]));
      const Eigen::Matrix<double, 12, 1> db = device_observable(signature(kAllPlacements[b]));
      margin = std::min(margin, (da - db).norm());
    }
  }
  return margin;
}

PoseTrack generate_poses(const MotionScript& script, Placement placement,
                         const SynthOptions& opt) {
  script.validate();
  if (!(opt.rate > 0.0)) throw UsageError("sample rate must be positive");

  std::vector<SegmentState> starts(script.segments.size());
  std::vector<double> ends(script.segments.size());
  {
    SegmentState st;
    for (std::size_t i = 0; i < script.segments.size(); ++i) {
      starts[i] = st;
      const Segment& s = script.segments[i];
      switch (s.kind) {
        case Segment::Kind::Straight:
          st.pos += heading_dir(st.heading) * (s.direction * s.speed * s.duration);
          break;
        case Segment::Kind::Ramp:
          st.pos += heading_dir(st.heading) *
                    (s.direction * 0.5 * (s.v0 + s.v1) * s.duration);
          break;
        case Segment::Kind::Turn:
          st.heading += s.rate * s.duration;
          break;
        case Segment::Kind::Pause:
          break;
      }
      st.t0 += s.duration;
      ends[i] = st.t0;
    }
  }

  const PlacementSignature& sig = signature(placement);
  // Position amplitude that produces the quoted acceleration amplitude.
  auto pos_amp = [](const OscComponent& c) {
    return c.amp / ((kTwoPi * c.hz) * (kTwoPi * c.hz));
  };
  const double fore_pos = pos_amp(sig.fore);
  const double lat_pos = pos_amp(sig.lat);
  const double vert_pos = pos_amp(sig.vert);
  const double ripple_pos = pos_amp(sig.ripple);

  const double total = script.total_duration();
  const int n = static_cast<int>(std::llround(total * opt.rate)) + 1;

  PoseTrack track;
  track.rate = opt.rate;
  track.t.reserve(n);
  track.position.reserve(n);
  track.body_position.reserve(n);
  track.orientation.reserve(n);
  track.speed.reserve(n);
  track.heading.reserve(n);

  std::size_t seg = 0;
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / opt.rate;
    while (seg + 1 < script.segments.size() && t > ends[seg] + 1e-9) ++seg;
    const Segment& s = script.segments[seg];
    const SegmentState& st = starts[seg];
    const double tau = std::clamp(t - st.t0, 0.0, s.duration);

    Eigen::Vector3d body = st.pos;
    double theta = st.heading;
    double speed = 0.0;
    int dir = 1;
    switch (s.kind) {
      case Segment::Kind::Straight:
        body += heading_dir(theta) * (s.direction * s.speed * tau);
        speed = s.speed;
        dir = s.direction;
        break;
      case Segment::Kind::Ramp: {
        const double dv = (s.v1 - s.v0) / s.duration;
        body += heading_dir(theta) * (s.direction * (s.v0 * tau + 0.5 * dv * tau * tau));
        speed = s.v0 + dv * tau;
        dir = s.direction;
        break;
      }
      case Segment::Kind::Turn:
        theta += s.rate * tau;
        break;
      case Segment::Kind::Pause:
        break;
    }

    // Gait oscillation: position amplitude scales with walking speed, making
    // the acceleration amplitude sig.*.amp per m/s. Phases run on the session
    // clock and every frequency is a whole number of cycles per quarter
    // second, so windows sampled on a 50-frame grid see each component at a
    // fixed phase. Only the fore-aft surge flips when walking backward.
    auto osc = [&](const OscComponent& c) {
      return std::sin(kTwoPi * c.hz * t + c.phase);
    };
    const double amp = opt.oscillation_scale * speed;
    Eigen::Vector3d offset =
        heading_dir(theta) * (dir * amp * fore_pos * osc(sig.fore)) +
        lateral_dir(theta) * (amp * lat_pos * osc(sig.lat)) +
        Eigen::Vector3d::UnitY() * (amp * vert_pos * osc(sig.vert));
    // Mount tremor: fixed amplitude, present even at rest, tags the placement.
    const double ripple = opt.oscillation_scale * ripple_pos * osc(sig.ripple);
    switch (sig.ripple_axis) {
      case 0:
        offset += heading_dir(theta) * ripple;
        break;
      case 1:
        offset += Eigen::Vector3d::UnitY() * ripple;
        break;
      default:
        offset += lateral_dir(theta) * ripple;
        break;
    }

    const double sway = opt.attitude_scale * speed;
    const double pitch = sway * sig.pitch.amp * osc(sig.pitch);
    const double roll = sway * sig.roll.amp * osc(sig.roll);
    Eigen::Quaterniond q =
        Eigen::Quaterniond(Eigen::AngleAxisd(theta + sig.mount_yaw, Eigen::Vector3d::UnitY())) *
        Eigen::Quaterniond(Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitX())) *
        Eigen::Quaterniond(Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitZ()));
    q.normalize();

    track.t.push_back(t);
    track.body_position.push_back(body);
    track.position.push_back(body + offset);
    track.orientation.push_back(q);
    track.speed.push_back(speed);
    track.heading.push_back(theta);
  }
  return track;
}

void NoiseSpec::validate() const {
  if (gyro_noise_std < 0.0 || acc_noise_std < 0.0 || gravity_tilt_std < 0.0 ||
      bias_const_mag < 0.0)
    throw UsageError("noise magnitudes must be non-negative");
  if (bias_sin_amp.size() != bias_sin_period.size())
    throw UsageError("bias sinusoid amplitudes and periods must pair up");
  for (double a : bias_sin_amp)
    if (a < 0.0) throw UsageError("bias sinusoid amplitudes must be non-negative");
  for (double p : bias_sin_period) {
    // Periods above 5 s keep the bias spectrum strictly below 0.2 Hz, within
    // what 50-frame correction knots can represent.
    if (!(p > 5.0))
      throw UsageError("bias sinusoid periods must exceed 5 s");
  }
}

SynthResult derive_imu(const PoseTrack& poses, Placement placement,
                       const NoiseSpec& noise) {
  noise.validate();
  const int n = static_cast<int>(poses.t.size());
  if (n < 3) throw UsageError("pose track too short to differentiate");
  const double dt = 1.0 / poses.rate;

  GaussDraw draw(noise.seed);
  // Fixed draw order: bias direction, sinusoid phases (axis-major per
  // sinusoid), gravity tilt, then per-frame gyro and accelerometer noise.
  const Eigen::Vector3d bias_const = noise.bias_const_mag * draw.unit_vector();
  const std::size_t k = noise.bias_sin_amp.size();
  std::vector<Eigen::Vector3d> sin_phase(k);
  for (std::size_t j = 0; j < k; ++j)
    for (int a = 0; a < 3; ++a) sin_phase[j][a] = kTwoPi * draw.uniform();
  const Eigen::Vector3d tilt_axis = draw.unit_vector();
  const double tilt_angle = noise.gravity_tilt_std * draw();
  const Eigen::Quaterniond tilt(Eigen::AngleAxisd(tilt_angle, tilt_axis));
  const Eigen::Vector3d gravity_world = tilt * Eigen::Vector3d(0.0, kGravity, 0.0);

  auto bias_at = [&](double t) {
    Eigen::Vector3d b = bias_const;
    for (std::size_t j = 0; j < k; ++j)
      for (int a = 0; a < 3; ++a)
        b[a] += noise.bias_sin_amp[j] *
                std::sin(kTwoPi * t / noise.bias_sin_period[j] + sin_phase[j][a]);
    return b;
  };

  SynthResult out;
  out.seq.sample_rate = poses.rate;
  out.seq.placement = placement;
  out.seq.subject = "synth";
  out.seq.frames.resize(n);
  out.injected_bias.resize(n);

  std::vector<Eigen::Vector3d> acc_w(n);
  std::vector<Eigen::Vector3d> gyro_d(n);
  for (int i = 1; i + 1 < n; ++i) {
    acc_w[i] = (poses.position[i + 1] - 2.0 * poses.position[i] + poses.position[i - 1]) /
               (dt * dt);
    const Eigen::Quaterniond rel =
        poses.orientation[i - 1].conjugate() * poses.orientation[i + 1];
    gyro_d[i] = quat_log_vec(rel) / (2.0 * dt);
  }
  acc_w[0] = acc_w[1];
  acc_w[n - 1] = acc_w[n - 2];
  gyro_d[0] = gyro_d[1];
  gyro_d[n - 1] = gyro_d[n - 2];

  for (int i = 0; i < n; ++i) {
    const Eigen::Quaterniond r_dw = poses.orientation[i].conjugate();
    const Eigen::Vector3d bias = bias_at(poses.t[i]);
    const Eigen::Vector3d gyro_noise{noise.gyro_noise_std * draw(),
                                     noise.gyro_noise_std * draw(),
                                     noise.gyro_noise_std * draw()};
    const Eigen::Vector3d acc_noise{noise.acc_noise_std * draw(),
                                    noise.acc_noise_std * draw(),
                                    noise.acc_noise_std * draw()};

    SensorFrame& f = out.seq.frames[i];
    f.t = poses.t[i];
    f.gyro = Vec3<Frame::Device>(gyro_d[i] + gyro_noise);
    f.linacc = Vec3<Frame::Device>(r_dw * acc_w[i] + acc_noise + bias);
    f.gravity = Vec3<Frame::Device>(r_dw * gravity_world);
    f.orientation = RotWD(poses.orientation[i]);
    f.gt_position = Vec3<Frame::World>(poses.position[i]);
    f.gt_orientation = RotWD(poses.orientation[i]);
    out.injected_bias[i] = bias;
  }
  return out;
}

SynthResult synthesize(const MotionScript& script, Placement placement,
                       const NoiseSpec& noise, const SynthOptions& opt) {
  return derive_imu(generate_poses(script, placement, opt), placement, noise);
}

Sequence make_tilted_copy(const Sequence& seq, const Eigen::Vector3d& h) {
  if (seq.frames.empty()) throw UsageError("cannot tilt an empty sequence");
  if (h.norm() < 1e-12) throw UsageError("target gravity direction must be non-zero");

  const Eigen::Vector3d g0 = seq.frames.front().gravity.v;
  if (g0.norm() < 1e-12) throw UsageError("sequence gravity must be non-zero");
  const Eigen::Vector3d g0_dir = g0.normalized();
  for (const SensorFrame& f : seq.frames) {
    if ((f.gravity.v.normalized() - g0_dir).norm() > 1e-9)
      throw UsageError(
          "tilted copies require a constant device gravity direction");
  }

  // Zero-twist remount: send the current gravity direction to +y, then +y to
  // the requested direction. stabilizing_rotation(T g) * T then reduces to
  // stabilizing_rotation(g), which is what makes features invariant.
  const Eigen::Quaterniond stab_g =
      stabilizing_rotation(Vec3<Frame::Device>(g0_dir)).q;
  const Eigen::Quaterniond stab_h =
      stabilizing_rotation(Vec3<Frame::Device>(h.normalized())).q;
  const Eigen::Quaterniond t_rot = stab_h.conjugate() * stab_g;
  const Eigen::Quaterniond t_inv = t_rot.conjugate();

  Sequence out = seq;
  for (SensorFrame& f : out.frames) {
    f.gyro = Vec3<Frame::Device>(t_rot * f.gyro.v);
    f.linacc = Vec3<Frame::Device>(t_rot * f.linacc.v);
    f.gravity = Vec3<Frame::Device>(t_rot * f.gravity.v);
    f.orientation = RotWD(f.orientation.q * t_inv);
    if (f.gt_orientation) f.gt_orientation = RotWD(f.gt_orientation->q * t_inv);
  }
  return out;
}

}  // namespace ridi
