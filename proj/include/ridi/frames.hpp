#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <array>
#include <cmath>
#include <cstdint>
#include <string>

namespace ridi {

/// Coordinate frames. World is gravity-aligned (+y up); Device is the IMU body
/// frame; Stabilized is the device frame with pitch/roll removed so that +y
/// coincides with the measured gravity direction while yaw is preserved.
enum class Frame { World, Device, Stabilized };

/// Sensor placements, in canonical enumeration order (used for tie-breaking
/// and for the on-disk model layout).
enum class Placement : std::uint8_t { Leg = 0, Bag = 1, Hand = 2, Body = 3 };

constexpr std::array<Placement, 4> kAllPlacements{Placement::Leg, Placement::Bag,
                                                  Placement::Hand, Placement::Body};

const char* to_string(Placement p);
Placement placement_from_string(const std::string& s);

/// 3-vector carrying its frame as a compile-time tag. Mixing frames without an
/// explicit rotation fails to compile.
template <Frame F>
struct Vec3 {
  Eigen::Vector3d v{0.0, 0.0, 0.0};

  Vec3() = default;
  explicit Vec3(const Eigen::Vector3d& in) : v(in) {}
  Vec3(double x, double y, double z) : v(x, y, z) {}

  double x() const { return v.x(); }
  double y() const { return v.y(); }
  double z() const { return v.z(); }

  Vec3 operator+(const Vec3& o) const { return Vec3(v + o.v); }
  Vec3 operator-(const Vec3& o) const { return Vec3(v - o.v); }
  Vec3 operator-() const { return Vec3(-v); }
  Vec3 operator*(double s) const { return Vec3(v * s); }
  Vec3& operator+=(const Vec3& o) {
    v += o.v;
    return *this;
  }
  double dot(const Vec3& o) const { return v.dot(o.v); }
  Vec3 cross(const Vec3& o) const { return Vec3(v.cross(o.v)); }
  double norm() const { return v.norm(); }
};

template <Frame F>
inline Vec3<F> operator*(double s, const Vec3<F>& a) {
  return a * s;
}

/// Rotation taking vectors expressed in frame `From` to frame `To`.
/// Hamilton convention, scalar-first in all serialized forms; unit-norm is an
/// invariant and is restored after every composition.
template <Frame To, Frame From>
struct Rotation {
  Eigen::Quaterniond q{1.0, 0.0, 0.0, 0.0};

  Rotation() = default;
  explicit Rotation(const Eigen::Quaterniond& in) : q(in.normalized()) {}
  Rotation(double w, double x, double y, double z) : q(w, x, y, z) { q.normalize(); }

  static Rotation identity() { return Rotation(); }

  static Rotation from_axis_angle(const Eigen::Vector3d& axis, double angle) {
    return Rotation(Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis.normalized())));
  }

  Vec3<To> operator*(const Vec3<From>& in) const { return Vec3<To>(q * in.v); }

  template <Frame X>
  Rotation<To, X> operator*(const Rotation<From, X>& o) const {
    return Rotation<To, X>(q * o.q);
  }

  Rotation<From, To> inverse() const { return Rotation<From, To>(q.conjugate()); }

  Eigen::Matrix3d matrix() const { return q.toRotationMatrix(); }

  /// Rotation angle in [0, pi].
  double angle() const {
    double w = std::min(1.0, std::abs(q.w()));
    return 2.0 * std::acos(w);
  }
};

using RotWD = Rotation<Frame::World, Frame::Device>;
using RotSD = Rotation<Frame::Stabilized, Frame::Device>;
using RotSW = Rotation<Frame::Stabilized, Frame::World>;

/// Shortest-path spherical interpolation; exact at the endpoints so resampling
/// an already-uniform sequence is a bitwise no-op.
template <Frame To, Frame From>
Rotation<To, From> slerp(const Rotation<To, From>& a, const Rotation<To, From>& b, double t) {
  if (t == 0.0) return a;
  if (t == 1.0) return b;
  return Rotation<To, From>(a.q.slerp(t, b.q));
}

}  // namespace ridi
