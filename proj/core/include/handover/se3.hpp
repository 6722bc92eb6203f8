#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace handover
{

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Skew-symmetric matrix such that skew(w) * v == w.cross(v).
Mat3 skew(const Vec3 & w);

/**
 * Unit quaternion in (scalar, vector) order.
 *
 * Every constructor re-normalizes, so a UnitQuaternion always has norm 1 up
 * to rounding. q and -q represent the same rotation; nothing here picks a
 * sign except from_rotation() (scalar part >= 0) and aligned_with().
 */
class UnitQuaternion
{
public:
  UnitQuaternion();
  UnitQuaternion(double w, double x, double y, double z);
  UnitQuaternion(double w, const Vec3 & v);

  static UnitQuaternion identity() { return {}; }
  static UnitQuaternion from_axis_angle(const Vec3 & axis, double angle);
  /// Exponential of a rotation vector (axis * angle).
  static UnitQuaternion exp(const Vec3 & rotation_vector);
  static UnitQuaternion from_rotation(const Mat3 & R);
  /// Keep the components bit-for-bit; throws unless the norm is 1 within 1e-9.
  static UnitQuaternion from_unit(double w, const Vec3 & v);

  double w() const { return w_; }
  const Vec3 & vec() const { return v_; }

  UnitQuaternion inverse() const;
  UnitQuaternion negated() const;
  double dot(const UnitQuaternion & other) const;

  /// Same rotation with the sign that is closest to `reference`.
  UnitQuaternion aligned_with(const UnitQuaternion & reference) const;

  Mat3 to_rotation() const;
  Vec3 rotate(const Vec3 & v) const;

  /// Rotation vector (axis * angle), angle in [0, pi].
  Vec3 log() const;

  Eigen::Vector4d wxyz() const { return {w_, v_.x(), v_.y(), v_.z()}; }

private:
  struct Raw {};
  UnitQuaternion(Raw, double w, const Vec3 & v) : w_(w), v_(v) {}

  double w_;
  Vec3 v_;
};

/// Hamilton product; R(a * b) == R(a) * R(b).
UnitQuaternion operator*(const UnitQuaternion & a, const UnitQuaternion & b);

/// Vector part of a * b: b.w a.v + a.w b.v + a.v x b.v.
Vec3 ominus(const UnitQuaternion & a, const UnitQuaternion & b);

/// Rotate q by the exponential of a world-frame angular velocity held for dt.
UnitQuaternion integrate(const UnitQuaternion & q, const Vec3 & omega, double dt);

/// Angle in [0, pi] of the rotation taking b onto a.
double geodesic_angle(const UnitQuaternion & a, const UnitQuaternion & b);

Mat3 rotation_about(const Vec3 & axis, double angle);

/// Rotation vector of a rotation matrix.
Vec3 log_map(const Mat3 & R);

/// Position + orientation of a frame, R7 in (x y z | w x y z) layout.
struct Pose
{
  Vec3 position = Vec3::Zero();
  UnitQuaternion orientation;

  static Pose identity() { return {}; }

  Mat3 rotation() const { return orientation.to_rotation(); }
  Vec3 transform(const Vec3 & p) const { return position + orientation.rotate(p); }
  Pose inverse() const;
};

/// Frame composition: (a * b) maps b-local coordinates through a.
Pose operator*(const Pose & a, const Pose & b);

} // namespace handover
