#include "handover/se3.hpp"

#include <cmath>
#include <stdexcept>

namespace handover
{

Mat3 skew(const Vec3 & w)
{
  Mat3 S;
  S << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
       -w.y(), w.x(), 0.0;
  return S;
}

UnitQuaternion::UnitQuaternion() : w_(1.0), v_(Vec3::Zero()) {}

UnitQuaternion::UnitQuaternion(double w, double x, double y, double z) : UnitQuaternion(w, Vec3(x, y, z)) {}

UnitQuaternion::UnitQuaternion(double w, const Vec3 & v) : w_(w), v_(v)
{
  const double n = std::sqrt(w_ * w_ + v_.squaredNorm());
  if(!(n > 0.0) || !std::isfinite(n))
  {
    throw std::invalid_argument("UnitQuaternion: cannot normalize a zero or non-finite quaternion");
  }
  // already unit to rounding: keep the exact components (stable serialization round trips)
  if(n != 1.0)
  {
    w_ /= n;
    v_ /= n;
  }
}

UnitQuaternion UnitQuaternion::from_unit(double w, const Vec3 & v)
{
  if(!(std::abs(std::sqrt(w * w + v.squaredNorm()) - 1.0) <= 1e-9))
  {
    throw std::invalid_argument("UnitQuaternion: components are not unit norm");
  }
  return UnitQuaternion(Raw{}, w, v);
}

UnitQuaternion UnitQuaternion::from_axis_angle(const Vec3 & axis, double angle)
{
  const double n = axis.norm();
  if(n == 0.0)
  {
    return {};
  }
  return {std::cos(0.5 * angle), std::sin(0.5 * angle) * axis / n};
}

UnitQuaternion UnitQuaternion::exp(const Vec3 & rotation_vector)
{
  const double angle = rotation_vector.norm();
  if(angle < 1e-12)
  {
    // second-order expansion keeps the map smooth at the origin
    return {1.0 - angle * angle / 8.0, 0.5 * rotation_vector};
  }
  return {std::cos(0.5 * angle), std::sin(0.5 * angle) / angle * rotation_vector};
}

UnitQuaternion UnitQuaternion::from_rotation(const Mat3 & R)
{
  const Eigen::Quaterniond q(R);
  UnitQuaternion out(q.w(), q.x(), q.y(), q.z());
  return out.w() < 0.0 ? out.negated() : out;
}

UnitQuaternion UnitQuaternion::inverse() const
{
  UnitQuaternion out = *this;
  out.v_ = -v_;
  return out;
}

UnitQuaternion UnitQuaternion::negated() const
{
  UnitQuaternion out = *this;
  out.w_ = -w_;
  out.v_ = -v_;
  return out;
}

double UnitQuaternion::dot(const UnitQuaternion & other) const
{
  return w_ * other.w_ + v_.dot(other.v_);
}

UnitQuaternion UnitQuaternion::aligned_with(const UnitQuaternion & reference) const
{
  return dot(reference) < 0.0 ? negated() : *this;
}

Mat3 UnitQuaternion::to_rotation() const
{
  const Mat3 S = skew(v_);
  return Mat3::Identity() + 2.0 * w_ * S + 2.0 * S * S;
}

Vec3 UnitQuaternion::rotate(const Vec3 & p) const
{
  const Vec3 t = 2.0 * v_.cross(p);
  return p + w_ * t + v_.cross(t);
}

Vec3 UnitQuaternion::log() const
{
  const double sign = w_ < 0.0 ? -1.0 : 1.0;
  const Vec3 v = sign * v_;
  const double s = v.norm();
  const double angle = 2.0 * std::atan2(s, sign * w_);
  if(s < 1e-12)
  {
    return 2.0 * v / (sign * w_);
  }
  return angle / s * v;
}

UnitQuaternion operator*(const UnitQuaternion & a, const UnitQuaternion & b)
{
  return {a.w() * b.w() - a.vec().dot(b.vec()), ominus(a, b)};
}

Vec3 ominus(const UnitQuaternion & a, const UnitQuaternion & b)
{
  return b.w() * a.vec() + a.w() * b.vec() + a.vec().cross(b.vec());
}

UnitQuaternion integrate(const UnitQuaternion & q, const Vec3 & omega, double dt)
{
  return UnitQuaternion::exp(omega * dt) * q;
}

double geodesic_angle(const UnitQuaternion & a, const UnitQuaternion & b)
{
  const Vec3 v = ominus(a, b.inverse());
  const double w = a.w() * b.w() + a.vec().dot(b.vec());
  return 2.0 * std::atan2(v.norm(), std::abs(w));
}

Mat3 rotation_about(const Vec3 & axis, double angle)
{
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

Vec3 log_map(const Mat3 & R)
{
  return UnitQuaternion::from_rotation(R).log();
}

Pose Pose::inverse() const
{
  const UnitQuaternion qi = orientation.inverse();
  return {-qi.rotate(position), qi};
}

Pose operator*(const Pose & a, const Pose & b)
{
  return {a.transform(b.position), a.orientation * b.orientation};
}

} // namespace handover
