#include "handover/trajectory.hpp"

#include <algorithm>
#include <stdexcept>

namespace handover
{

MinJerkSample min_jerk(double s0, double s1, double duration, double t)
{
  if(!(duration > 0.0))
  {
    throw std::invalid_argument("min_jerk: duration must be positive");
  }
  const double tau = std::clamp(t, 0.0, duration) / duration;
  const double tau2 = tau * tau;
  const double tau3 = tau2 * tau;
  const double delta = s1 - s0;
  const double T = duration;
  MinJerkSample out;
  out.position = s0 + delta * (10.0 * tau3 - 15.0 * tau3 * tau + 6.0 * tau3 * tau2);
  out.velocity = delta / T * (30.0 * tau2 - 60.0 * tau3 + 30.0 * tau2 * tau2);
  out.acceleration = delta / (T * T) * (60.0 * tau - 180.0 * tau2 + 120.0 * tau3);
  return out;
}

HandTrajectory::HandTrajectory(const Pose & start) : initial_(start) {}

Pose HandTrajectory::end_pose() const
{
  return segments_.empty() ? initial_ : segments_.back().goal;
}

double HandTrajectory::end_time() const
{
  return segments_.empty() ? 0.0 : segments_.back().end_time();
}

void HandTrajectory::append(const Pose & goal, double duration)
{
  if(!(duration > 0.0))
  {
    throw std::invalid_argument("HandTrajectory: segment duration must be positive");
  }
  segments_.push_back({end_time(), end_pose(), goal, duration});
}

void HandTrajectory::wait(double duration)
{
  append(end_pose(), duration);
}

void HandTrajectory::retarget(double t, const Pose & goal, double duration)
{
  if(!(duration > 0.0))
  {
    throw std::invalid_argument("HandTrajectory: segment duration must be positive");
  }
  const Pose here = pose(t);
  std::erase_if(segments_, [t](const Segment & s) { return s.start_time >= t; });
  segments_.push_back({t, here, goal, duration});
}

void HandTrajectory::abort(double t, double duration)
{
  retarget(t, initial_, duration);
}

FullState HandTrajectory::state(double t) const
{
  // active segment: the last one that has started
  auto it = std::find_if(segments_.rbegin(), segments_.rend(), [t](const Segment & s) { return s.start_time <= t; });
  if(it == segments_.rend())
  {
    return FullState::at_rest(initial_);
  }
  const Segment & seg = *it;
  const MinJerkSample s = min_jerk(0.0, 1.0, seg.duration, t - seg.start_time);

  const Vec3 dp = seg.goal.position - seg.start.position;
  const UnitQuaternion rel = (seg.goal.orientation * seg.start.orientation.inverse());
  const Vec3 phi = rel.log(); // world-frame rotation vector, shortest path

  FullState out;
  out.pose.position = seg.start.position + s.position * dp;
  out.pose.orientation = UnitQuaternion::exp(s.position * phi) * seg.start.orientation;
  out.twist << s.velocity * dp, s.velocity * phi;
  out.accel << s.acceleration * dp, s.acceleration * phi;
  return out;
}

} // namespace handover
