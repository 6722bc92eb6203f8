#include "handover/observer.hpp"

#include <stdexcept>

namespace handover
{

Vec6 observation_error(const Pose & observer, const Pose & object)
{
  Vec6 e;
  e << observer.position - object.position, ominus(observer.orientation, object.orientation.inverse());
  return e;
}

TaskState observer_task_state(const FullState & observer, const Pose & object)
{
  return {observation_error(observer.pose, object), observer.twist};
}

Vec6 observer_feedback(const TaskState & eta, const ObserverGains & gains)
{
  return pd_feedback(eta, gains);
}

FullState integrate_observer(const FullState & state, const Vec6 & accel, double dt)
{
  if(!(dt > 0.0))
  {
    throw std::invalid_argument("integrate_observer: dt must be positive");
  }
  FullState next;
  next.twist = state.twist + accel * dt;
  next.pose.position = state.pose.position + next.twist.head<3>() * dt;
  next.pose.orientation = integrate(state.pose.orientation, next.twist.tail<3>(), dt);
  next.accel = accel;
  return next;
}

FullState propagate_frame(const FullState & body, const Pose & local_pose)
{
  const Vec3 r = body.pose.orientation.rotate(local_pose.position);
  const Vec3 w = body.angular_velocity();
  const Vec3 w_dot = body.angular_acceleration();

  FullState out;
  out.pose = body.pose * local_pose;
  out.twist << body.linear_velocity() + w.cross(r), w;
  out.accel << body.linear_acceleration() + w_dot.cross(r) + w.cross(w.cross(r)), w_dot;
  return out;
}

PoseObserver::PoseObserver(ObserverGains gains) : gains_(gains)
{
  if(!gains_.positive())
  {
    throw std::invalid_argument("PoseObserver: gains must be strictly positive");
  }
}

void PoseObserver::set_measurement(const Pose & measurement)
{
  if(!state_)
  {
    reset(measurement);
    return;
  }
  measurement_ = measurement;
  // shortest-rotation error: keep the held sample on the observer's hemisphere
  measurement_.orientation = measurement.orientation.aligned_with(state_->pose.orientation);
}

void PoseObserver::reset(const Pose & pose)
{
  measurement_ = pose;
  state_ = FullState::at_rest(pose);
}

const FullState & PoseObserver::state() const
{
  if(!state_)
  {
    throw std::logic_error("PoseObserver: no measurement received yet");
  }
  return *state_;
}

TaskState PoseObserver::task_state() const
{
  return observer_task_state(state(), measurement_);
}

void PoseObserver::step(const Vec6 & accel, double dt)
{
  state_ = integrate_observer(state(), accel, dt);
  measurement_.orientation = measurement_.orientation.aligned_with(state_->pose.orientation);
}

} // namespace handover
