#pragma once

#include "handover/se3.hpp"
#include "handover/task_state.hpp"

#include <optional>

namespace handover
{

/// Pose, twist [Pdot; omega] and spatial acceleration [Pddot; omega_dot] of a frame.
struct FullState
{
  Pose pose;
  Vec6 twist = Vec6::Zero();
  Vec6 accel = Vec6::Zero();

  static FullState at_rest(const Pose & pose) { return {pose, Vec6::Zero(), Vec6::Zero()}; }

  Vec3 linear_velocity() const { return twist.head<3>(); }
  Vec3 angular_velocity() const { return twist.tail<3>(); }
  Vec3 linear_acceleration() const { return accel.head<3>(); }
  Vec3 angular_acceleration() const { return accel.tail<3>(); }
};

using ObserverGains = TaskGains;

/// Default observation gains: Ks = 1500 I, Kd = 2 sqrt(Ks).
inline ObserverGains default_observer_gains() { return TaskGains::critically_damped(1500.0); }

/// e_obs = [P_obs - P_obj; q_obs (-) q_obj^-1].
Vec6 observation_error(const Pose & observer, const Pose & object);

/// eta_obs; the error rate equals the observer twist.
TaskState observer_task_state(const FullState & observer, const Pose & object);

/// Desired observer spatial acceleration mu_obs = -K_obs eta_obs.
Vec6 observer_feedback(const TaskState & eta, const ObserverGains & gains);

/**
 * One semi-implicit Euler step of the reference model under spatial
 * acceleration `accel`: twist first, then pose from the new twist. The
 * returned accel field holds `accel`.
 */
FullState integrate_observer(const FullState & state, const Vec6 & accel, double dt);

/**
 * Full state of a frame rigidly attached to the observed body at
 * `local_pose` (expressed in the body frame). Angular velocity and
 * acceleration are shared with the body.
 */
FullState propagate_frame(const FullState & body, const Pose & local_pose);

/**
 * Observation task driven at the control rate by a zero-order-held pose
 * measurement. Starts at the first measurement with zero twist.
 */
class PoseObserver
{
public:
  explicit PoseObserver(ObserverGains gains = default_observer_gains());

  bool initialized() const { return state_.has_value(); }

  /// Hold a new sensor sample. The first one also initializes the state.
  void set_measurement(const Pose & measurement);
  void reset(const Pose & pose);

  const Pose & measurement() const { return measurement_; }
  const FullState & state() const;
  const ObserverGains & gains() const { return gains_; }
  void set_gains(const ObserverGains & gains) { gains_ = gains; }

  TaskState task_state() const;
  Vec6 feedback() const { return observer_feedback(task_state(), gains_); }

  /// Advance with the spatial acceleration chosen by the controller.
  void step(const Vec6 & accel, double dt);

private:
  ObserverGains gains_;
  Pose measurement_;
  std::optional<FullState> state_;
};

} // namespace handover
