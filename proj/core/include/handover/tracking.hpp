#pragma once

#include "handover/observer.hpp"
#include "handover/qp.hpp"
#include "handover/robot_model.hpp"
#include "handover/task_state.hpp"

#include <string>

namespace handover
{

/**
 * Orientation error components (grasp-frame x, y, z) that the tracking task
 * drives to zero. Components left out are free, e.g. a cylinder grasped
 * around its symmetry axis.
 */
struct OrientationMask
{
  bool x = true;
  bool y = true;
  bool z = true;

  static OrientationMask all() { return {}; }
  /// Parse "xyz", "xy", "z", ... ; throws std::invalid_argument otherwise.
  static OrientationMask parse(const std::string & axes);
  std::string to_string() const;
  bool any() const { return x || y || z; }
  bool full() const { return x && y && z; }
  Vec3 selection() const { return {x ? 1.0 : 0.0, y ? 1.0 : 0.0, z ? 1.0 : 0.0}; }
};

/// Grasp frame rigidly attached to the observed object.
struct GraspSpec
{
  Pose local;
  OrientationMask mask;
};

using TrackingGains = TaskGains;

/// Translation stiffness k (damping 2 sqrt(k)); orientation stiffness `orientation_ratio` * k.
TrackingGains default_tracking_gains(double translation_stiffness = 1.0, double orientation_ratio = 2.0);

/// Full state of the grasp frame given the observer state.
FullState grasp_frame_state(const FullState & observer, const GraspSpec & grasp);

/// 6x6 selector that zeroes the masked-out orientation components (grasp frame) of a twist-like vector.
Mat6 orientation_selector(const Pose & grasp, const OrientationMask & mask);

/// e_tt = [P_ee - P_grasp; q_ee (-) q_grasp^-1] with masked components zeroed.
Vec6 tracking_error(const Pose & ee, const Pose & grasp, const OrientationMask & mask = {});

/// eta_tt; error rate = ee twist - grasp twist, masked like the error.
TaskState tracking_task_state(const Pose & ee, const Vec6 & ee_twist, const FullState & grasp, const OrientationMask & mask = {});

/**
 * Affine residual E chi + F of the tracking task:
 * E = S [J_ee 0 0], F = S (Jdot qdot - grasp accel + Ks e + Kd e_dot),
 * with S the orientation selector. Zero residual realizes the closed loop
 * eta_dot = A_tt eta.
 */
TaskBlock tracking_task_residual(const RobotModel & model,
                                 const JointState & state,
                                 const FullState & grasp,
                                 const TrackingGains & gains,
                                 const OrientationMask & mask,
                                 const DecisionLayout & layout,
                                 double weight = 1.0);

/// Same residual from precomputed end-effector kinematics.
TaskBlock tracking_task_residual(const Matrix6X & J,
                                 const Vec6 & drift,
                                 const Pose & ee,
                                 const Vec6 & ee_twist,
                                 const FullState & grasp,
                                 const TrackingGains & gains,
                                 const OrientationMask & mask,
                                 const DecisionLayout & layout,
                                 double weight = 1.0);

} // namespace handover
