#pragma once

#include "handover/observer.hpp"
#include "handover/posture.hpp"
#include "handover/qp.hpp"
#include "handover/robot_model.hpp"
#include "handover/tracking.hpp"

#include <vector>

namespace handover
{

struct TaskWeights
{
  double observation = 1000.0;
  double tracking = 100.0;
  double posture = 0.01;
};

/// Sphere rigidly attached to a robot link (center in the link frame).
struct LinkSphere
{
  Eigen::Index link = 0;
  Vec3 center = Vec3::Zero();
  double radius = 0.05;
};

/// Static obstacle sphere in the world frame.
struct Sphere
{
  Vec3 center = Vec3::Zero();
  double radius = 0.05;
};

/// Velocity damper ddot >= -gain (d - safe) / (influence - safe).
struct DamperParams
{
  double safe_distance = 0.02; ///< [m]
  double influence_distance = 0.10; ///< [m]
  double gain = 1.0;
  double separation_speed = 0.01; ///< [m/s] demanded when spheres overlap
};

struct ControllerConfig
{
  ObserverGains observer = default_observer_gains();
  TrackingGains tracking = default_tracking_gains();
  PostureGains posture;
  TaskWeights weights;
  double dt = 0.001; ///< control period [s]
  double limit_horizon = 0.1; ///< position-limit look-ahead T [s]
  double braking_fraction = 0.5; ///< share of a_max assumed available to stop at a position limit
  bool torque_limits = true;
  bool tracking_enabled = true;
  std::vector<LinkSphere> robot_spheres;
  std::vector<Sphere> obstacles;
  DamperParams damper;
  QpOptions qp;

  static ControllerConfig defaults(const RobotModel & model);
};

/// E = [0 I 0] on the observer block, F = K_obs eta_obs.
TaskBlock observation_task_block(const TaskState & eta_obs,
                                 const ObserverGains & gains,
                                 const DecisionLayout & layout,
                                 double weight = 1.0);

struct LimitReport
{
  int degenerate_joints = 0; ///< joints whose shaped interval was empty
};

/**
 * Joint acceleration bounds and torque rows for one control period.
 *
 * Per joint the qddot interval intersects: +-a_max; velocity reachability
 * (v_lim - qdot)/dt; the horizon condition q + qdot T + qddot T^2/2 within
 * [q_min, q_max]; a braking-speed bound qdot_next <= sqrt(2 a_b D) with
 * a_b = braking_fraction * a_max and D the remaining distance; and a one-step
 * position bound on q_next. An empty interval falls back to the acceleration
 * and velocity bounds pushed toward the violated side, and is reported.
 * When `torque_limits` is set, rows +-(M qddot + N - Jc^T f) <= tau_max
 * use the supplied current-state M and N.
 */
ConstraintSet joint_limit_constraints(const RobotModel & model,
                                      const JointState & state,
                                      const DecisionLayout & layout,
                                      double dt,
                                      double horizon,
                                      double braking_fraction,
                                      const Eigen::MatrixXd * M = nullptr,
                                      const Eigen::VectorXd * N = nullptr,
                                      const Matrix6X * contact_jacobian = nullptr,
                                      LimitReport * report = nullptr);

/// Distance between the surfaces of a link sphere and an obstacle (negative when overlapping).
double sphere_distance(const RobotModel & model, const Eigen::VectorXd & q, const LinkSphere & a, const Sphere & b);

/**
 * Velocity-damper row for one sphere pair, linearized over qddot through the
 * distance Jacobian. Empty when the pair is beyond the influence distance.
 */
ConstraintSet collision_constraint(const LinkSphere & a,
                                   const Sphere & b,
                                   const RobotModel & model,
                                   const JointState & state,
                                   const DecisionLayout & layout,
                                   double dt,
                                   const DamperParams & damper = {});

struct CycleOutput
{
  Eigen::VectorXd qdd;
  Vec6 observer_accel = Vec6::Zero();
  Vec6 wrench = Vec6::Zero();
  Eigen::VectorXd tau;
  QpSolution solution;
  bool failed = false;

  TaskState eta_obs;
  TaskState eta_tt;
  FullState grasp;
  Pose ee;
  Vec6 ee_twist = Vec6::Zero();
  LimitReport limits;
};

/**
 * One control period: builds the observation, tracking and posture blocks,
 * the limit/torque/collision constraints, pins the wrench to zero
 * (pre-grasp), solves and recovers torques by inverse dynamics. On solver
 * failure qddot is 0, the observer follows its own feedback law and
 * `failed` is set.
 */
CycleOutput control_cycle(const RobotModel & model,
                          const JointState & state,
                          const FullState & observer,
                          const Pose & measurement,
                          const GraspSpec & grasp,
                          const ControllerConfig & config);

} // namespace handover
