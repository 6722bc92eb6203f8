#pragma once

#include "handover/qp.hpp"
#include "handover/robot_model.hpp"

namespace handover
{

/// Joint-space PD toward a reference posture (lowest priority task).
struct PostureGains
{
  Eigen::VectorXd stiffness;
  Eigen::VectorXd damping;
  Eigen::VectorXd reference;

  /// Model's ready posture, stiffness 1, damping 2.
  static PostureGains defaults(const RobotModel & model);
};

/// E = [I 0 0], F = Ks (q - q_ref) + Kd qdot.
TaskBlock posture_residual(const JointState & state, const PostureGains & gains, const DecisionLayout & layout, double weight = 1.0);

} // namespace handover
