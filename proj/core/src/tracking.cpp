#include "handover/tracking.hpp"

#include <stdexcept>

namespace handover
{

OrientationMask OrientationMask::parse(const std::string & axes)
{
  OrientationMask m{false, false, false};
  for(const char c : axes)
  {
    switch(c)
    {
      case 'x':
        m.x = true;
        break;
      case 'y':
        m.y = true;
        break;
      case 'z':
        m.z = true;
        break;
      default:
        throw std::invalid_argument("orientation mask accepts only the letters x, y, z: '" + axes + "'");
    }
  }
  if(!m.any())
  {
    throw std::invalid_argument("orientation mask must keep at least one axis");
  }
  return m;
}

std::string OrientationMask::to_string() const
{
  std::string s;
  if(x) s += 'x';
  if(y) s += 'y';
  if(z) s += 'z';
  return s;
}

TrackingGains default_tracking_gains(double translation_stiffness, double orientation_ratio)
{
  Vec6 k;
  k << Eigen::Vector3d::Constant(translation_stiffness), Eigen::Vector3d::Constant(orientation_ratio * translation_stiffness);
  return TaskGains::critically_damped(k);
}

FullState grasp_frame_state(const FullState & observer, const GraspSpec & grasp)
{
  return propagate_frame(observer, grasp.local);
}

Mat6 orientation_selector(const Pose & grasp, const OrientationMask & mask)
{
  Mat6 S = Mat6::Identity();
  if(!mask.full())
  {
    const Mat3 R = grasp.rotation();
    S.bottomRightCorner<3, 3>() = R * mask.selection().asDiagonal() * R.transpose();
  }
  return S;
}

Vec6 tracking_error(const Pose & ee, const Pose & grasp, const OrientationMask & mask)
{
  // shortest-rotation convention for the quaternion error
  const UnitQuaternion q_grasp = grasp.orientation.aligned_with(ee.orientation);
  Vec6 e;
  e << ee.position - grasp.position, ominus(ee.orientation, q_grasp.inverse());
  return orientation_selector(grasp, mask) * e;
}

TaskState tracking_task_state(const Pose & ee, const Vec6 & ee_twist, const FullState & grasp, const OrientationMask & mask)
{
  return {tracking_error(ee, grasp.pose, mask), orientation_selector(grasp.pose, mask) * (ee_twist - grasp.twist)};
}

TaskBlock tracking_task_residual(const RobotModel & model,
                                 const JointState & state,
                                 const FullState & grasp,
                                 const TrackingGains & gains,
                                 const OrientationMask & mask,
                                 const DecisionLayout & layout,
                                 double weight)
{
  if(layout.joints != model.dof())
  {
    throw std::invalid_argument("tracking_task_residual: layout does not match the model");
  }
  const Matrix6X J = jacobian(model, state.q);
  return tracking_task_residual(J, jacobian_dot_times_qdot(model, state.q, state.qdot), forward_kinematics(model, state.q),
                                J * state.qdot, grasp, gains, mask, layout, weight);
}

TaskBlock tracking_task_residual(const Matrix6X & J,
                                 const Vec6 & drift,
                                 const Pose & ee,
                                 const Vec6 & ee_twist,
                                 const FullState & grasp,
                                 const TrackingGains & gains,
                                 const OrientationMask & mask,
                                 const DecisionLayout & layout,
                                 double weight)
{
  const TaskState eta = tracking_task_state(ee, ee_twist, grasp, mask);
  const Mat6 S = orientation_selector(grasp.pose, mask);

  TaskBlock blk;
  blk.name = "tracking";
  blk.weight = weight;
  blk.E = Eigen::MatrixXd::Zero(6, layout.size());
  blk.E.middleCols(layout.qdd(), layout.joints) = S * J;
  blk.F = S * (drift - grasp.accel - pd_feedback(eta, gains));
  return blk;
}

} // namespace handover
