#include "handover/posture.hpp"

#include <stdexcept>

namespace handover
{

PostureGains PostureGains::defaults(const RobotModel & model)
{
  const Eigen::Index n = model.dof();
  return {Eigen::VectorXd::Ones(n), Eigen::VectorXd::Constant(n, 2.0), model.ready_posture()};
}

TaskBlock posture_residual(const JointState & state, const PostureGains & gains, const DecisionLayout & layout, double weight)
{
  const Eigen::Index n = layout.joints;
  if(state.q.size() != n || state.qdot.size() != n || gains.stiffness.size() != n || gains.damping.size() != n
     || gains.reference.size() != n)
  {
    throw std::invalid_argument("posture_residual: dimension mismatch");
  }
  TaskBlock blk;
  blk.name = "posture";
  blk.weight = weight;
  blk.E = Eigen::MatrixXd::Zero(n, layout.size());
  blk.E.middleCols(layout.qdd(), n).setIdentity();
  blk.F = gains.stiffness.cwiseProduct(state.q - gains.reference) + gains.damping.cwiseProduct(state.qdot);
  return blk;
}

} // namespace handover
