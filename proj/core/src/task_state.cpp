#include "handover/task_state.hpp"

#include <Eigen/Eigenvalues>

namespace handover
{

TaskGains TaskGains::critically_damped(const Vec6 & stiffness)
{
  return {stiffness, 2.0 * stiffness.cwiseSqrt()};
}

Vec6 pd_feedback(const TaskState & eta, const TaskGains & gains)
{
  return -(gains.stiffness.cwiseProduct(eta.error) + gains.damping.cwiseProduct(eta.error_rate));
}

Eigen::MatrixXd closed_loop_matrix(const Eigen::VectorXd & stiffness, const Eigen::VectorXd & damping)
{
  const Eigen::Index n = stiffness.size();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  A.topRightCorner(n, n).setIdentity();
  A.bottomLeftCorner(n, n) = (-stiffness).asDiagonal();
  A.bottomRightCorner(n, n) = (-damping).asDiagonal();
  return A;
}

double spectral_abscissa(const Eigen::MatrixXd & A)
{
  return Eigen::EigenSolver<Eigen::MatrixXd>(A, false).eigenvalues().real().maxCoeff();
}

} // namespace handover
