#pragma once

#include "handover/se3.hpp"

#include <Eigen/Core>

#include <cmath>

namespace handover
{

using Vec12 = Eigen::Matrix<double, 12, 1>;

/// Task state eta = [e; e_dot] shared by the observation and tracking tasks.
struct TaskState
{
  Vec6 error = Vec6::Zero();
  Vec6 error_rate = Vec6::Zero();

  Vec12 stacked() const
  {
    Vec12 s;
    s << error, error_rate;
    return s;
  }
  double norm() const { return std::sqrt(error.squaredNorm() + error_rate.squaredNorm()); }
};

/// Diagonal stiffness/damping pair of a second-order task.
struct TaskGains
{
  Vec6 stiffness = Vec6::Ones();
  Vec6 damping = Vec6::Constant(2.0);

  /// damping = 2 sqrt(stiffness), per axis.
  static TaskGains critically_damped(const Vec6 & stiffness);
  static TaskGains critically_damped(double stiffness) { return critically_damped(Vec6::Constant(stiffness)); }

  bool positive() const { return (stiffness.array() > 0.0).all() && (damping.array() > 0.0).all(); }
};

/// mu = -Ks e - Kd e_dot.
Vec6 pd_feedback(const TaskState & eta, const TaskGains & gains);

/// A = [0 I; -Ks -Kd] for diagonal gains of any dimension.
Eigen::MatrixXd closed_loop_matrix(const Eigen::VectorXd & stiffness, const Eigen::VectorXd & damping);

/// Largest real part over the eigenvalues of A.
double spectral_abscissa(const Eigen::MatrixXd & A);

} // namespace handover
