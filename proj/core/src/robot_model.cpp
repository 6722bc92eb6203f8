#include "handover/robot_model.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <fmt/format.h>

namespace handover
{

namespace
{

void check_dim(const RobotModel & model, const Eigen::VectorXd & v, const char * what)
{
  if(v.size() != model.dof())
  {
    throw std::invalid_argument(fmt::format("{}: expected {} entries, got {}", what, model.dof(), v.size()));
  }
}

void check_link(const RobotModel & model, Eigen::Index link)
{
  if(link < 0 || link >= model.dof())
  {
    throw std::invalid_argument(fmt::format("link index {} out of range [0, {})", link, model.dof()));
  }
}

/// World-frame placement of every joint for one configuration.
struct Chain
{
  std::vector<Mat3> R; // link frame orientation
  std::vector<Vec3> p; // joint origin (= link frame origin)
  std::vector<Vec3> z; // joint axis
};

Chain compute_chain(const RobotModel & model, const Eigen::VectorXd & q)
{
  const auto n = static_cast<std::size_t>(model.dof());
  Chain c;
  c.R.resize(n);
  c.p.resize(n);
  c.z.resize(n);
  Mat3 R_parent = Mat3::Identity();
  Vec3 p_parent = Vec3::Zero();
  for(std::size_t i = 0; i < n; ++i)
  {
    const Joint & j = model.joints()[i];
    const Mat3 R_joint = R_parent * j.origin.rotation();
    c.p[i] = p_parent + R_parent * j.origin.position;
    c.z[i] = R_joint * j.axis;
    c.R[i] = R_joint * rotation_about(j.axis, q(static_cast<Eigen::Index>(i)));
    R_parent = c.R[i];
    p_parent = c.p[i];
  }
  return c;
}

/// Joint-space velocities of every joint origin and link angular velocity.
struct ChainVelocity
{
  std::vector<Vec3> omega; // angular velocity of link i
  std::vector<Vec3> v; // linear velocity of joint origin i
};

ChainVelocity compute_velocity(const Chain & c, const Eigen::VectorXd & qdot)
{
  const std::size_t n = c.p.size();
  ChainVelocity out;
  out.omega.resize(n);
  out.v.resize(n);
  Vec3 omega = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 p_prev = Vec3::Zero();
  for(std::size_t i = 0; i < n; ++i)
  {
    v += omega.cross(c.p[i] - p_prev);
    omega += c.z[i] * qdot(static_cast<Eigen::Index>(i));
    out.v[i] = v;
    out.omega[i] = omega;
    p_prev = c.p[i];
  }
  return out;
}

} // namespace

RobotModel::RobotModel(std::string name,
                       std::vector<Joint> joints,
                       Pose end_effector,
                       Vec3 gravity,
                       std::optional<Eigen::VectorXd> ready_posture)
: name_(std::move(name)), joints_(std::move(joints)), end_effector_(end_effector), gravity_(gravity)
{
  if(joints_.empty())
  {
    throw ModelError("joints", "model needs at least one joint");
  }
  if(!gravity_.allFinite())
  {
    throw ModelError("gravity", "must be finite");
  }
  for(std::size_t i = 0; i < joints_.size(); ++i)
  {
    Joint & j = joints_[i];
    const std::string base = fmt::format("joints[{}]", i);
    if(std::abs(j.axis.norm() - 1.0) > 1e-6)
    {
      throw ModelError(base + ".axis", fmt::format("joint '{}' axis must be unit norm (norm {})", j.name, j.axis.norm()));
    }
    j.axis.normalize();
    const JointLimits & l = j.limits;
    if(!(l.q_min < l.q_max))
    {
      throw ModelError(base + ".limits.q_min",
                       fmt::format("joint '{}' q_min ({}) must be below q_max ({})", j.name, l.q_min, l.q_max));
    }
    if(!(l.v_max > 0.0))
    {
      throw ModelError(base + ".limits.v_max", fmt::format("joint '{}' v_max must be positive", j.name));
    }
    if(!(l.a_max > 0.0))
    {
      throw ModelError(base + ".limits.a_max", fmt::format("joint '{}' a_max must be positive", j.name));
    }
    if(!(l.tau_max > 0.0))
    {
      throw ModelError(base + ".limits.tau_max", fmt::format("joint '{}' tau_max must be positive", j.name));
    }
    if(!(j.link.mass > 0.0))
    {
      throw ModelError(base + ".link.mass", fmt::format("joint '{}' link mass must be positive", j.name));
    }
    const Mat3 & I = j.link.inertia;
    if((I - I.transpose()).cwiseAbs().maxCoeff() > 1e-9)
    {
      throw ModelError(base + ".link.inertia", fmt::format("joint '{}' inertia must be symmetric", j.name));
    }
    if(Eigen::SelfAdjointEigenSolver<Mat3>(I).eigenvalues().minCoeff() <= 0.0)
    {
      throw ModelError(base + ".link.inertia", fmt::format("joint '{}' inertia must be positive-definite", j.name));
    }
  }

  if(ready_posture)
  {
    if(ready_posture->size() != dof())
    {
      throw ModelError("ready_posture", fmt::format("expected {} entries", dof()));
    }
    for(Eigen::Index i = 0; i < dof(); ++i)
    {
      const JointLimits & l = joints_[static_cast<std::size_t>(i)].limits;
      if((*ready_posture)(i) < l.q_min || (*ready_posture)(i) > l.q_max)
      {
        throw ModelError(fmt::format("ready_posture[{}]", i), "outside joint limits");
      }
    }
    ready_ = *ready_posture;
  }
  else
  {
    ready_ = 0.5 * (q_min() + q_max());
  }
}

Eigen::VectorXd RobotModel::q_min() const
{
  Eigen::VectorXd v(dof());
  for(Eigen::Index i = 0; i < dof(); ++i) v(i) = joint(i).limits.q_min;
  return v;
}

Eigen::VectorXd RobotModel::q_max() const
{
  Eigen::VectorXd v(dof());
  for(Eigen::Index i = 0; i < dof(); ++i) v(i) = joint(i).limits.q_max;
  return v;
}

Eigen::VectorXd RobotModel::v_max() const
{
  Eigen::VectorXd v(dof());
  for(Eigen::Index i = 0; i < dof(); ++i) v(i) = joint(i).limits.v_max;
  return v;
}

Eigen::VectorXd RobotModel::a_max() const
{
  Eigen::VectorXd v(dof());
  for(Eigen::Index i = 0; i < dof(); ++i) v(i) = joint(i).limits.a_max;
  return v;
}

Eigen::VectorXd RobotModel::tau_max() const
{
  Eigen::VectorXd v(dof());
  for(Eigen::Index i = 0; i < dof(); ++i) v(i) = joint(i).limits.tau_max;
  return v;
}

Pose link_pose(const RobotModel & model, const Eigen::VectorXd & q, Eigen::Index link)
{
  check_dim(model, q, "q");
  check_link(model, link);
  const Chain c = compute_chain(model, q);
  const auto k = static_cast<std::size_t>(link);
  return {c.p[k], UnitQuaternion::from_rotation(c.R[k])};
}

Pose forward_kinematics(const RobotModel & model, const Eigen::VectorXd & q)
{
  return link_pose(model, q, model.dof() - 1) * model.end_effector();
}

Matrix6X point_jacobian(const RobotModel & model, const Eigen::VectorXd & q, Eigen::Index link, const Vec3 & local_point)
{
  check_dim(model, q, "q");
  check_link(model, link);
  const Chain c = compute_chain(model, q);
  const auto k = static_cast<std::size_t>(link);
  const Vec3 p = c.p[k] + c.R[k] * local_point;
  Matrix6X J = Matrix6X::Zero(6, model.dof());
  for(std::size_t i = 0; i <= k; ++i)
  {
    const auto col = static_cast<Eigen::Index>(i);
    J.block<3, 1>(0, col) = c.z[i].cross(p - c.p[i]);
    J.block<3, 1>(3, col) = c.z[i];
  }
  return J;
}

Vec6 point_jacobian_dot_times_qdot(const RobotModel & model,
                                   const Eigen::VectorXd & q,
                                   const Eigen::VectorXd & qdot,
                                   Eigen::Index link,
                                   const Vec3 & local_point)
{
  check_dim(model, q, "q");
  check_dim(model, qdot, "qdot");
  check_link(model, link);
  const Chain c = compute_chain(model, q);
  const ChainVelocity vel = compute_velocity(c, qdot);
  const auto k = static_cast<std::size_t>(link);
  const Vec3 p = c.p[k] + c.R[k] * local_point;
  const Vec3 p_dot = vel.v[k] + vel.omega[k].cross(p - c.p[k]);

  Vec3 lin = Vec3::Zero();
  Vec3 ang = Vec3::Zero();
  for(std::size_t i = 0; i <= k; ++i)
  {
    const double qd = qdot(static_cast<Eigen::Index>(i));
    // the axis moves with its parent; its own rotation leaves it unchanged
    const Vec3 z_dot = vel.omega[i].cross(c.z[i]);
    lin += qd * (z_dot.cross(p - c.p[i]) + c.z[i].cross(p_dot - vel.v[i]));
    ang += qd * z_dot;
  }
  Vec6 out;
  out << lin, ang;
  return out;
}

Matrix6X jacobian(const RobotModel & model, const Eigen::VectorXd & q)
{
  return point_jacobian(model, q, model.dof() - 1, model.end_effector().position);
}

Vec6 jacobian_dot_times_qdot(const RobotModel & model, const Eigen::VectorXd & q, const Eigen::VectorXd & qdot)
{
  return point_jacobian_dot_times_qdot(model, q, qdot, model.dof() - 1, model.end_effector().position);
}

Eigen::VectorXd rnea(const RobotModel & model,
                     const Eigen::VectorXd & q,
                     const Eigen::VectorXd & qdot,
                     const Eigen::VectorXd & qddot,
                     const Vec3 & gravity)
{
  check_dim(model, q, "q");
  check_dim(model, qdot, "qdot");
  check_dim(model, qddot, "qddot");
  const auto n = static_cast<std::size_t>(model.dof());
  const Chain c = compute_chain(model, q);

  std::vector<Vec3> force(n), moment(n), com(n);

  // forward pass; gravity enters as a fictitious base acceleration
  Vec3 omega = Vec3::Zero();
  Vec3 omega_dot = Vec3::Zero();
  Vec3 acc = -gravity;
  Vec3 p_prev = Vec3::Zero();
  for(std::size_t i = 0; i < n; ++i)
  {
    const auto ii = static_cast<Eigen::Index>(i);
    const Vec3 r = c.p[i] - p_prev;
    acc += omega_dot.cross(r) + omega.cross(omega.cross(r));
    const Vec3 spin = c.z[i] * qdot(ii);
    omega_dot += c.z[i] * qddot(ii) + omega.cross(spin);
    omega += spin;

    const LinkInertia & link = model.joints()[i].link;
    com[i] = c.R[i] * link.com;
    const Vec3 acc_com = acc + omega_dot.cross(com[i]) + omega.cross(omega.cross(com[i]));
    const Mat3 I_world = c.R[i] * link.inertia * c.R[i].transpose();
    force[i] = link.mass * acc_com;
    moment[i] = I_world * omega_dot + omega.cross(I_world * omega);
    p_prev = c.p[i];
  }

  // backward pass; moments taken about each joint origin
  Eigen::VectorXd tau(model.dof());
  Vec3 f_child = Vec3::Zero();
  Vec3 n_child = Vec3::Zero();
  for(std::size_t i = n; i-- > 0;)
  {
    const Vec3 to_child = (i + 1 < n) ? Vec3(c.p[i + 1] - c.p[i]) : Vec3::Zero();
    const Vec3 f = force[i] + f_child;
    const Vec3 m = moment[i] + com[i].cross(force[i]) + n_child + to_child.cross(f_child);
    tau(static_cast<Eigen::Index>(i)) = c.z[i].dot(m);
    f_child = f;
    n_child = m;
  }
  return tau;
}

Eigen::MatrixXd mass_matrix(const RobotModel & model, const Eigen::VectorXd & q)
{
  check_dim(model, q, "q");
  const Eigen::Index n = model.dof();
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd M(n, n);
  for(Eigen::Index i = 0; i < n; ++i)
  {
    M.col(i) = rnea(model, q, zero, Eigen::VectorXd::Unit(n, i), Vec3::Zero());
  }
  // columns come from independent passes; symmetrize away rounding
  return 0.5 * (M + M.transpose());
}

Eigen::VectorXd nonlinear_terms(const RobotModel & model,
                                const Eigen::VectorXd & q,
                                const Eigen::VectorXd & qdot,
                                const Vec3 & gravity)
{
  return rnea(model, q, qdot, Eigen::VectorXd::Zero(model.dof()), gravity);
}

Eigen::VectorXd nonlinear_terms(const RobotModel & model, const Eigen::VectorXd & q, const Eigen::VectorXd & qdot)
{
  return nonlinear_terms(model, q, qdot, model.gravity());
}

Eigen::VectorXd inverse_dynamics(const RobotModel & model,
                                 const Eigen::VectorXd & q,
                                 const Eigen::VectorXd & qdot,
                                 const Eigen::VectorXd & qddot,
                                 const Vec6 & wrench,
                                 const Matrix6X & contact_jacobian)
{
  if(contact_jacobian.cols() != model.dof())
  {
    throw std::invalid_argument(
        fmt::format("contact_jacobian: expected {} columns, got {}", model.dof(), contact_jacobian.cols()));
  }
  return rnea(model, q, qdot, qddot, model.gravity()) - contact_jacobian.transpose() * wrench;
}

} // namespace handover
