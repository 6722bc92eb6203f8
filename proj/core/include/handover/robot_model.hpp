#pragma once

#include "handover/se3.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace handover
{

using Matrix6X = Eigen::Matrix<double, 6, Eigen::Dynamic>;

/// Raised for malformed model documents; what() starts with the JSON field path.
class ModelError : public std::runtime_error
{
public:
  ModelError(const std::string & path, const std::string & message)
  : std::runtime_error(path + ": " + message), path_(path)
  {
  }
  const std::string & path() const { return path_; }

private:
  std::string path_;
};

struct JointLimits
{
  double q_min = 0.0; ///< [rad]
  double q_max = 0.0; ///< [rad]
  double v_max = 0.0; ///< [rad/s]
  double a_max = 0.0; ///< [rad/s^2]
  double tau_max = 0.0; ///< [N.m]
};

/// Inertial parameters of the link driven by a joint, expressed in the joint frame.
struct LinkInertia
{
  double mass = 1.0;
  Vec3 com = Vec3::Zero();
  Mat3 inertia = Mat3::Identity(); ///< about the CoM
};

/// Revolute joint. The joint frame is parent * origin * Rot(axis, q).
struct Joint
{
  std::string name;
  Pose origin;
  Vec3 axis = Vec3::UnitZ();
  JointLimits limits;
  LinkInertia link;
};

/// Immutable serial chain of revolute joints plus an end-effector frame on the last link.
class RobotModel
{
public:
  /// Validates the description; throws ModelError naming the offending field.
  RobotModel(std::string name,
             std::vector<Joint> joints,
             Pose end_effector,
             Vec3 gravity = Vec3(0.0, 0.0, -9.81),
             std::optional<Eigen::VectorXd> ready_posture = std::nullopt);

  const std::string & name() const { return name_; }
  Eigen::Index dof() const { return static_cast<Eigen::Index>(joints_.size()); }
  const std::vector<Joint> & joints() const { return joints_; }
  const Joint & joint(Eigen::Index i) const { return joints_.at(static_cast<std::size_t>(i)); }
  const Pose & end_effector() const { return end_effector_; }
  const Vec3 & gravity() const { return gravity_; }

  /// "Ready" reference posture; mid-range of the limits when the model has none.
  const Eigen::VectorXd & ready_posture() const { return ready_; }

  Eigen::VectorXd q_min() const;
  Eigen::VectorXd q_max() const;
  Eigen::VectorXd v_max() const;
  Eigen::VectorXd a_max() const;
  Eigen::VectorXd tau_max() const;

private:
  std::string name_;
  std::vector<Joint> joints_;
  Pose end_effector_;
  Vec3 gravity_;
  Eigen::VectorXd ready_;
};

struct JointState
{
  Eigen::VectorXd q;
  Eigen::VectorXd qdot;

  static JointState at_rest(const Eigen::VectorXd & q) { return {q, Eigen::VectorXd::Zero(q.size())}; }
};

/// Parse a model JSON document (see data/models/README.md for the schema).
RobotModel load_model(std::string_view json_text);
RobotModel load_model_file(const std::filesystem::path & path);

// --- kinematics -----------------------------------------------------------

/// World pose of link `link` (the frame after joint `link` rotates).
Pose link_pose(const RobotModel & model, const Eigen::VectorXd & q, Eigen::Index link);

/// World pose of the end-effector frame.
Pose forward_kinematics(const RobotModel & model, const Eigen::VectorXd & q);

/**
 * Geometric Jacobian of a point rigidly attached to `link` (linear rows over
 * angular rows, world frame). `local_point` is expressed in the link frame.
 */
Matrix6X point_jacobian(const RobotModel & model, const Eigen::VectorXd & q, Eigen::Index link, const Vec3 & local_point);

/// Drift acceleration Jdot * qdot of the same point.
Vec6 point_jacobian_dot_times_qdot(const RobotModel & model,
                                   const Eigen::VectorXd & q,
                                   const Eigen::VectorXd & qdot,
                                   Eigen::Index link,
                                   const Vec3 & local_point);

/// End-effector Jacobian; J * qdot = [Pdot; omega].
Matrix6X jacobian(const RobotModel & model, const Eigen::VectorXd & q);

Vec6 jacobian_dot_times_qdot(const RobotModel & model, const Eigen::VectorXd & q, const Eigen::VectorXd & qdot);

// --- dynamics -------------------------------------------------------------

/// Recursive Newton-Euler: torques for the given motion, no external wrench.
Eigen::VectorXd rnea(const RobotModel & model,
                     const Eigen::VectorXd & q,
                     const Eigen::VectorXd & qdot,
                     const Eigen::VectorXd & qddot,
                     const Vec3 & gravity);

Eigen::MatrixXd mass_matrix(const RobotModel & model, const Eigen::VectorXd & q);

/// Coriolis, centrifugal and gravity torques N(q, qdot).
Eigen::VectorXd nonlinear_terms(const RobotModel & model,
                                const Eigen::VectorXd & q,
                                const Eigen::VectorXd & qdot,
                                const Vec3 & gravity);
Eigen::VectorXd nonlinear_terms(const RobotModel & model, const Eigen::VectorXd & q, const Eigen::VectorXd & qdot);

/// tau = M qddot + N - Jc^T f.
Eigen::VectorXd inverse_dynamics(const RobotModel & model,
                                 const Eigen::VectorXd & q,
                                 const Eigen::VectorXd & qdot,
                                 const Eigen::VectorXd & qddot,
                                 const Vec6 & wrench,
                                 const Matrix6X & contact_jacobian);

} // namespace handover
