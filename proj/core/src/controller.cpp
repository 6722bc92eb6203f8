#include "handover/controller.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace handover
{

ControllerConfig ControllerConfig::defaults(const RobotModel & model)
{
  ControllerConfig c;
  c.posture = PostureGains::defaults(model);
  return c;
}

TaskBlock observation_task_block(const TaskState & eta_obs,
                                 const ObserverGains & gains,
                                 const DecisionLayout & layout,
                                 double weight)
{
  TaskBlock blk;
  blk.name = "observation";
  blk.weight = weight;
  blk.E = Eigen::MatrixXd::Zero(6, layout.size());
  blk.E.middleCols<6>(layout.obs_acc()).setIdentity();
  blk.F = -observer_feedback(eta_obs, gains);
  return blk;
}

ConstraintSet joint_limit_constraints(const RobotModel & model,
                                      const JointState & state,
                                      const DecisionLayout & layout,
                                      double dt,
                                      double horizon,
                                      double braking_fraction,
                                      const Eigen::MatrixXd * M,
                                      const Eigen::VectorXd * N,
                                      const Matrix6X * contact_jacobian,
                                      LimitReport * report)
{
  if(!(dt > 0.0) || !(horizon > 0.0))
  {
    throw std::invalid_argument("joint_limit_constraints: dt and horizon must be positive");
  }
  const Eigen::Index n = model.dof();
  if(state.q.size() != n || state.qdot.size() != n || layout.joints != n)
  {
    throw std::invalid_argument("joint_limit_constraints: dimension mismatch");
  }

  ConstraintSet cs(layout.size());
  const double T = horizon;
  for(Eigen::Index i = 0; i < n; ++i)
  {
    const JointLimits & lim = model.joint(i).limits;
    const double q = state.q(i);
    const double v = state.qdot(i);

    const double lo_av = std::max(-lim.a_max, (-lim.v_max - v) / dt);
    const double hi_av = std::min(lim.a_max, (lim.v_max - v) / dt);

    const double a_brake = braking_fraction * lim.a_max;
    const double room_up = std::max(0.0, lim.q_max - q - v * dt);
    const double room_down = std::max(0.0, q - lim.q_min + v * dt);
    const double hi_pos = std::min({2.0 * (lim.q_max - q - v * T) / (T * T),
                                    (std::sqrt(2.0 * a_brake * room_up) - v) / dt,
                                    (lim.q_max - q - v * dt) / (dt * dt)});
    const double lo_pos = std::max({2.0 * (lim.q_min - q - v * T) / (T * T),
                                    (-std::sqrt(2.0 * a_brake * room_down) - v) / dt,
                                    (lim.q_min - q - v * dt) / (dt * dt)});

    double lo = std::max(lo_av, lo_pos);
    double hi = std::min(hi_av, hi_pos);
    if(lo > hi)
    {
      // degenerate state: keep velocity reachability, pinned at the side that
      // moves back toward the admissible set
      if(lo_av > hi_av)
      {
        lo = hi = v > 0.0 ? -lim.a_max : lim.a_max;
      }
      else if(hi_pos < lo_av)
      {
        lo = hi = lo_av;
      }
      else
      {
        lo = hi = hi_av;
      }
      if(report) ++report->degenerate_joints;
      spdlog::warn("joint '{}' limit interval empty at q={:.6f} qdot={:.6f}; falling back to qddot={:.3f}",
                   model.joint(i).name, q, v, lo);
    }
    cs.bound(layout.qdd() + i, lo, hi);
  }

  if(M && N)
  {
    for(Eigen::Index i = 0; i < n; ++i)
    {
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(layout.size());
      row.segment(layout.qdd(), n) = M->row(i);
      if(contact_jacobian)
      {
        row.segment<6>(layout.wrench()) = -contact_jacobian->col(i).transpose();
      }
      const double tau_max = model.joint(i).limits.tau_max;
      cs.add_row(row, tau_max - (*N)(i), fmt::format("torque upper {}", model.joint(i).name));
      cs.add_row(-row, tau_max + (*N)(i), fmt::format("torque lower {}", model.joint(i).name));
    }
  }
  return cs;
}

double sphere_distance(const RobotModel & model, const Eigen::VectorXd & q, const LinkSphere & a, const Sphere & b)
{
  const Vec3 ca = link_pose(model, q, a.link).transform(a.center);
  return (ca - b.center).norm() - a.radius - b.radius;
}

ConstraintSet collision_constraint(const LinkSphere & a,
                                   const Sphere & b,
                                   const RobotModel & model,
                                   const JointState & state,
                                   const DecisionLayout & layout,
                                   double dt,
                                   const DamperParams & damper)
{
  if(!(a.radius > 0.0) || !(b.radius > 0.0) || !(damper.influence_distance > damper.safe_distance))
  {
    throw std::invalid_argument("collision_constraint: malformed spheres or damper distances");
  }
  ConstraintSet cs(layout.size());
  const Vec3 ca = link_pose(model, state.q, a.link).transform(a.center);
  const Vec3 diff = ca - b.center;
  const double center_dist = diff.norm();
  const double d = center_dist - a.radius - b.radius;
  if(d > damper.influence_distance)
  {
    return cs;
  }
  const Vec3 normal = center_dist > 1e-12 ? Vec3(diff / center_dist) : Vec3::UnitZ();
  const Matrix6X Jp = point_jacobian(model, state.q, a.link, a.center);
  const Vec6 drift = point_jacobian_dot_times_qdot(model, state.q, state.qdot, a.link, a.center);

  const Eigen::RowVectorXd dd_row = normal.transpose() * Jp.topRows<3>(); // d_dot = dd_row qdot
  const double d_dot = dd_row.dot(state.qdot);
  const double drift_n = normal.dot(drift.head<3>());

  // d_dot_next = d_dot + dt (dd_row qddot + drift_n) >= bound
  double bound;
  if(d <= 0.0)
  {
    bound = damper.separation_speed;
    spdlog::warn("link {} sphere overlaps an obstacle (distance {:.4f} m)", a.link, d);
  }
  else
  {
    bound = -damper.gain * (d - damper.safe_distance) / (damper.influence_distance - damper.safe_distance);
  }
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(layout.size());
  row.segment(layout.qdd(), layout.joints) = -dt * dd_row;
  cs.add_row(row, d_dot + dt * drift_n - bound, fmt::format("collision link {}", a.link));
  return cs;
}

CycleOutput control_cycle(const RobotModel & model,
                          const JointState & state,
                          const FullState & observer,
                          const Pose & measurement,
                          const GraspSpec & grasp,
                          const ControllerConfig & config)
{
  const Eigen::Index n = model.dof();
  const DecisionLayout layout(n);

  const Eigen::MatrixXd M = mass_matrix(model, state.q);
  const Eigen::VectorXd N = nonlinear_terms(model, state.q, state.qdot);
  const Matrix6X J = jacobian(model, state.q);
  const Vec6 drift = jacobian_dot_times_qdot(model, state.q, state.qdot);

  CycleOutput out;
  out.ee = forward_kinematics(model, state.q);
  out.ee_twist = J * state.qdot;
  out.grasp = grasp_frame_state(observer, grasp);
  out.eta_obs = observer_task_state(observer, measurement);
  out.eta_tt = tracking_task_state(out.ee, out.ee_twist, out.grasp, grasp.mask);

  std::vector<TaskBlock> blocks;
  blocks.push_back(observation_task_block(out.eta_obs, config.observer, layout, config.weights.observation));
  if(config.tracking_enabled)
  {
    blocks.push_back(tracking_task_residual(J, drift, out.ee, out.ee_twist, out.grasp, config.tracking, grasp.mask, layout,
                                            config.weights.tracking));
  }
  blocks.push_back(posture_residual(state, config.posture, layout, config.weights.posture));

  ConstraintSet constraints =
      joint_limit_constraints(model, state, layout, config.dt, config.limit_horizon, config.braking_fraction,
                              config.torque_limits ? &M : nullptr, config.torque_limits ? &N : nullptr, &J, &out.limits);
  // pre-grasp: no contact wrench
  constraints.bound_segment(layout.wrench(), Vec6::Zero(), Vec6::Zero());
  for(const LinkSphere & s : config.robot_spheres)
  {
    for(const Sphere & o : config.obstacles)
    {
      constraints.append(collision_constraint(s, o, model, state, layout, config.dt, config.damper));
    }
  }

  out.solution = solve_qp(blocks, constraints, config.qp);
  if(out.solution.status == QpStatus::optimal)
  {
    out.qdd = out.solution.x.segment(layout.qdd(), n);
    out.observer_accel = out.solution.x.segment<6>(layout.obs_acc());
    out.wrench = out.solution.x.segment<6>(layout.wrench());
  }
  else
  {
    out.failed = true;
    out.qdd = Eigen::VectorXd::Zero(n);
    out.observer_accel = observer_feedback(out.eta_obs, config.observer);
    out.wrench.setZero();
    spdlog::warn("QP {} after {} iterations ({})", to_string(out.solution.status), out.solution.iterations,
                 out.solution.violated);
  }
  out.tau = M * out.qdd + N - J.transpose() * out.wrench;
  return out;
}

} // namespace handover
