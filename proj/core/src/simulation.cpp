#include "handover/simulation.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>

namespace handover
{

JointState step_arm(const JointState & state, const Eigen::VectorXd & qdd, double dt)
{
  if(!(dt > 0.0))
  {
    throw std::invalid_argument("step_arm: dt must be positive");
  }
  if(qdd.size() != state.q.size() || state.qdot.size() != state.q.size())
  {
    throw std::invalid_argument("step_arm: dimension mismatch");
  }
  JointState next;
  next.qdot = state.qdot + qdd * dt;
  next.q = state.q + next.qdot * dt;
  return next;
}

ActuatorLag::ActuatorLag(Eigen::Index joints, double time_constant)
: tau_(time_constant), applied_(Eigen::VectorXd::Zero(joints))
{
  if(tau_ < 0.0)
  {
    throw std::invalid_argument("ActuatorLag: time constant must be non-negative");
  }
}

const Eigen::VectorXd & ActuatorLag::filter(const Eigen::VectorXd & command, double dt)
{
  if(tau_ == 0.0)
  {
    applied_ = command;
  }
  else
  {
    applied_ += (command - applied_) * (dt / (tau_ + dt));
  }
  return applied_;
}

double masked_orientation_error(const Pose & ee, const Pose & grasp, const OrientationMask & mask)
{
  const Vec6 e = tracking_error(ee, grasp, mask);
  return 2.0 * std::asin(std::min(1.0, e.tail<3>().norm()));
}

const char * to_string(SimEvent::Kind kind)
{
  switch(kind)
  {
    case SimEvent::Kind::meet:
      return "meet";
    case SimEvent::Kind::abort:
      return "abort";
    case SimEvent::Kind::hol_change:
      return "hol_change";
    case SimEvent::Kind::solver_failure:
      return "solver_failure";
  }
  return "unknown";
}

Simulation::Simulation(Scenario scenario)
: scenario_(std::move(scenario)), config_(scenario_.controller), grasp_(scenario_.grasp),
  hand_(scenario_.hand_trajectory()), sensor_(scenario_.sensor, scenario_.seed), observer_(config_.observer),
  lag_(scenario_.model->dof(), scenario_.actuator_lag), state_(scenario_.initial)
{
  if(!scenario_.model)
  {
    throw std::invalid_argument("Simulation: scenario has no robot model");
  }
}

Pose Simulation::tracked_pose(double t) const
{
  return hand_.pose(t) * scenario_.tracked_offset();
}

void Simulation::rearm_meet()
{
  meet_candidate_ = -1.0;
  meet_reported_ = false;
  metrics_.meet = false;
  metrics_.meet_time = std::numeric_limits<double>::quiet_NaN();
}

void Simulation::retarget(const Pose & goal, double duration)
{
  const double t = time();
  hand_.retarget(t, goal, duration);
  config_.tracking_enabled = true;
  config_.posture.reference = scenario_.controller.posture.reference;
  rearm_meet();
  events_.push_back({SimEvent::Kind::hol_change, t, {}});
}

void Simulation::abort(double duration)
{
  const double t = time();
  hand_.abort(t, duration);
  // stop following the hand; hold the current posture
  config_.tracking_enabled = false;
  config_.posture.reference = state_.q;
  rearm_meet();
  events_.push_back({SimEvent::Kind::abort, t, {}});
}

void Simulation::apply_scenario_events(double t)
{
  while(next_event_ < scenario_.events.size() && scenario_.events[next_event_].time <= t + 1e-9)
  {
    const HandEvent & ev = scenario_.events[next_event_++];
    if(ev.kind == HandEvent::Kind::abort)
    {
      abort(ev.duration);
    }
    else
    {
      retarget(ev.goal, ev.duration);
    }
  }
}

const CycleRecord & Simulation::step()
{
  const double t = time();
  const double dt = config_.dt;
  const RobotModel & model = *scenario_.model;

  apply_scenario_events(t);

  if(auto sample = sensor_.sample(t, [this](double ts) { return tracked_pose(ts); }))
  {
    observer_.set_measurement(*sample);
  }
  observer_.set_gains(config_.observer);

  const CycleOutput out = control_cycle(model, state_, observer_.state(), observer_.measurement(), grasp_, config_);

  CycleRecord r;
  r.t = t;
  r.q = state_.q;
  r.qdot = state_.qdot;
  r.qdd = out.qdd;
  r.tau = out.tau;
  r.object = tracked_pose(t);
  r.observer = observer_.state();
  r.grasp = out.grasp.pose;
  r.ee = out.ee;
  r.eta_obs = out.eta_obs;
  r.eta_tt = out.eta_tt;
  r.status = out.solution.status;
  r.failed = out.failed;

  if(out.failed)
  {
    ++metrics_.solver_failures;
    events_.push_back({SimEvent::Kind::solver_failure, t, out.solution.violated});
  }
  metrics_.degenerate_limit_cycles += out.limits.degenerate_joints > 0 ? 1 : 0;
  update_metrics(r);

  observer_.step(out.observer_accel, dt);
  state_ = step_arm(state_, lag_.filter(out.qdd, dt), dt);
  ++step_count_;
  last_ = std::move(r);
  return last_;
}

void Simulation::update_metrics(const CycleRecord & r)
{
  const RobotModel & model = *scenario_.model;
  constexpr double tol = 1e-6;
  ++metrics_.cycles;
  metrics_.peak_joint_speed = std::max(metrics_.peak_joint_speed, r.qdot.cwiseAbs().maxCoeff());
  const bool violated = (r.q.array() < model.q_min().array() - tol).any() ||
                        (r.q.array() > model.q_max().array() + tol).any() ||
                        (r.qdot.array().abs() > model.v_max().array() + tol).any() ||
                        (r.tau.array().abs() > model.tau_max().array() + tol).any();
  metrics_.limit_violations += violated ? 1 : 0;

  metrics_.terminal_position_error = (r.ee.position - r.grasp.position).norm();
  metrics_.terminal_orientation_error = masked_orientation_error(r.ee, r.grasp, grasp_.mask);

  const bool inside = config_.tracking_enabled &&
                      metrics_.terminal_position_error < scenario_.meet.position_tolerance &&
                      metrics_.terminal_orientation_error < scenario_.meet.orientation_tolerance;
  if(!inside)
  {
    meet_candidate_ = -1.0;
    return;
  }
  if(meet_candidate_ < 0.0)
  {
    meet_candidate_ = r.t;
  }
  if(!meet_reported_ && r.t - meet_candidate_ >= scenario_.meet.sustain - 1e-9)
  {
    meet_reported_ = true;
    metrics_.meet = true;
    metrics_.meet_time = meet_candidate_;
    events_.push_back({SimEvent::Kind::meet, r.t, {}});
  }
}

std::vector<SimEvent> Simulation::take_events()
{
  std::vector<SimEvent> out;
  out.swap(events_);
  return out;
}

RunLog run_scenario(const Scenario & scenario)
{
  Simulation sim(scenario);
  RunLog log;
  for(const Joint & j : scenario.model->joints())
  {
    log.joint_names.push_back(j.name);
  }
  const auto steps = static_cast<long long>(std::llround(scenario.duration / scenario.controller.dt));
  log.records.reserve(static_cast<std::size_t>(std::max(1LL, steps)));
  for(long long k = 0; k < std::max(1LL, steps); ++k)
  {
    log.records.push_back(sim.step());
  }
  log.metrics = sim.metrics();
  spdlog::info("{}: {} cycles, meet={} at {:.3f} s, terminal error {:.2e} m / {:.2e} rad, {} solver failures",
               scenario.name, log.metrics.cycles, log.metrics.meet, log.metrics.meet_time,
               log.metrics.terminal_position_error, log.metrics.terminal_orientation_error, log.metrics.solver_failures);
  return log;
}

} // namespace handover
