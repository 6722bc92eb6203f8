#pragma once

#include "handover/controller.hpp"
#include "handover/observer.hpp"
#include "handover/run_log.hpp"
#include "handover/scenario.hpp"
#include "handover/sensor.hpp"
#include "handover/trajectory.hpp"

#include <string>
#include <vector>

namespace handover
{

/// Semi-implicit Euler: qdot += qdd dt, then q += qdot dt.
JointState step_arm(const JointState & state, const Eigen::VectorXd & qdd, double dt);

/// First-order lag between commanded and realized joint acceleration (time constant 0 = ideal).
class ActuatorLag
{
public:
  ActuatorLag(Eigen::Index joints, double time_constant);
  const Eigen::VectorXd & filter(const Eigen::VectorXd & command, double dt);

private:
  double tau_;
  Eigen::VectorXd applied_;
};

/// Masked orientation error angle [rad] between the end-effector and the grasp frame.
double masked_orientation_error(const Pose & ee, const Pose & grasp, const OrientationMask & mask);

struct SimEvent
{
  enum class Kind
  {
    meet,
    abort,
    hol_change,
    solver_failure,
  };
  Kind kind;
  double t = 0.0;
  std::string detail;
};

const char * to_string(SimEvent::Kind kind);

/**
 * Closed-loop handover simulation advanced one control period at a time:
 * hand trajectory, sampled sensor, observer, control cycle, arm
 * integration. Commands (retarget, abort, grasp and weight changes) take
 * effect at the next step.
 */
class Simulation
{
public:
  explicit Simulation(Scenario scenario);

  double time() const { return static_cast<double>(step_count_) * config_.dt; }
  long long steps() const { return step_count_; }
  bool finished() const { return time() >= scenario_.duration - 0.5 * config_.dt; }

  /// Run one control period and return its record.
  const CycleRecord & step();

  /// Re-plan the hand toward `goal` (hand frame) from where it is now.
  void retarget(const Pose & goal, double duration);
  void retarget(const Pose & goal) { retarget(goal, scenario_.retarget_duration); }
  /// Human withdraws: hand returns to its start, the arm stops tracking and holds.
  void abort(double duration);
  void set_grasp(const GraspSpec & grasp) { grasp_ = grasp; }
  void set_weights(const TaskWeights & weights) { config_.weights = weights; }

  const Scenario & scenario() const { return scenario_; }
  const CycleRecord & last() const { return last_; }
  const JointState & joint_state() const { return state_; }
  const GraspSpec & grasp() const { return grasp_; }
  const ControllerConfig & config() const { return config_; }
  const HandTrajectory & hand() const { return hand_; }
  /// Metrics so far (terminal errors refer to the last step).
  const RunMetrics & metrics() const { return metrics_; }
  bool tracking() const { return config_.tracking_enabled; }

  /// Events raised since the previous call.
  std::vector<SimEvent> take_events();

private:
  Pose tracked_pose(double t) const;
  void apply_scenario_events(double t);
  void update_metrics(const CycleRecord & r);
  void rearm_meet();

  Scenario scenario_;
  ControllerConfig config_;
  GraspSpec grasp_;
  HandTrajectory hand_;
  PoseSensor sensor_;
  PoseObserver observer_;
  ActuatorLag lag_;
  JointState state_;
  long long step_count_ = 0;
  std::size_t next_event_ = 0;

  CycleRecord last_;
  RunMetrics metrics_;
  double meet_candidate_ = -1.0; ///< start of the current in-tolerance window, < 0 when outside
  bool meet_reported_ = false;
  std::vector<SimEvent> events_;
};

/// Run a scenario to its duration.
RunLog run_scenario(const Scenario & scenario);

} // namespace handover
