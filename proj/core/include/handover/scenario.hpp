#pragma once

#include "handover/controller.hpp"
#include "handover/robot_model.hpp"
#include "handover/sensor.hpp"
#include "handover/trajectory.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace handover
{

class ScenarioError : public std::runtime_error
{
public:
  ScenarioError(const std::string & path, const std::string & message)
  : std::runtime_error(path.empty() ? message : path + ": " + message), field_(path)
  {
  }
  const std::string & field() const { return field_; }

private:
  std::string field_;
};

/// Giver: the human brings an object and the observer tracks it. Receiver: the observer tracks the hand.
enum class HandoverMode
{
  giver,
  receiver,
};

const char * to_string(HandoverMode mode);

struct HandSegment
{
  Pose goal;
  double duration = 1.0;
};

struct HandEvent
{
  enum class Kind
  {
    hol_change,
    abort,
  };
  Kind kind = Kind::hol_change;
  double time = 0.0;
  Pose goal; ///< new hand goal (hol_change only)
  double duration = 1.0;
};

/// Success thresholds on the end-effector / grasp-frame distance.
struct MeetCriteria
{
  double position_tolerance = 0.005; ///< [m]
  double orientation_tolerance = 3.0 * 3.14159265358979323846 / 180.0; ///< [rad]
  double sustain = 0.1; ///< [s]
};

struct Scenario
{
  std::string name;
  std::filesystem::path model_path;
  std::shared_ptr<const RobotModel> model;
  HandoverMode mode = HandoverMode::giver;
  double duration = 10.0; ///< [s]
  std::uint64_t seed = 0;

  JointState initial;
  GraspSpec grasp;
  /// Pose of the object in the hand frame (giver mode).
  Pose object_in_hand;
  Pose hand_start;
  std::vector<HandSegment> hand_segments;
  std::vector<HandEvent> events;
  /// Duration of re-plans issued by interactive target changes.
  double retarget_duration = 0.5;

  SensorModel sensor;
  ControllerConfig controller;
  double actuator_lag = 0.0; ///< first-order time constant [s], 0 = ideal
  MeetCriteria meet;

  /// Frame tracked by the observer, expressed in the hand frame.
  Pose tracked_offset() const { return mode == HandoverMode::giver ? object_in_hand : Pose::identity(); }
  HandTrajectory hand_trajectory() const;
};

/// Parse a scenario document. Relative model paths resolve against `base_dir`.
Scenario parse_scenario(std::string_view json_text, const std::filesystem::path & base_dir);
Scenario load_scenario(const std::filesystem::path & path);

} // namespace handover
