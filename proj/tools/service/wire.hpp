#pragma once

#include "handover/controller.hpp"
#include "handover/run_log.hpp"
#include "handover/simulation.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

namespace handover::service
{

using nlohmann::json;

inline constexpr int protocol_version = 1;

class WireError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// {"type": ..., "t": ..., "payload": ...}
std::string envelope(std::string_view type, double t, json payload);

json pose_json(const Pose & p);
/// {"position": [3], "quaternion": [w, x, y, z]}; throws WireError naming `field`.
Pose parse_pose(const json & j, const std::string & field);

/// `tracking` is omitted when unknown (replayed logs).
json state_payload(const CycleRecord & r, std::optional<bool> tracking = std::nullopt);
json metrics_payload(const RunMetrics & m, std::size_t clients);
json event_payload(const SimEvent & e);

/// Sent by the server on connect.
json hello_payload(std::string_view mode, std::string_view scenario, std::size_t joints, double dt);

namespace command
{

struct Hello
{
  int version = protocol_version;
};
struct SetTargetPose
{
  Pose pose;
  std::optional<double> duration;
};
struct SetGraspOffset
{
  Pose pose;
  std::optional<OrientationMask> mask;
};
struct Abort
{
  std::optional<double> duration;
};
struct Pause
{
};
struct Resume
{
};
struct SetWeights
{
  std::optional<double> observation;
  std::optional<double> tracking;
  std::optional<double> posture;
};

} // namespace command

using Command = std::variant<command::Hello,
                             command::SetTargetPose,
                             command::SetGraspOffset,
                             command::Abort,
                             command::Pause,
                             command::Resume,
                             command::SetWeights>;

/// Parse one client message; throws WireError with a readable reason.
Command parse_command(std::string_view text);

/// Apply a simulation command (Hello/Pause/Resume are handled by the caller).
void apply_command(Simulation & sim, const Command & cmd);

} // namespace handover::service
