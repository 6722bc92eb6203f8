#include "wire.hpp"

#include <cmath>

namespace handover::service
{

namespace
{

json vec_json(const Eigen::Ref<const Eigen::VectorXd> & v)
{
  json a = json::array();
  for(Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

double finite_number(const json & j, const std::string & field)
{
  if(!j.is_number()) throw WireError(field + ": expected a number");
  const double v = j.get<double>();
  if(!std::isfinite(v)) throw WireError(field + ": must be finite");
  return v;
}

std::optional<double> optional_positive(const json & payload, const char * key)
{
  if(!payload.contains(key)) return std::nullopt;
  const double v = finite_number(payload.at(key), std::string("payload.") + key);
  if(!(v > 0.0)) throw WireError(std::string("payload.") + key + ": must be positive");
  return v;
}

} // namespace

std::string envelope(std::string_view type, double t, json payload)
{
  json j;
  j["type"] = type;
  j["t"] = t;
  j["payload"] = std::move(payload);
  return j.dump();
}

json pose_json(const Pose & p)
{
  const Vec3 v = p.orientation.vec();
  return {{"position", {p.position.x(), p.position.y(), p.position.z()}},
          {"quaternion", {p.orientation.w(), v.x(), v.y(), v.z()}}};
}

Pose parse_pose(const json & j, const std::string & field)
{
  if(!j.is_object()) throw WireError(field + ": expected an object");
  Pose p;
  if(!j.contains("position")) throw WireError(field + ".position: missing");
  const json & pos = j.at("position");
  if(!pos.is_array() || pos.size() != 3) throw WireError(field + ".position: expected 3 numbers");
  for(int i = 0; i < 3; ++i) p.position(i) = finite_number(pos[i], field + ".position");
  if(j.contains("quaternion"))
  {
    const json & q = j.at("quaternion");
    if(!q.is_array() || q.size() != 4) throw WireError(field + ".quaternion: expected 4 numbers (w, x, y, z)");
    double c[4];
    for(int i = 0; i < 4; ++i) c[i] = finite_number(q[i], field + ".quaternion");
    if(std::abs(std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2] + c[3] * c[3]) - 1.0) > 1e-3)
    {
      throw WireError(field + ".quaternion: must be unit norm");
    }
    p.orientation = UnitQuaternion(c[0], c[1], c[2], c[3]);
  }
  return p;
}

json state_payload(const CycleRecord & r, std::optional<bool> tracking)
{
  json p;
  p["q"] = vec_json(r.q);
  p["qdot"] = vec_json(r.qdot);
  p["X_ee"] = pose_json(r.ee);
  p["X_obj"] = pose_json(r.object);
  p["X_obs"] = pose_json(r.observer.pose);
  p["X_grasp"] = pose_json(r.grasp);
  p["eta_obs_norm"] = r.eta_obs.norm();
  p["eta_tt_norm"] = r.eta_tt.norm();
  p["solver_status"] = to_string(r.status);
  p["failed"] = r.failed;
  if(tracking) p["tracking"] = *tracking;
  return p;
}

json metrics_payload(const RunMetrics & m, std::size_t clients)
{
  json p = json::parse(metrics_to_json(m, -1));
  p["clients"] = clients;
  return p;
}

json event_payload(const SimEvent & e)
{
  json p{{"kind", to_string(e.kind)}};
  if(!e.detail.empty()) p["detail"] = e.detail;
  return p;
}

json hello_payload(std::string_view mode, std::string_view scenario, std::size_t joints, double dt)
{
  return {{"v", protocol_version}, {"mode", mode}, {"scenario", scenario}, {"joints", joints}, {"dt", dt}, {"model", "/model"}};
}

Command parse_command(std::string_view text)
{
  json j;
  try
  {
    j = json::parse(text);
  }
  catch(const json::parse_error &)
  {
    throw WireError("message is not valid JSON");
  }
  if(!j.is_object() || !j.contains("type") || !j.at("type").is_string())
  {
    throw WireError("message must be an object with a string 'type'");
  }
  const std::string type = j.at("type").get<std::string>();
  const json payload = j.value("payload", json::object());
  if(!payload.is_object())
  {
    throw WireError("payload must be an object");
  }

  if(type == "hello")
  {
    if(!payload.contains("v") || !payload.at("v").is_number_integer())
    {
      throw WireError("payload.v: protocol version required");
    }
    return command::Hello{payload.at("v").get<int>()};
  }
  if(type == "set_target_pose")
  {
    return command::SetTargetPose{parse_pose(payload, "payload"), optional_positive(payload, "duration")};
  }
  if(type == "set_grasp_offset")
  {
    command::SetGraspOffset c{parse_pose(payload, "payload"), std::nullopt};
    if(payload.contains("mask"))
    {
      if(!payload.at("mask").is_string()) throw WireError("payload.mask: expected a string");
      try
      {
        c.mask = OrientationMask::parse(payload.at("mask").get<std::string>());
      }
      catch(const std::invalid_argument & e)
      {
        throw WireError(std::string("payload.mask: ") + e.what());
      }
    }
    return c;
  }
  if(type == "abort") return command::Abort{optional_positive(payload, "duration")};
  if(type == "pause") return command::Pause{};
  if(type == "resume") return command::Resume{};
  if(type == "set_weights")
  {
    command::SetWeights c{optional_positive(payload, "observation"), optional_positive(payload, "tracking"),
                          optional_positive(payload, "posture")};
    if(!c.observation && !c.tracking && !c.posture)
    {
      throw WireError("set_weights: expected at least one of observation, tracking, posture");
    }
    return c;
  }
  throw WireError("unknown message type '" + type + "'");
}

void apply_command(Simulation & sim, const Command & cmd)
{
  std::visit(
      [&sim](const auto & c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr(std::is_same_v<T, command::SetTargetPose>)
        {
          sim.retarget(c.pose, c.duration.value_or(sim.scenario().retarget_duration));
        }
        else if constexpr(std::is_same_v<T, command::SetGraspOffset>)
        {
          GraspSpec g = sim.grasp();
          g.local = c.pose;
          if(c.mask) g.mask = *c.mask;
          sim.set_grasp(g);
        }
        else if constexpr(std::is_same_v<T, command::Abort>)
        {
          sim.abort(c.duration.value_or(1.0));
        }
        else if constexpr(std::is_same_v<T, command::SetWeights>)
        {
          TaskWeights w = sim.config().weights;
          if(c.observation) w.observation = *c.observation;
          if(c.tracking) w.tracking = *c.tracking;
          if(c.posture) w.posture = *c.posture;
          sim.set_weights(w);
        }
      },
      cmd);
}

} // namespace handover::service
