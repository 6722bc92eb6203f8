#include "handover/scenario.hpp"

#include "json_util.hpp"

#include <fstream>
#include <sstream>

namespace handover
{

namespace
{

using Reader = detail::Reader<ScenarioError>;

TaskGains parse_gains(const Reader & r, const TaskGains & fallback)
{
  TaskGains g = fallback;
  auto diag = [](const Reader & node) -> Vec6 {
    if(node.node().is_number())
    {
      return Vec6::Constant(node.number());
    }
    return node.vector(6);
  };
  if(r.has("stiffness"))
  {
    g.stiffness = diag(r.child("stiffness"));
    g.damping = 2.0 * g.stiffness.cwiseSqrt();
  }
  if(r.has("damping"))
  {
    g.damping = diag(r.child("damping"));
  }
  if(!g.positive())
  {
    throw ScenarioError(r.path(), "gains must be strictly positive");
  }
  return g;
}

void parse_controller(const Reader & r, const RobotModel & model, ControllerConfig & c)
{
  r.require_object();
  if(r.has("weights"))
  {
    const Reader w = r.child("weights");
    c.weights.observation = w.number("observation", c.weights.observation);
    c.weights.tracking = w.number("tracking", c.weights.tracking);
    c.weights.posture = w.number("posture", c.weights.posture);
    if(!(c.weights.observation > 0.0 && c.weights.tracking > 0.0 && c.weights.posture > 0.0))
    {
      throw ScenarioError(w.path(), "weights must be strictly positive");
    }
  }
  if(r.has("observer_gains"))
  {
    c.observer = parse_gains(r.child("observer_gains"), c.observer);
  }
  if(r.has("tracking_gains"))
  {
    const Reader t = r.child("tracking_gains");
    const double k = t.number("translation_stiffness", 1.0);
    const double ratio = t.number("orientation_ratio", 2.0);
    if(!(k > 0.0 && ratio > 0.0))
    {
      throw ScenarioError(t.path(), "stiffness and ratio must be strictly positive");
    }
    c.tracking = default_tracking_gains(k, ratio);
  }
  if(r.has("posture"))
  {
    const Reader p = r.child("posture");
    const auto n = static_cast<std::size_t>(model.dof());
    if(p.has("reference"))
    {
      c.posture.reference = p.child("reference").vector(n);
    }
    if(p.has("stiffness"))
    {
      c.posture.stiffness.setConstant(p.number("stiffness"));
      c.posture.damping = 2.0 * c.posture.stiffness.cwiseSqrt();
    }
    if(p.has("damping"))
    {
      c.posture.damping.setConstant(p.number("damping"));
    }
    if((c.posture.stiffness.array() <= 0.0).any() || (c.posture.damping.array() <= 0.0).any())
    {
      throw ScenarioError(p.path(), "gains must be strictly positive");
    }
  }
  c.dt = r.number("dt", c.dt);
  if(!(c.dt > 0.0))
  {
    throw ScenarioError(r.path().empty() ? "dt" : r.path() + ".dt", "must be positive");
  }
  c.limit_horizon = r.number("limit_horizon", c.limit_horizon);
  c.torque_limits = r.boolean("torque_limits", c.torque_limits);
  if(r.has("robot_spheres"))
  {
    const Reader list = r.child("robot_spheres");
    for(std::size_t i = 0; i < list.array_size(); ++i)
    {
      const Reader s = list.element(i);
      LinkSphere ls;
      const double link = s.number("link");
      if(link < 0.0 || link >= static_cast<double>(model.dof()) || link != std::floor(link))
      {
        throw ScenarioError(s.path() + ".link", "not a joint index of the model");
      }
      ls.link = static_cast<Eigen::Index>(link);
      ls.center = s.has("center") ? s.child("center").vec3() : Vec3::Zero();
      ls.radius = s.number("radius");
      if(!(ls.radius > 0.0)) throw ScenarioError(s.path() + ".radius", "must be positive");
      c.robot_spheres.push_back(ls);
    }
  }
  if(r.has("obstacles"))
  {
    const Reader list = r.child("obstacles");
    for(std::size_t i = 0; i < list.array_size(); ++i)
    {
      const Reader s = list.element(i);
      Sphere o{s.child("center").vec3(), s.number("radius")};
      if(!(o.radius > 0.0)) throw ScenarioError(s.path() + ".radius", "must be positive");
      c.obstacles.push_back(o);
    }
  }
}

double positive(const Reader & r, const char * key, double fallback)
{
  const double v = r.number(key, fallback);
  if(!(v > 0.0))
  {
    throw ScenarioError(r.path().empty() ? key : r.path() + "." + key, "must be positive");
  }
  return v;
}

} // namespace

const char * to_string(HandoverMode mode)
{
  return mode == HandoverMode::giver ? "giver" : "receiver";
}

HandTrajectory Scenario::hand_trajectory() const
{
  HandTrajectory traj(hand_start);
  for(const HandSegment & s : hand_segments)
  {
    traj.append(s.goal, s.duration);
  }
  return traj;
}

Scenario parse_scenario(std::string_view json_text, const std::filesystem::path & base_dir)
{
  nlohmann::json doc;
  try
  {
    doc = nlohmann::json::parse(json_text);
  }
  catch(const nlohmann::json::parse_error & e)
  {
    throw ScenarioError("$", std::string("invalid JSON: ") + e.what());
  }
  const Reader root(doc, "");
  root.require_object();

  Scenario s;
  s.name = root.string("name", "scenario");

  const Reader robot = root.child("robot");
  s.model_path = robot.string();
  if(s.model_path.is_relative())
  {
    s.model_path = base_dir / s.model_path;
  }
  try
  {
    s.model = std::make_shared<const RobotModel>(load_model_file(s.model_path));
  }
  catch(const ModelError & e)
  {
    throw ScenarioError("robot", e.what());
  }
  const RobotModel & model = *s.model;
  const auto n = static_cast<std::size_t>(model.dof());

  const std::string mode = root.string("mode", "giver");
  if(mode == "giver")
    s.mode = HandoverMode::giver;
  else if(mode == "receiver")
    s.mode = HandoverMode::receiver;
  else
    throw ScenarioError("mode", "expected \"giver\" or \"receiver\"");

  s.duration = positive(root, "duration", s.duration);
  const double seed = root.number("seed", 0.0);
  if(seed < 0.0 || seed != std::floor(seed))
  {
    throw ScenarioError("seed", "must be a non-negative integer");
  }
  s.seed = static_cast<std::uint64_t>(seed);

  s.initial.q = model.ready_posture();
  s.initial.qdot = Eigen::VectorXd::Zero(model.dof());
  if(root.has("initial_state"))
  {
    const Reader init = root.child("initial_state");
    if(init.has("q")) s.initial.q = init.child("q").vector(n);
    if(init.has("qdot")) s.initial.qdot = init.child("qdot").vector(n);
  }
  for(Eigen::Index i = 0; i < model.dof(); ++i)
  {
    if(s.initial.q(i) < model.q_min()(i) || s.initial.q(i) > model.q_max()(i))
    {
      throw ScenarioError("initial_state.q[" + std::to_string(i) + "]", "outside the joint limits");
    }
  }

  if(root.has("grasp"))
  {
    const Reader g = root.child("grasp");
    s.grasp.local = g.pose();
    if(g.has("mask"))
    {
      try
      {
        s.grasp.mask = OrientationMask::parse(g.child("mask").string());
      }
      catch(const std::invalid_argument & e)
      {
        throw ScenarioError("grasp.mask", e.what());
      }
    }
  }
  if(root.has("object_in_hand"))
  {
    s.object_in_hand = root.child("object_in_hand").pose();
  }

  const Reader hand = root.child("hand");
  s.hand_start = hand.child("start").pose();
  if(hand.has("segments"))
  {
    const Reader segs = hand.child("segments");
    for(std::size_t i = 0; i < segs.array_size(); ++i)
    {
      const Reader seg = segs.element(i);
      HandSegment hs;
      hs.duration = positive(seg, "duration", 1.0);
      hs.goal = seg.has("goal") ? seg.child("goal").pose() : (s.hand_segments.empty() ? s.hand_start : s.hand_segments.back().goal);
      s.hand_segments.push_back(hs);
    }
  }
  if(hand.has("events"))
  {
    const Reader evs = hand.child("events");
    for(std::size_t i = 0; i < evs.array_size(); ++i)
    {
      const Reader ev = evs.element(i);
      HandEvent he;
      const std::string kind = ev.child("type").string();
      if(kind == "hol_change")
      {
        he.kind = HandEvent::Kind::hol_change;
        he.goal = ev.child("goal").pose();
      }
      else if(kind == "abort")
      {
        he.kind = HandEvent::Kind::abort;
      }
      else
      {
        throw ScenarioError(ev.path() + ".type", "expected \"hol_change\" or \"abort\"");
      }
      he.time = ev.number("time");
      if(he.time < 0.0) throw ScenarioError(ev.path() + ".time", "must be non-negative");
      he.duration = positive(ev, "duration", 1.0);
      s.events.push_back(he);
    }
    std::stable_sort(s.events.begin(), s.events.end(), [](const HandEvent & a, const HandEvent & b) { return a.time < b.time; });
  }
  s.retarget_duration = positive(hand, "retarget_duration", s.retarget_duration);

  if(root.has("sensor"))
  {
    const Reader sn = root.child("sensor");
    s.sensor.rate = positive(sn, "rate", s.sensor.rate);
    s.sensor.latency = sn.number("latency", 0.0);
    s.sensor.position_noise = sn.number("position_noise", 0.0);
    s.sensor.orientation_noise = sn.number("orientation_noise", 0.0);
    if(s.sensor.latency < 0.0 || s.sensor.position_noise < 0.0 || s.sensor.orientation_noise < 0.0)
    {
      throw ScenarioError("sensor", "latency and noise bounds must be non-negative");
    }
    if(sn.has("calibration")) s.sensor.calibration = sn.child("calibration").pose();
  }

  s.controller = ControllerConfig::defaults(model);
  if(root.has("controller"))
  {
    parse_controller(root.child("controller"), model, s.controller);
  }
  s.actuator_lag = root.number("actuator_lag", 0.0);
  if(s.actuator_lag < 0.0) throw ScenarioError("actuator_lag", "must be non-negative");

  if(root.has("meet"))
  {
    const Reader m = root.child("meet");
    s.meet.position_tolerance = positive(m, "position_tolerance", s.meet.position_tolerance);
    s.meet.orientation_tolerance = positive(m, "orientation_tolerance", s.meet.orientation_tolerance);
    s.meet.sustain = m.number("sustain", s.meet.sustain);
    if(s.meet.sustain < 0.0) throw ScenarioError("meet.sustain", "must be non-negative");
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if(!in)
  {
    throw ScenarioError(path.string(), "cannot open scenario file");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  Scenario s = parse_scenario(buf.str(), path.parent_path());
  if(s.name == "scenario") s.name = path.stem().string();
  return s;
}

} // namespace handover
