#include "service/wire.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace handover;
using namespace handover::service;
namespace oc = handover::oracle;

namespace
{

std::string error_of(const std::string & text)
{
  try
  {
    parse_command(text);
  }
  catch(const WireError & e)
  {
    return e.what();
  }
  return "<no error>";
}

} // namespace

TEST(Wire, Envelope)
{
  const json j = json::parse(envelope("state", 1.5, json{{"a", 1}}));
  EXPECT_EQ(j.at("type"), "state");
  EXPECT_EQ(j.at("t"), 1.5);
  EXPECT_EQ(j.at("payload").at("a"), 1);
}

TEST(Wire, PoseRoundTrip)
{
  Pose p;
  p.position = Vec3(0.1, -0.2, 0.3);
  p.orientation = UnitQuaternion::from_axis_angle(Vec3(1, 2, 3), 0.4);
  const json j = pose_json(p);
  EXPECT_EQ(j.at("quaternion").size(), 4u);
  const Pose back = parse_pose(j, "pose");
  EXPECT_EQ(back.position, p.position);
  EXPECT_LT(geodesic_angle(back.orientation, p.orientation), 1e-12);
  EXPECT_THROW(parse_pose(json::parse(R"({"position": [0, 0], "quaternion": [1, 0, 0, 0]})"), "x"), WireError);
  EXPECT_THROW(parse_pose(json::parse(R"({"position": [0, 0, 0], "quaternion": [2, 0, 0, 0]})"), "x"), WireError);
}

TEST(Wire, ParsesCommands)
{
  EXPECT_EQ(std::get<command::Hello>(parse_command(R"({"type": "hello", "payload": {"v": 1}})")).version, 1);
  const auto target = std::get<command::SetTargetPose>(parse_command(
      R"({"type": "set_target_pose", "payload": {"position": [0.4, 0, 0.2], "quaternion": [1, 0, 0, 0], "duration": 2}})"));
  EXPECT_EQ(target.pose.position.x(), 0.4);
  EXPECT_EQ(target.duration, 2.0);
  const auto grasp = std::get<command::SetGraspOffset>(parse_command(
      R"({"type": "set_grasp_offset", "payload": {"position": [0, 0, 0.1], "quaternion": [1, 0, 0, 0], "mask": "xy"}})"));
  ASSERT_TRUE(grasp.mask);
  EXPECT_EQ(grasp.mask->to_string(), "xy");
  EXPECT_FALSE(std::get<command::Abort>(parse_command(R"({"type": "abort"})")).duration);
  EXPECT_TRUE(std::holds_alternative<command::Pause>(parse_command(R"({"type": "pause"})")));
  EXPECT_TRUE(std::holds_alternative<command::Resume>(parse_command(R"({"type": "resume", "payload": {}})")));
  const auto w = std::get<command::SetWeights>(parse_command(R"({"type": "set_weights", "payload": {"tracking": 10}})"));
  EXPECT_EQ(w.tracking, 10.0);
  EXPECT_FALSE(w.observation);
}

TEST(Wire, RejectsMalformedCommands)
{
  EXPECT_EQ(error_of(R"({"type": "dance"})"), "unknown message type 'dance'");
  EXPECT_NE(error_of("not json").find("JSON"), std::string::npos);
  EXPECT_NE(error_of(R"({"payload": {}})").find("type"), std::string::npos);
  EXPECT_NE(error_of(R"({"type": "hello", "payload": {}})").find("payload.v"), std::string::npos);
  EXPECT_NE(error_of(R"({"type": "set_target_pose", "payload": {"position": [0, 0]}})"), "<no error>");
  EXPECT_NE(error_of(R"({"type": "abort", "payload": {"duration": -1}})").find("duration"), std::string::npos);
  EXPECT_NE(error_of(R"({"type": "set_weights", "payload": {}})"), "<no error>");
  EXPECT_NE(error_of(R"({"type": "set_grasp_offset", "payload": {"position": [0, 0, 0], "quaternion": [1, 0, 0, 0], "mask": "q"}})")
                .find("mask"),
            std::string::npos);
}

TEST(Wire, StatePayloadCarriesRecord)
{
  Scenario s = load_scenario(oc::data_dir() / "scenarios" / "s1_fixed_hol.json");
  Simulation sim(s);
  const CycleRecord & r = sim.step();
  const json p = state_payload(r, true);
  EXPECT_EQ(p.at("q").size(), 7u);
  EXPECT_EQ(p.at("q")[3].get<double>(), r.q(3));
  EXPECT_EQ(p.at("X_obs").at("position")[0].get<double>(), r.observer.pose.position.x());
  EXPECT_EQ(p.at("tracking"), true);
  EXPECT_EQ(p.at("solver_status"), "optimal");
  EXPECT_FALSE(state_payload(r).contains("tracking"));

  const json h = hello_payload("simulation", "s1", 7, 0.001);
  EXPECT_EQ(h.at("v"), protocol_version);
  EXPECT_EQ(h.at("model"), "/model");
}

TEST(Wire, ApplyCommandDrivesSimulation)
{
  Scenario s = load_scenario(oc::data_dir() / "scenarios" / "s1_fixed_hol.json");
  Simulation sim(s);
  sim.step();
  apply_command(sim, parse_command(R"({"type": "set_weights", "payload": {"posture": 0.5}})"));
  EXPECT_EQ(sim.config().weights.posture, 0.5);
  EXPECT_EQ(sim.config().weights.tracking, 100.0);
  apply_command(sim, parse_command(R"({"type": "abort"})"));
  EXPECT_FALSE(sim.tracking());
  apply_command(sim, parse_command(
                         R"({"type": "set_target_pose", "payload": {"position": [0.4, 0, 0.3], "quaternion": [1, 0, 0, 0]}})"));
  EXPECT_TRUE(sim.tracking());
  EXPECT_NEAR(sim.hand().end_time(), sim.time() + s.retarget_duration, 1e-12);
  apply_command(sim, parse_command(
                         R"({"type": "set_grasp_offset", "payload": {"position": [0, 0, 0.02], "quaternion": [1, 0, 0, 0], "mask": "z"}})"));
  EXPECT_EQ(sim.grasp().mask.to_string(), "z");
}
