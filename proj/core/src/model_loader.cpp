#include "handover/robot_model.hpp"

#include "json_util.hpp"

#include <fstream>
#include <sstream>

namespace handover
{

namespace
{

using ModelReader = detail::Reader<ModelError>;

Joint parse_joint(const ModelReader & r)
{
  r.require_object();
  Joint j;
  j.name = r.string("name", "joint");
  j.axis = r.child("axis").vec3();
  j.origin = r.has("origin") ? r.child("origin").pose() : Pose::identity();

  const ModelReader lim = r.child("limits");
  j.limits.q_min = lim.number("q_min");
  j.limits.q_max = lim.number("q_max");
  j.limits.v_max = lim.number("v_max");
  j.limits.a_max = lim.number("a_max");
  j.limits.tau_max = lim.number("tau_max");

  const ModelReader link = r.child("link");
  j.link.mass = link.number("mass");
  j.link.com = link.child("com").vec3();
  const Eigen::VectorXd I = link.child("inertia").vector(9);
  j.link.inertia = Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(I.data());
  return j;
}

} // namespace

RobotModel load_model(std::string_view json_text)
{
  nlohmann::json doc;
  try
  {
    doc = nlohmann::json::parse(json_text);
  }
  catch(const nlohmann::json::parse_error & e)
  {
    throw ModelError("$", std::string("invalid JSON: ") + e.what());
  }
  const ModelReader root(doc, "");
  root.require_object();

  const std::string name = root.string("name", "robot");
  const Vec3 gravity = root.has("gravity") ? root.child("gravity").vec3() : Vec3(0.0, 0.0, -9.81);

  const ModelReader joints_node = root.child("joints");
  std::vector<Joint> joints;
  for(std::size_t i = 0; i < joints_node.array_size(); ++i)
  {
    joints.push_back(parse_joint(joints_node.element(i)));
  }
  const Pose ee = root.child("end_effector").pose();

  std::optional<Eigen::VectorXd> ready;
  if(root.has("ready_posture"))
  {
    ready = root.child("ready_posture").vector(joints.size());
  }
  return RobotModel(name, std::move(joints), ee, gravity, ready);
}

RobotModel load_model_file(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if(!in)
  {
    throw ModelError(path.string(), "cannot open model file");
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return load_model(ss.str());
}

} // namespace handover
