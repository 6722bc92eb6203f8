#pragma once

#include "handover/robot_model.hpp"
#include "handover/se3.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace handover::detail
{

using nlohmann::json;

/// JSON field access that reports failures as ModelError-style "path: message".
template<typename Error>
class Reader
{
public:
  Reader(const json & node, std::string path) : node_(node), path_(std::move(path)) {}

  const json & node() const { return node_; }
  const std::string & path() const { return path_; }

  bool has(const char * key) const { return node_.is_object() && node_.contains(key); }

  Reader child(const char * key) const
  {
    require_object();
    if(!node_.contains(key))
    {
      throw Error(sub(key), "missing required field");
    }
    return {node_.at(key), sub(key)};
  }

  Reader element(std::size_t i) const { return {node_.at(i), path_ + "[" + std::to_string(i) + "]"}; }

  std::size_t array_size() const
  {
    if(!node_.is_array())
    {
      throw Error(path_, "expected an array");
    }
    return node_.size();
  }

  double number() const
  {
    if(!node_.is_number())
    {
      throw Error(path_, "expected a number");
    }
    return node_.get<double>();
  }

  double number(const char * key, double fallback) const { return has(key) ? child(key).number() : fallback; }
  double number(const char * key) const { return child(key).number(); }

  std::string string() const
  {
    if(!node_.is_string())
    {
      throw Error(path_, "expected a string");
    }
    return node_.get<std::string>();
  }

  std::string string(const char * key, const std::string & fallback) const
  {
    return has(key) ? child(key).string() : fallback;
  }

  bool boolean(const char * key, bool fallback) const
  {
    if(!has(key)) return fallback;
    const Reader r = child(key);
    if(!r.node_.is_boolean())
    {
      throw Error(r.path_, "expected a boolean");
    }
    return r.node_.template get<bool>();
  }

  Eigen::VectorXd vector(std::size_t expected = 0) const
  {
    const std::size_t n = array_size();
    if(expected != 0 && n != expected)
    {
      throw Error(path_, "expected " + std::to_string(expected) + " numbers, got " + std::to_string(n));
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for(std::size_t i = 0; i < n; ++i)
    {
      v(static_cast<Eigen::Index>(i)) = element(i).number();
    }
    return v;
  }

  Vec3 vec3() const { return vector(3); }

  /// {"translation": [x,y,z], "rotation": [w,x,y,z]}; both optional.
  Pose pose() const
  {
    require_object();
    Pose p;
    if(has("translation"))
    {
      p.position = child("translation").vec3();
    }
    if(has("rotation"))
    {
      const Reader r = child("rotation");
      const Eigen::VectorXd q = r.vector(4);
      if(std::abs(q.norm() - 1.0) > 1e-6)
      {
        throw Error(r.path_, "rotation quaternion (w,x,y,z) must be unit norm");
      }
      p.orientation = UnitQuaternion(q(0), q(1), q(2), q(3));
    }
    return p;
  }

  void require_object() const
  {
    if(!node_.is_object())
    {
      throw Error(path_, "expected an object");
    }
  }

private:
  std::string sub(const char * key) const { return path_.empty() ? std::string(key) : path_ + "." + key; }

  const json & node_;
  std::string path_;
};

inline json pose_to_json(const Pose & p)
{
  const auto & t = p.position;
  const auto & q = p.orientation;
  return {{"translation", {t.x(), t.y(), t.z()}}, {"rotation", {q.w(), q.vec().x(), q.vec().y(), q.vec().z()}}};
}

} // namespace handover::detail
