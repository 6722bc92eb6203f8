#include "handover/sensor.hpp"

#include <cmath>
#include <stdexcept>

namespace handover
{

Pose measure_pose(const Pose & truth, const SensorModel & model, Rng & rng)
{
  Pose noisy = truth;
  if(model.position_noise > 0.0)
  {
    for(int i = 0; i < 3; ++i)
    {
      noisy.position(i) += rng.uniform(-model.position_noise, model.position_noise);
    }
  }
  if(model.orientation_noise > 0.0)
  {
    Vec3 axis;
    do
    {
      axis = Vec3(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    } while(axis.squaredNorm() > 1.0 || axis.squaredNorm() < 1e-6);
    const double angle = rng.uniform(-model.orientation_noise, model.orientation_noise);
    noisy.orientation = UnitQuaternion::from_axis_angle(axis, angle) * noisy.orientation;
  }
  return model.calibration * noisy;
}

PoseSensor::PoseSensor(SensorModel model, std::uint64_t seed) : model_(model), rng_(seed)
{
  if(!(model_.rate > 0.0) || model_.latency < 0.0)
  {
    throw std::invalid_argument("PoseSensor: rate must be positive and latency non-negative");
  }
}

std::optional<Pose> PoseSensor::sample(double t, const std::function<Pose(double)> & truth)
{
  // tolerance absorbs the rounding of t = k * dt on the caller side
  const double ticks_elapsed = std::floor(t * model_.rate + 1e-9);
  if(static_cast<double>(next_tick_) > ticks_elapsed)
  {
    return std::nullopt;
  }
  const double tick_time = ticks_elapsed / model_.rate;
  next_tick_ = static_cast<long long>(ticks_elapsed) + 1;
  return measure_pose(truth(std::max(0.0, tick_time - model_.latency)), model_, rng_);
}

} // namespace handover
