#pragma once

#include "handover/se3.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>

namespace handover
{

/// Pose sensor characteristics. Defaults: 60 Hz, ideal otherwise.
struct SensorModel
{
  double rate = 60.0; ///< [Hz]
  double latency = 0.0; ///< [s]
  double position_noise = 0.0; ///< uniform bound per axis [m]
  double orientation_noise = 0.0; ///< uniform bound on the perturbation angle [rad]
  Pose calibration; ///< residual sensor-to-world offset, applied as calibration * truth
};

/// Deterministic uniform draws (bit-identical across standard libraries).
class Rng
{
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform(double lo, double hi)
  {
    return lo + (hi - lo) * static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

private:
  std::mt19937_64 engine_;
};

/// Apply noise and calibration offset to a true pose.
Pose measure_pose(const Pose & truth, const SensorModel & model, Rng & rng);

/**
 * Sampled sensor: emits at most one measurement per tick k / rate. A tick is
 * delivered at the first call with t >= tick time; the measured pose is the
 * truth at (tick time - latency). Ticks skipped by a coarse caller are dropped.
 */
class PoseSensor
{
public:
  PoseSensor(SensorModel model, std::uint64_t seed);

  std::optional<Pose> sample(double t, const std::function<Pose(double)> & truth);

  const SensorModel & model() const { return model_; }

private:
  SensorModel model_;
  Rng rng_;
  long long next_tick_ = 0;
};

} // namespace handover
