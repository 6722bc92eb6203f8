#pragma once

#include "handover/observer.hpp"
#include "handover/se3.hpp"

#include <vector>

namespace handover
{

struct MinJerkSample
{
  double position = 0.0;
  double velocity = 0.0;
  double acceleration = 0.0;
};

/// Quintic 10s^3 - 15s^4 + 6s^5 blend from s0 to s1 over `duration`; t is clamped to [0, duration].
MinJerkSample min_jerk(double s0, double s1, double duration, double t);

/**
 * Synthetic hand motion: a chain of minimum-jerk pose segments. Orientation
 * follows the geodesic between segment endpoints with the same time scaling.
 *
 * retarget() and abort() replace everything after the given time with a new
 * segment starting from the pose reached at that time, at rest (the junction
 * is continuous in pose only).
 */
class HandTrajectory
{
public:
  struct Segment
  {
    double start_time = 0.0;
    Pose start;
    Pose goal;
    double duration = 1.0;

    double end_time() const { return start_time + duration; }
  };

  explicit HandTrajectory(const Pose & start = Pose::identity());

  /// Append a segment beginning when the previous one ends.
  void append(const Pose & goal, double duration);
  /// Hold the current end pose for `duration`.
  void wait(double duration);

  /// Handover-location change at time t.
  void retarget(double t, const Pose & goal, double duration);
  /// Return to the initial pose, starting at time t.
  void abort(double t, double duration);

  FullState state(double t) const;
  Pose pose(double t) const { return state(t).pose; }

  const Pose & initial_pose() const { return initial_; }
  double end_time() const;
  const std::vector<Segment> & segments() const { return segments_; }

private:
  Pose end_pose() const;

  Pose initial_;
  std::vector<Segment> segments_;
};

} // namespace handover
