#pragma once

#include "handover/observer.hpp"
#include "handover/qp.hpp"
#include "handover/se3.hpp"
#include "handover/task_state.hpp"

#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace handover
{

/// One control period of a simulated handover.
struct CycleRecord
{
  double t = 0.0;
  Eigen::VectorXd q;
  Eigen::VectorXd qdot;
  Eigen::VectorXd qdd;
  Eigen::VectorXd tau;
  Pose object; ///< true pose of the observed frame
  FullState observer;
  Pose grasp;
  Pose ee;
  TaskState eta_obs;
  TaskState eta_tt;
  QpStatus status = QpStatus::optimal;
  bool failed = false;
};

struct RunMetrics
{
  bool meet = false;
  double meet_time = std::numeric_limits<double>::quiet_NaN();
  double terminal_position_error = 0.0; ///< [m]
  double terminal_orientation_error = 0.0; ///< masked, [rad]
  double peak_joint_speed = 0.0; ///< [rad/s]
  int solver_failures = 0;
  int limit_violations = 0; ///< cycles with q, qdot or tau outside the model limits
  int degenerate_limit_cycles = 0;
  long long cycles = 0;
  long long dropped_messages = 0; ///< outbound telemetry drops (service only)
};

struct RunLog
{
  std::vector<std::string> joint_names;
  std::vector<CycleRecord> records;
  RunMetrics metrics;
};

class CsvError : public std::runtime_error
{
public:
  CsvError(long long row, const std::string & message)
  : std::runtime_error("row " + std::to_string(row) + ": " + message), row_(row)
  {
  }
  long long row() const { return row_; }

private:
  long long row_;
};

/// Header of the per-cycle CSV for an n-joint robot.
std::vector<std::string> csv_columns(std::size_t joints);

/// Doubles are written in shortest round-trip form, so reading back is exact.
void write_csv(std::ostream & out, const RunLog & log);
std::string csv_row(const CycleRecord & r);

/// Parse a CSV written by write_csv; throws CsvError with the 1-based line number.
RunLog read_csv(std::istream & in);

std::string metrics_to_json(const RunMetrics & m, int indent = 2);

} // namespace handover
