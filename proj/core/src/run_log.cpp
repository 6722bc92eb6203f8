#include "handover/run_log.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace handover
{

namespace
{

constexpr const char * pose_fields[] = {"px", "py", "pz", "qw", "qx", "qy", "qz"};
constexpr const char * twist_fields[] = {"x", "y", "z", "wx", "wy", "wz"};

void pose_columns(std::vector<std::string> & cols, const std::string & prefix)
{
  for(const char * f : pose_fields) cols.push_back(prefix + "_" + f);
}

void append(std::string & row, double v)
{
  row += ',';
  fmt::format_to(std::back_inserter(row), "{}", v);
}

void append_pose(std::string & row, const Pose & p)
{
  const Vec3 & t = p.position;
  const Vec3 v = p.orientation.vec();
  for(double x : {t.x(), t.y(), t.z(), p.orientation.w(), v.x(), v.y(), v.z()}) append(row, x);
}

template<typename Derived>
void append_all(std::string & row, const Eigen::DenseBase<Derived> & v)
{
  for(Eigen::Index i = 0; i < v.size(); ++i) append(row, v(i));
}

class RowParser
{
public:
  RowParser(const std::vector<std::string_view> & cells, long long line) : cells_(cells), line_(line) {}

  double number()
  {
    if(pos_ >= cells_.size()) throw CsvError(line_, "too few fields");
    const std::string_view s = cells_[pos_++];
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if(res.ec != std::errc() || res.ptr != s.data() + s.size())
    {
      // from_chars rejects "inf"/"nan" spellings produced by fmt on some builds
      if(s == "inf") return std::numeric_limits<double>::infinity();
      if(s == "-inf") return -std::numeric_limits<double>::infinity();
      if(s == "nan") return std::numeric_limits<double>::quiet_NaN();
      throw CsvError(line_, fmt::format("field {}: not a number '{}'", pos_, s));
    }
    return v;
  }
  std::string_view text()
  {
    if(pos_ >= cells_.size()) throw CsvError(line_, "too few fields");
    return cells_[pos_++];
  }
  Eigen::VectorXd vector(std::size_t n)
  {
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for(Eigen::Index i = 0; i < v.size(); ++i) v(i) = number();
    return v;
  }
  Vec6 vec6() { return vector(6); }
  Pose pose()
  {
    Pose p;
    p.position = vector(3);
    const double w = number(), x = number(), y = number(), z = number();
    if(!(std::abs(std::sqrt(w * w + x * x + y * y + z * z) - 1.0) <= 1e-9))
    {
      throw CsvError(line_, "quaternion is not unit norm");
    }
    p.orientation = UnitQuaternion::from_unit(w, Vec3(x, y, z));
    return p;
  }
  std::size_t remaining() const { return cells_.size() - pos_; }

private:
  const std::vector<std::string_view> & cells_;
  long long line_;
  std::size_t pos_ = 0;
};

std::vector<std::string_view> split(std::string_view line)
{
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while(true)
  {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if(comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

} // namespace

std::vector<std::string> csv_columns(std::size_t joints)
{
  std::vector<std::string> cols{"t"};
  for(const char * prefix : {"q", "qdot", "qdd", "tau"})
  {
    for(std::size_t i = 0; i < joints; ++i) cols.push_back(fmt::format("{}{}", prefix, i));
  }
  pose_columns(cols, "obj");
  pose_columns(cols, "obs");
  for(const char * f : twist_fields) cols.push_back(std::string("obs_v") + f);
  for(const char * f : twist_fields) cols.push_back(std::string("obs_a") + f);
  pose_columns(cols, "grasp");
  pose_columns(cols, "ee");
  for(const char * task : {"eta_obs", "eta_tt"})
  {
    for(int i = 0; i < 6; ++i) cols.push_back(fmt::format("{}_e{}", task, i));
    for(int i = 0; i < 6; ++i) cols.push_back(fmt::format("{}_r{}", task, i));
  }
  cols.emplace_back("status");
  cols.emplace_back("failed");
  return cols;
}

std::string csv_row(const CycleRecord & r)
{
  std::string row = fmt::format("{}", r.t);
  append_all(row, r.q);
  append_all(row, r.qdot);
  append_all(row, r.qdd);
  append_all(row, r.tau);
  append_pose(row, r.object);
  append_pose(row, r.observer.pose);
  append_all(row, r.observer.twist);
  append_all(row, r.observer.accel);
  append_pose(row, r.grasp);
  append_pose(row, r.ee);
  for(const TaskState * eta : {&r.eta_obs, &r.eta_tt})
  {
    append_all(row, eta->error);
    append_all(row, eta->error_rate);
  }
  row += ',';
  row += to_string(r.status);
  row += r.failed ? ",1" : ",0";
  return row;
}

void write_csv(std::ostream & out, const RunLog & log)
{
  const std::size_t n = log.records.empty() ? log.joint_names.size() : static_cast<std::size_t>(log.records.front().q.size());
  const std::vector<std::string> cols = csv_columns(n);
  for(std::size_t i = 0; i < cols.size(); ++i)
  {
    out << (i ? "," : "") << cols[i];
  }
  out << '\n';
  for(const CycleRecord & r : log.records)
  {
    out << csv_row(r) << '\n';
  }
}

RunLog read_csv(std::istream & in)
{
  RunLog log;
  std::string line;
  if(!std::getline(in, line))
  {
    throw CsvError(1, "missing header");
  }
  if(!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string_view> header = split(line);
  const std::size_t fixed = csv_columns(0).size();
  if(header.size() < fixed || (header.size() - fixed) % 4 != 0)
  {
    throw CsvError(1, "unexpected header");
  }
  const std::size_t n = (header.size() - fixed) / 4;
  const std::vector<std::string> expected = csv_columns(n);
  for(std::size_t i = 0; i < expected.size(); ++i)
  {
    if(header[i] != expected[i])
    {
      throw CsvError(1, fmt::format("unexpected column '{}' (expected '{}')", header[i], expected[i]));
    }
  }
  for(std::size_t i = 0; i < n; ++i) log.joint_names.push_back(fmt::format("joint{}", i));

  long long line_no = 1;
  while(std::getline(in, line))
  {
    ++line_no;
    if(!line.empty() && line.back() == '\r') line.pop_back();
    if(line.empty()) continue;
    const std::vector<std::string_view> cells = split(line);
    if(cells.size() != expected.size())
    {
      throw CsvError(line_no, fmt::format("expected {} fields, got {}", expected.size(), cells.size()));
    }
    RowParser p(cells, line_no);
    CycleRecord r;
    r.t = p.number();
    r.q = p.vector(n);
    r.qdot = p.vector(n);
    r.qdd = p.vector(n);
    r.tau = p.vector(n);
    r.object = p.pose();
    r.observer.pose = p.pose();
    r.observer.twist = p.vec6();
    r.observer.accel = p.vec6();
    r.grasp = p.pose();
    r.ee = p.pose();
    r.eta_obs.error = p.vec6();
    r.eta_obs.error_rate = p.vec6();
    r.eta_tt.error = p.vec6();
    r.eta_tt.error_rate = p.vec6();
    const std::string_view status = p.text();
    if(status == "optimal")
      r.status = QpStatus::optimal;
    else if(status == "max_iterations")
      r.status = QpStatus::max_iterations;
    else if(status == "infeasible")
      r.status = QpStatus::infeasible;
    else
      throw CsvError(line_no, fmt::format("unknown solver status '{}'", status));
    const std::string_view failed = p.text();
    if(failed != "0" && failed != "1") throw CsvError(line_no, "failed flag must be 0 or 1");
    r.failed = failed == "1";
    if(!log.records.empty() && !(r.t > log.records.back().t))
    {
      throw CsvError(line_no, "time is not increasing");
    }
    log.records.push_back(std::move(r));
  }
  return log;
}

std::string metrics_to_json(const RunMetrics & m, int indent)
{
  nlohmann::json j;
  j["meet"] = m.meet;
  j["meet_time"] = std::isfinite(m.meet_time) ? nlohmann::json(m.meet_time) : nlohmann::json(nullptr);
  j["terminal_position_error"] = m.terminal_position_error;
  j["terminal_orientation_error"] = m.terminal_orientation_error;
  j["peak_joint_speed"] = m.peak_joint_speed;
  j["solver_failures"] = m.solver_failures;
  j["limit_violations"] = m.limit_violations;
  j["degenerate_limit_cycles"] = m.degenerate_limit_cycles;
  j["cycles"] = m.cycles;
  j["dropped_messages"] = m.dropped_messages;
  return j.dump(indent);
}

} // namespace handover
