#include "handover/run_log.hpp"
#include "handover/simulation.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <sstream>

using namespace handover;
namespace oc = handover::oracle;

namespace
{

RunLog short_run()
{
  Scenario s = load_scenario(oc::data_dir() / "scenarios" / "s1_fixed_hol.json");
  s.duration = 0.05;
  return run_scenario(s);
}

void expect_bit_equal(const Eigen::VectorXd & a, const Eigen::VectorXd & b)
{
  ASSERT_EQ(a.size(), b.size());
  for(Eigen::Index i = 0; i < a.size(); ++i) EXPECT_EQ(a(i), b(i));
}

} // namespace

TEST(RunLog, ColumnLayout)
{
  const auto cols = csv_columns(7);
  EXPECT_EQ(cols.front(), "t");
  EXPECT_EQ(cols[1], "q0");
  EXPECT_EQ(cols.back(), "failed");
  EXPECT_EQ(cols.size(), 1u + 4 * 7 + 7 + 7 + 6 + 6 + 7 + 7 + 24 + 2);
}

TEST(RunLog, CsvRoundTripIsBitExact)
{
  const RunLog log = short_run();
  ASSERT_EQ(log.records.size(), 50u);
  std::stringstream ss;
  write_csv(ss, log);
  const RunLog back = read_csv(ss);
  ASSERT_EQ(back.records.size(), log.records.size());
  EXPECT_EQ(back.joint_names.size(), 7u);
  for(std::size_t i = 0; i < log.records.size(); ++i)
  {
    const CycleRecord & a = log.records[i];
    const CycleRecord & b = back.records[i];
    EXPECT_EQ(a.t, b.t);
    expect_bit_equal(a.q, b.q);
    expect_bit_equal(a.qdot, b.qdot);
    expect_bit_equal(a.qdd, b.qdd);
    expect_bit_equal(a.tau, b.tau);
    expect_bit_equal(a.object.orientation.wxyz(), b.object.orientation.wxyz());
    expect_bit_equal(a.observer.pose.position, b.observer.pose.position);
    expect_bit_equal(a.observer.twist, b.observer.twist);
    expect_bit_equal(a.observer.accel, b.observer.accel);
    expect_bit_equal(a.ee.orientation.wxyz(), b.ee.orientation.wxyz());
    expect_bit_equal(a.eta_tt.stacked(), b.eta_tt.stacked());
    EXPECT_EQ(a.status, b.status);
    EXPECT_EQ(a.failed, b.failed);
  }
  std::stringstream again;
  write_csv(again, back);
  std::stringstream first;
  write_csv(first, log);
  EXPECT_EQ(again.str(), first.str());
}

TEST(RunLog, MalformedRowReportsLineNumber)
{
  const RunLog log = short_run();
  std::stringstream ss;
  write_csv(ss, log);
  std::vector<std::string> lines;
  for(std::string line; std::getline(ss, line);) lines.push_back(line);
  lines[4] = lines[4].substr(0, lines[4].rfind(','));
  std::string text;
  for(const auto & l : lines) text += l + "\n";
  std::istringstream in(text);
  try
  {
    read_csv(in);
    FAIL() << "expected CsvError";
  }
  catch(const CsvError & e)
  {
    EXPECT_EQ(e.row(), 5);
  }
}

TEST(RunLog, RejectsBadHeaderAndValues)
{
  std::istringstream empty("");
  EXPECT_THROW(read_csv(empty), CsvError);
  std::istringstream header("time,q0\n");
  EXPECT_THROW(read_csv(header), CsvError);

  const RunLog log = short_run();
  std::stringstream ss;
  write_csv(ss, log);
  std::string text = ss.str();
  const auto second = text.find('\n') + 1;
  text.replace(second, text.find(',', second) - second, "abc");
  std::istringstream in(text);
  EXPECT_THROW(read_csv(in), CsvError);
}

TEST(RunLog, MetricsJson)
{
  RunMetrics m;
  m.meet = true;
  m.meet_time = 1.25;
  m.cycles = 10;
  const auto j = nlohmann::json::parse(metrics_to_json(m));
  EXPECT_EQ(j.at("meet"), true);
  EXPECT_EQ(j.at("meet_time"), 1.25);
  EXPECT_EQ(j.at("cycles"), 10);
  m.meet = false;
  m.meet_time = std::numeric_limits<double>::quiet_NaN();
  EXPECT_TRUE(nlohmann::json::parse(metrics_to_json(m)).at("meet_time").is_null());
}
