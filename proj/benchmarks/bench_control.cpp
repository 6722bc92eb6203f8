#include "handover/controller.hpp"
#include "handover/simulation.hpp"

#include <benchmark/benchmark.h>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <random>

using namespace handover;

namespace
{

Scenario s1()
{
  spdlog::set_level(spdlog::level::warn);
  return load_scenario(std::filesystem::path(HANDOVER_DATA_DIR) / "scenarios" / "s1_fixed_hol.json");
}

/// Recorded S1 cycles, replayed as control-cycle inputs.
const RunLog & s1_log()
{
  static const RunLog log = [] {
    Scenario s = s1();
    s.duration = 4.0;
    return run_scenario(s);
  }();
  return log;
}

void BM_ControlCycle(benchmark::State & state)
{
  const Scenario s = s1();
  const RunLog & log = s1_log();
  std::size_t i = 0;
  for(auto _ : state)
  {
    const CycleRecord & r = log.records[i];
    const CycleOutput out = control_cycle(*s.model, {r.q, r.qdot}, r.observer, r.object, s.grasp, s.controller);
    benchmark::DoNotOptimize(out.tau.data());
    i = (i + 97) % log.records.size();
  }
}
BENCHMARK(BM_ControlCycle)->Unit(benchmark::kMicrosecond);

void BM_SimulationStep(benchmark::State & state)
{
  Simulation sim(s1());
  for(auto _ : state)
  {
    benchmark::DoNotOptimize(sim.step().tau.data());
  }
}
BENCHMARK(BM_SimulationStep)->Unit(benchmark::kMicrosecond);

void BM_SolveQuadraticProgram(benchmark::State & state)
{
  const auto dim = static_cast<Eigen::Index>(state.range(0));
  const Eigen::Index rows = dim + dim / 4;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  auto draw = [&](Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd m(r, c);
    for(Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = normal(rng);
    return m;
  };
  const Eigen::MatrixXd L = draw(dim, dim);
  const Eigen::MatrixXd H = L * L.transpose() + Eigen::MatrixXd::Identity(dim, dim);
  const Eigen::VectorXd g = draw(dim, 1);
  const Eigen::MatrixXd A = draw(rows, dim);
  const Eigen::VectorXd b = draw(rows, 1).cwiseAbs();
  for(auto _ : state)
  {
    const QpSolution sol = solve_quadratic_program(H, g, A, b);
    benchmark::DoNotOptimize(sol.x.data());
  }
}
BENCHMARK(BM_SolveQuadraticProgram)->Arg(19)->Arg(40)->Unit(benchmark::kMicrosecond);

} // namespace

BENCHMARK_MAIN();
