#include "service/app.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <atomic>
#include <csignal>
#include <cstdio>

namespace
{

std::atomic<bool> stop_requested{false};

extern "C" void on_signal(int)
{
  stop_requested.store(true);
}

void print_port(unsigned short port)
{
  std::printf("listening on port %u\n", static_cast<unsigned>(port));
  std::fflush(stdout);
}

} // namespace

int main(int argc, char ** argv)
{
  using namespace handover::service;
  init_logging();
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  CLI::App app{"Proactive human-to-robot handover controller and simulator"};
  app.require_subcommand(1);

  RunOptions run;
  std::uint64_t seed = 0;
  double duration = 0.0;
  auto * run_cmd = app.add_subcommand("run", "Run a scenario headless and write log.csv + metrics.json");
  run_cmd->add_option("--scenario", run.scenario, "Scenario file")->required();
  run_cmd->add_option("--out", run.out, "Output directory")->required();
  auto * seed_opt = run_cmd->add_option("--seed", seed, "Override the scenario seed");
  auto * duration_opt = run_cmd->add_option("--duration", duration, "Override the scenario duration [s]");

  ServeOptions serve;
  serve.static_dir = data_dir() / "www";
  double stop_after = 0.0;
  auto * serve_cmd = app.add_subcommand("serve", "Run a scenario in real time behind a WebSocket endpoint");
  serve_cmd->add_option("--scenario", serve.scenario, "Scenario file")->required();
  serve_cmd->add_option("--port", serve.port, "TCP port (0 picks a free one)")->capture_default_str();
  serve_cmd->add_option("--address", serve.address, "Bind address")->capture_default_str();
  serve_cmd->add_option("--realtime-scale", serve.realtime_scale, "Simulated seconds per wall second (0 = unpaced)")
      ->capture_default_str();
  serve_cmd->add_option("--state-period", serve.state_period, "Simulated seconds between state messages")
      ->capture_default_str();
  serve_cmd->add_option("--static-dir", serve.static_dir, "Directory served at /")->capture_default_str();
  serve_cmd->add_option("--queue-limit", serve.queue_limit, "Outbound messages buffered per client")->capture_default_str();
  auto * stop_after_opt = serve_cmd->add_option("--stop-after", stop_after, "Exit once simulated time reaches this value");

  ReplayOptions replay;
  replay.static_dir = data_dir() / "www";
  replay.model = data_dir() / "models" / "panda.json";
  bool no_wait = false;
  auto * replay_cmd = app.add_subcommand("replay", "Stream a recorded log.csv over the WebSocket protocol");
  replay_cmd->add_option("--log", replay.log, "log.csv written by `run`")->required();
  replay_cmd->add_option("--port", replay.port, "TCP port (0 picks a free one)")->capture_default_str();
  replay_cmd->add_option("--address", replay.address, "Bind address")->capture_default_str();
  replay_cmd->add_option("--speed", replay.speed, "Playback speed factor")->capture_default_str();
  replay_cmd->add_option("--state-period", replay.state_period, "Logged seconds between state messages")
      ->capture_default_str();
  replay_cmd->add_option("--model", replay.model, "Robot model served at /model")->capture_default_str();
  replay_cmd->add_option("--static-dir", replay.static_dir, "Directory served at /")->capture_default_str();
  replay_cmd->add_flag("--no-wait", no_wait, "Start streaming immediately instead of at the first connection");

  BenchOptions bench;
  auto * bench_cmd = app.add_subcommand("bench", "Measure control-cycle latency on the bundled arm");
  bench_cmd->add_option("--cycles", bench.cycles, "Number of control cycles")->capture_default_str();
  bench_cmd->add_option("--model", bench.model, "Robot model file");

  try
  {
    app.parse(argc, argv);
  }
  catch(const CLI::ParseError & e)
  {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_invalid;
  }

  try
  {
    if(run_cmd->parsed())
    {
      if(*seed_opt) run.seed = seed;
      if(*duration_opt) run.duration = duration;
      return cmd_run(run);
    }
    if(serve_cmd->parsed())
    {
      if(*stop_after_opt) serve.stop_after = stop_after;
      serve.on_listening = print_port;
      return cmd_serve(serve, stop_requested);
    }
    if(replay_cmd->parsed())
    {
      replay.wait_for_client = !no_wait;
      replay.on_listening = print_port;
      return cmd_replay(replay, stop_requested);
    }
    return cmd_bench(bench);
  }
  catch(const std::exception & e)
  {
    spdlog::critical("{}", e.what());
    return exit_failure;
  }
}
