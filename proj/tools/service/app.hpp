#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

namespace handover::service
{

/// Process exit codes.
enum ExitCode : int
{
  exit_ok = 0,
  exit_failure = 1, ///< runtime error (I/O, port busy)
  exit_invalid = 2, ///< invalid scenario, model, log or arguments
  exit_no_success = 3, ///< run completed without a meet or with solver failures
};

/// Configure the default logger (stderr) from HANDOVER_LOG_LEVEL.
void init_logging();

/// Bundled data directory: $HANDOVER_DATA_DIR, the source tree, or the install prefix.
std::filesystem::path data_dir();

struct RunOptions
{
  std::filesystem::path scenario;
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
};

/// Headless run; writes <out>/log.csv and <out>/metrics.json.
int cmd_run(const RunOptions & options);

struct ServeOptions
{
  std::filesystem::path scenario;
  std::string address = "127.0.0.1";
  unsigned short port = 8080;
  double realtime_scale = 1.0; ///< simulated seconds per wall second; 0 runs unpaced
  double state_period = 0.016; ///< [s] of simulated time between `state` messages
  double metrics_period = 1.0;
  std::filesystem::path static_dir;
  std::size_t queue_limit = 256;
  std::optional<double> stop_after; ///< stop once simulated time reaches this value
  std::function<void(unsigned short)> on_listening;
};

int cmd_serve(const ServeOptions & options, const std::atomic<bool> & stop);

struct ReplayOptions
{
  std::filesystem::path log;
  std::string address = "127.0.0.1";
  unsigned short port = 8080;
  double speed = 1.0;
  double state_period = 0.016;
  std::filesystem::path model;
  std::filesystem::path static_dir;
  bool wait_for_client = true;
  std::size_t queue_limit = 4096;
  std::function<void(unsigned short)> on_listening;
};

/// Stream a recorded run; starts when the first client connects and exits at the end of the log.
int cmd_replay(const ReplayOptions & options, const std::atomic<bool> & stop);

struct BenchOptions
{
  long long cycles = 10000;
  std::filesystem::path model;
};

/// Time control_cycle on the bundled arm and print latency statistics.
int cmd_bench(const BenchOptions & options);

} // namespace handover::service
