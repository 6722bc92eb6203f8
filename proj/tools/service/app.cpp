#include "app.hpp"

#include "server.hpp"
#include "wire.hpp"

#include "handover/run_log.hpp"
#include "handover/scenario.hpp"
#include "handover/simulation.hpp"

#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#ifndef HANDOVER_SOURCE_DATA_DIR
#define HANDOVER_SOURCE_DATA_DIR ""
#endif
#ifndef HANDOVER_INSTALL_DATA_DIR
#define HANDOVER_INSTALL_DATA_DIR ""
#endif

namespace handover::service
{

namespace
{

using Clock = std::chrono::steady_clock;

std::string read_file(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if(!in)
  {
    throw std::runtime_error("cannot read " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Clock::duration seconds(double s)
{
  return std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(s));
}

/// Commands received on the I/O thread, drained by the control loop between cycles.
class CommandQueue
{
public:
  void push(Command c)
  {
    std::lock_guard lock(mutex_);
    queue_.push_back(std::move(c));
  }
  std::deque<Command> drain()
  {
    std::lock_guard lock(mutex_);
    std::deque<Command> out;
    out.swap(queue_);
    return out;
  }

private:
  std::mutex mutex_;
  std::deque<Command> queue_;
};

std::optional<Reply> handshake_reply(const command::Hello & hello, double t)
{
  if(hello.version != protocol_version)
  {
    return Reply{envelope("error", t,
                          {{"message", fmt::format("unsupported protocol version {} (server speaks {})", hello.version,
                                                   protocol_version)}}),
                 true};
  }
  return Reply{envelope("hello", t, {{"v", protocol_version}, {"accepted", true}}), false};
}

} // namespace

void init_logging()
{
  auto logger = spdlog::stderr_color_mt("handover");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if(const char * env = std::getenv("HANDOVER_LOG_LEVEL"))
  {
    const spdlog::level::level_enum level = spdlog::level::from_str(env);
    if(level == spdlog::level::off && std::string_view(env) != "off")
    {
      spdlog::warn("HANDOVER_LOG_LEVEL='{}' not recognized; using info", env);
    }
    else
    {
      spdlog::set_level(level);
    }
  }
}

std::filesystem::path data_dir()
{
  if(const char * env = std::getenv("HANDOVER_DATA_DIR"))
  {
    return env;
  }
  std::error_code ec;
  const std::filesystem::path source(HANDOVER_SOURCE_DATA_DIR);
  if(!source.empty() && std::filesystem::is_directory(source, ec))
  {
    return source;
  }
  return HANDOVER_INSTALL_DATA_DIR;
}

int cmd_run(const RunOptions & options)
{
  Scenario scenario;
  try
  {
    scenario = load_scenario(options.scenario);
  }
  catch(const ScenarioError & e)
  {
    spdlog::error("invalid scenario {}: {}", options.scenario.string(), e.what());
    return exit_invalid;
  }
  if(options.seed) scenario.seed = *options.seed;
  if(options.duration)
  {
    if(!(*options.duration > 0.0))
    {
      spdlog::error("--duration must be positive");
      return exit_invalid;
    }
    scenario.duration = *options.duration;
  }

  const RunLog log = run_scenario(scenario);

  std::error_code ec;
  std::filesystem::create_directories(options.out, ec);
  if(ec)
  {
    spdlog::error("cannot create output directory {}: {}", options.out.string(), ec.message());
    return exit_failure;
  }
  {
    std::ofstream csv(options.out / "log.csv");
    write_csv(csv, log);
    std::ofstream metrics(options.out / "metrics.json");
    metrics << metrics_to_json(log.metrics) << '\n';
    if(!csv || !metrics)
    {
      spdlog::error("failed to write logs to {}", options.out.string());
      return exit_failure;
    }
  }
  std::printf("%s\n", metrics_to_json(log.metrics).c_str());
  if(log.metrics.solver_failures > 0)
  {
    spdlog::error("{} solver failures", log.metrics.solver_failures);
    return exit_no_success;
  }
  return log.metrics.meet ? exit_ok : exit_no_success;
}

int cmd_serve(const ServeOptions & options, const std::atomic<bool> & stop)
{
  if(options.realtime_scale < 0.0 || !(options.state_period > 0.0) || !(options.metrics_period > 0.0))
  {
    spdlog::error("--realtime-scale must be >= 0 and periods positive");
    return exit_invalid;
  }
  Scenario scenario;
  std::string model_document;
  try
  {
    scenario = load_scenario(options.scenario);
    model_document = read_file(scenario.model_path);
  }
  catch(const ScenarioError & e)
  {
    spdlog::error("invalid scenario {}: {}", options.scenario.string(), e.what());
    return exit_invalid;
  }

  Simulation sim(scenario);
  CommandQueue inbound;
  std::atomic<double> sim_time{0.0};

  Server::Options so;
  so.address = options.address;
  so.port = options.port;
  so.static_root = options.static_dir;
  so.model_document = model_document;
  so.queue_limit = options.queue_limit;
  so.greeting = [&] {
    return envelope("hello", sim_time.load(),
                    hello_payload("simulation", scenario.name, static_cast<std::size_t>(scenario.model->dof()),
                                  scenario.controller.dt));
  };
  so.on_message = [&](const std::string & text) -> std::optional<Reply> {
    try
    {
      Command cmd = parse_command(text);
      if(const auto * hello = std::get_if<command::Hello>(&cmd))
      {
        return handshake_reply(*hello, sim_time.load());
      }
      inbound.push(std::move(cmd));
      return std::nullopt;
    }
    catch(const WireError & e)
    {
      return Reply{envelope("error", sim_time.load(), {{"message", e.what()}}), false};
    }
  };

  std::unique_ptr<Server> server;
  try
  {
    server = std::make_unique<Server>(so);
  }
  catch(const std::exception & e)
  {
    spdlog::error("cannot listen on {}:{}: {}", options.address, options.port, e.what());
    return exit_failure;
  }
  spdlog::info("serving {} on http://{}:{}/ (WebSocket /ws)", scenario.name, options.address, server->port());
  if(options.on_listening) options.on_listening(server->port());

  bool paused = false;
  double next_state = 0.0;
  double next_metrics = 0.0;
  auto wall_origin = Clock::now();
  double sim_origin = 0.0;
  auto send_metrics = [&] {
    RunMetrics m = sim.metrics();
    m.dropped_messages = server->dropped();
    server->broadcast(envelope("metrics", sim.time(), metrics_payload(m, server->clients())));
  };

  while(!stop.load())
  {
    if(options.stop_after && sim.time() >= *options.stop_after - 0.5 * scenario.controller.dt) break;

    for(Command & cmd : inbound.drain())
    {
      if(std::holds_alternative<command::Pause>(cmd))
      {
        if(!paused) server->broadcast(envelope("event", sim.time(), {{"kind", "paused"}}));
        paused = true;
      }
      else if(std::holds_alternative<command::Resume>(cmd))
      {
        if(paused) server->broadcast(envelope("event", sim.time(), {{"kind", "resumed"}}));
        paused = false;
        wall_origin = Clock::now();
        sim_origin = sim.time();
      }
      else
      {
        apply_command(sim, cmd);
      }
    }

    if(paused)
    {
      // keep clients fed with the frozen state
      if(sim.steps() > 0) server->broadcast(envelope("state", sim.last().t, state_payload(sim.last(), sim.tracking())));
      std::this_thread::sleep_for(seconds(options.state_period));
      continue;
    }

    const CycleRecord & r = sim.step();
    sim_time.store(sim.time());
    for(const SimEvent & e : sim.take_events())
    {
      server->broadcast(envelope("event", e.t, event_payload(e)));
      if(e.kind == SimEvent::Kind::meet) send_metrics();
    }
    if(r.t >= next_state - 1e-9)
    {
      server->broadcast(envelope("state", r.t, state_payload(r, sim.tracking())));
      next_state = r.t + options.state_period;
    }
    if(r.t >= next_metrics - 1e-9)
    {
      send_metrics();
      next_metrics = r.t + options.metrics_period;
    }
    if(options.realtime_scale > 0.0)
    {
      std::this_thread::sleep_until(wall_origin + seconds((sim.time() - sim_origin) / options.realtime_scale));
    }
  }
  send_metrics();
  server->shutdown();
  spdlog::info("stopped at t = {:.3f} s", sim.time());
  return exit_ok;
}

int cmd_replay(const ReplayOptions & options, const std::atomic<bool> & stop)
{
  if(!(options.speed > 0.0) || !(options.state_period > 0.0))
  {
    spdlog::error("--speed and the state period must be positive");
    return exit_invalid;
  }
  RunLog log;
  try
  {
    std::ifstream in(options.log);
    if(!in)
    {
      spdlog::error("cannot open log {}", options.log.string());
      return exit_invalid;
    }
    log = read_csv(in);
  }
  catch(const CsvError & e)
  {
    spdlog::error("malformed log {}: {}", options.log.string(), e.what());
    return exit_invalid;
  }
  if(log.records.empty())
  {
    spdlog::error("log {} has no rows", options.log.string());
    return exit_invalid;
  }
  std::string model_document;
  if(!options.model.empty())
  {
    try
    {
      model_document = read_file(options.model);
    }
    catch(const std::exception & e)
    {
      spdlog::error("{}", e.what());
      return exit_invalid;
    }
  }
  const auto joints = static_cast<std::size_t>(log.records.front().q.size());
  const double dt = log.records.size() > 1 ? log.records[1].t - log.records[0].t : 0.0;

  Server::Options so;
  so.address = options.address;
  so.port = options.port;
  so.static_root = options.static_dir;
  so.model_document = model_document;
  so.queue_limit = options.queue_limit;
  const std::string name = options.log.stem().string();
  so.greeting = [&] { return envelope("hello", log.records.front().t, hello_payload("replay", name, joints, dt)); };
  so.on_message = [&](const std::string & text) -> std::optional<Reply> {
    try
    {
      const Command cmd = parse_command(text);
      if(const auto * hello = std::get_if<command::Hello>(&cmd))
      {
        return handshake_reply(*hello, 0.0);
      }
      return Reply{envelope("error", 0.0, {{"message", "replay is read-only"}}), false};
    }
    catch(const WireError & e)
    {
      return Reply{envelope("error", 0.0, {{"message", e.what()}}), false};
    }
  };

  std::unique_ptr<Server> server;
  try
  {
    server = std::make_unique<Server>(so);
  }
  catch(const std::exception & e)
  {
    spdlog::error("cannot listen on {}:{}: {}", options.address, options.port, e.what());
    return exit_failure;
  }
  spdlog::info("replaying {} ({} rows) on http://{}:{}/", options.log.string(), log.records.size(), options.address,
               server->port());
  if(options.on_listening) options.on_listening(server->port());

  if(options.wait_for_client)
  {
    while(!server->wait_for_client(std::chrono::milliseconds(100), stop))
    {
      if(stop.load())
      {
        server->shutdown();
        return exit_ok;
      }
    }
  }

  const double t0 = log.records.front().t;
  const auto wall_origin = Clock::now();
  double next_state = t0;
  for(std::size_t i = 0; i < log.records.size() && !stop.load(); ++i)
  {
    const CycleRecord & r = log.records[i];
    const bool last = i + 1 == log.records.size();
    if(r.t < next_state - 1e-9 && !last) continue;
    std::this_thread::sleep_until(wall_origin + seconds((r.t - t0) / options.speed));
    server->broadcast(envelope("state", r.t, state_payload(r)));
    next_state = r.t + options.state_period;
  }
  server->broadcast(envelope("event", log.records.back().t, {{"kind", "replay_end"}}));
  server->shutdown();
  return exit_ok;
}

int cmd_bench(const BenchOptions & options)
{
  if(options.cycles <= 0)
  {
    spdlog::error("--cycles must be positive");
    return exit_invalid;
  }
  const std::filesystem::path model_path = options.model.empty() ? data_dir() / "models" / "panda.json" : options.model;
  RobotModel model = [&] {
    try
    {
      return load_model_file(model_path);
    }
    catch(const ModelError & e)
    {
      spdlog::error("{}", e.what());
      std::exit(exit_invalid);
    }
  }();

  const ControllerConfig config = ControllerConfig::defaults(model);
  JointState state{model.ready_posture(), Eigen::VectorXd::Zero(model.dof())};
  const Pose ee = forward_kinematics(model, state.q);
  GraspSpec grasp;
  FullState observer = FullState::at_rest(Pose{ee.position + Vec3(0.1, -0.05, 0.05), ee.orientation});
  Pose measurement = observer.pose;

  std::vector<double> micros;
  micros.reserve(static_cast<std::size_t>(options.cycles));
  int failures = 0;
  for(long long k = 0; k < options.cycles; ++k)
  {
    // slowly moving target so the active set changes over the run
    const double t = static_cast<double>(k) * config.dt;
    measurement.position = observer.pose.position + 0.01 * Vec3(std::sin(t), std::cos(t), 0.0);
    const auto start = Clock::now();
    const CycleOutput out = control_cycle(model, state, observer, measurement, grasp, config);
    micros.push_back(std::chrono::duration<double, std::micro>(Clock::now() - start).count());
    failures += out.failed ? 1 : 0;
    observer = integrate_observer(observer, out.observer_accel, config.dt);
    const Eigen::VectorXd qdot = state.qdot + out.qdd * config.dt;
    state.q += qdot * config.dt;
    state.qdot = qdot;
  }
  std::sort(micros.begin(), micros.end());
  auto pct = [&](double p) { return micros[static_cast<std::size_t>(p * static_cast<double>(micros.size() - 1))]; };
  double mean = 0.0;
  for(double m : micros) mean += m;
  mean /= static_cast<double>(micros.size());
  fmt::print("{{\"cycles\": {}, \"median_us\": {:.2f}, \"p99_us\": {:.2f}, \"max_us\": {:.2f}, \"mean_us\": {:.2f}, "
             "\"solver_failures\": {}}}\n",
             options.cycles, pct(0.5), pct(0.99), micros.back(), mean, failures);
  return failures == 0 ? exit_ok : exit_no_success;
}

} // namespace handover::service
