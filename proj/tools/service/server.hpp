#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace handover::service
{

struct Reply
{
  std::string text;
  bool close = false; ///< close the connection once the reply is flushed
};

/**
 * HTTP + WebSocket endpoint on a private I/O thread.
 *
 *   GET /ws      WebSocket upgrade (optional ?v=<protocol version>)
 *   GET /model   robot model document
 *   GET /<path>  static files under `static_root` (index.html for directories)
 *
 * Each client has a bounded outbound queue; when it is full the oldest
 * pending message is dropped and counted.
 */
class Server
{
public:
  struct Options
  {
    std::string address = "127.0.0.1";
    unsigned short port = 0; ///< 0 picks a free port
    std::filesystem::path static_root;
    std::string model_document;
    std::size_t queue_limit = 256;
    /// Runs on the I/O thread for every text frame; the reply goes to the sender only.
    std::function<std::optional<Reply>(const std::string &)> on_message;
    /// First frame sent to every client.
    std::function<std::string()> greeting;
  };

  explicit Server(Options options);
  ~Server();
  Server(const Server &) = delete;
  Server & operator=(const Server &) = delete;

  unsigned short port() const;

  /// Thread-safe fan-out to every connected client.
  void broadcast(std::string text);

  std::size_t clients() const;
  long long dropped() const;

  /// Block until a client is connected, `stop` is set or the timeout expires.
  bool wait_for_client(std::chrono::milliseconds timeout, const std::atomic<bool> & stop) const;

  /// Flush pending frames, close every connection (bounded by `grace`) and stop the I/O thread.
  void shutdown(std::chrono::milliseconds grace = std::chrono::milliseconds(1000));

  struct Impl;

private:
  std::unique_ptr<Impl> impl_;
};

} // namespace handover::service
