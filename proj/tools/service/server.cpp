#include "server.hpp"

#include "wire.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include <deque>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

namespace handover::service
{

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace
{

std::string_view mime_type(const std::filesystem::path & path)
{
  const std::string ext = path.extension().string();
  if(ext == ".html" || ext == ".htm") return "text/html";
  if(ext == ".js" || ext == ".mjs") return "application/javascript";
  if(ext == ".css") return "text/css";
  if(ext == ".json" || ext == ".map") return "application/json";
  if(ext == ".svg") return "image/svg+xml";
  if(ext == ".png") return "image/png";
  if(ext == ".ico") return "image/x-icon";
  if(ext == ".wasm") return "application/wasm";
  if(ext == ".txt") return "text/plain";
  return "application/octet-stream";
}

/// Value of `key` in the query part of a request target.
std::optional<std::string> query_value(const std::string & target, const std::string & key)
{
  const std::size_t q = target.find('?');
  if(q == std::string::npos) return std::nullopt;
  std::istringstream query(target.substr(q + 1));
  std::string item;
  while(std::getline(query, item, '&'))
  {
    const std::size_t eq = item.find('=');
    const std::string name = eq == std::string::npos ? item : item.substr(0, eq);
    if(name == key)
    {
      return eq == std::string::npos ? std::string{} : item.substr(eq + 1);
    }
  }
  return std::nullopt;
}

std::string path_of(const std::string & target)
{
  return target.substr(0, target.find('?'));
}

} // namespace

class WsSession;

struct Server::Impl
{
  Options options;
  net::io_context ioc{1};
  tcp::acceptor acceptor{ioc};
  std::thread thread;
  std::map<std::uint64_t, std::weak_ptr<WsSession>> sessions; // I/O thread only
  std::uint64_t next_id = 0;
  std::atomic<std::size_t> client_count{0};
  std::atomic<long long> dropped{0};
  std::atomic<bool> stopped{false};

  void accept();
};

class WsSession : public std::enable_shared_from_this<WsSession>
{
public:
  WsSession(tcp::socket && socket, Server::Impl & server) : ws_(std::move(socket)), server_(server) {}

  void run(http::request<http::string_body> req)
  {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.text(true);
    ws_.async_accept(req, beast::bind_front_handler(&WsSession::on_accept, shared_from_this()));
  }

  void send(std::shared_ptr<const std::string> msg)
  {
    if(closing_) return;
    if(pending_.size() >= server_.options.queue_limit)
    {
      pending_.pop_front();
      ++server_.dropped;
    }
    pending_.push_back(std::move(msg));
    if(!writing_) write_next();
  }

  void close_after_flush()
  {
    close_requested_ = true;
    if(!writing_ && pending_.empty()) do_close();
  }

private:
  void on_accept(beast::error_code ec)
  {
    if(ec)
    {
      spdlog::debug("websocket handshake failed: {}", ec.message());
      return;
    }
    id_ = server_.next_id++;
    server_.sessions[id_] = weak_from_this();
    ++server_.client_count;
    joined_ = true;
    spdlog::info("client {} connected", id_);
    if(server_.options.greeting)
    {
      send(std::make_shared<const std::string>(server_.options.greeting()));
    }
    read();
  }

  void read()
  {
    ws_.async_read(buffer_, beast::bind_front_handler(&WsSession::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t)
  {
    if(ec)
    {
      leave();
      return;
    }
    std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    if(!ws_.got_text())
    {
      send(std::make_shared<const std::string>(envelope("error", 0.0, {{"message", "binary frames are not supported"}})));
    }
    else if(server_.options.on_message)
    {
      if(std::optional<Reply> reply = server_.options.on_message(text))
      {
        send(std::make_shared<const std::string>(std::move(reply->text)));
        if(reply->close)
        {
          close_after_flush();
          return;
        }
      }
    }
    read();
  }

  void write_next()
  {
    writing_ = true;
    current_ = std::move(pending_.front());
    pending_.pop_front();
    ws_.async_write(net::buffer(*current_), beast::bind_front_handler(&WsSession::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t)
  {
    writing_ = false;
    current_.reset();
    if(ec)
    {
      leave();
      return;
    }
    if(!pending_.empty())
    {
      write_next();
    }
    else if(close_requested_)
    {
      do_close();
    }
  }

  void do_close()
  {
    if(closing_) return;
    closing_ = true;
    ws_.async_close(websocket::close_code::normal, [self = shared_from_this()](beast::error_code) { self->leave(); });
  }

  void leave()
  {
    if(!joined_) return;
    joined_ = false;
    server_.sessions.erase(id_);
    --server_.client_count;
    spdlog::info("client {} disconnected", id_);
  }

  websocket::stream<beast::tcp_stream> ws_;
  Server::Impl & server_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> pending_;
  std::shared_ptr<const std::string> current_;
  std::uint64_t id_ = 0;
  bool joined_ = false;
  bool writing_ = false;
  bool closing_ = false;
  bool close_requested_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession>
{
public:
  HttpSession(tcp::socket && socket, Server::Impl & server) : stream_(std::move(socket)), server_(server) {}

  void run() { read(); }

private:
  void read()
  {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_, beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t)
  {
    if(ec)
    {
      stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
      return;
    }
    const std::string target(req_.target());
    if(websocket::is_upgrade(req_))
    {
      if(path_of(target) != "/ws")
      {
        respond(http::status::not_found, "text/plain", "WebSocket endpoint is /ws\n");
        return;
      }
      const std::optional<std::string> v = query_value(target, "v");
      if(v && *v != std::to_string(protocol_version))
      {
        respond(http::status::bad_request, "text/plain",
                "unsupported protocol version " + *v + " (server speaks " + std::to_string(protocol_version) + ")\n");
        return;
      }
      stream_.expires_never();
      std::make_shared<WsSession>(stream_.release_socket(), server_)->run(std::move(req_));
      return;
    }
    handle();
  }

  void handle()
  {
    if(req_.method() != http::verb::get && req_.method() != http::verb::head)
    {
      respond(http::status::method_not_allowed, "text/plain", "only GET and HEAD are supported\n");
      return;
    }
    const std::string target(req_.target());
    const std::string path(path_of(target));
    if(path == "/model")
    {
      if(server_.options.model_document.empty())
      {
        respond(http::status::not_found, "text/plain", "no model loaded\n");
      }
      else
      {
        respond(http::status::ok, "application/json", server_.options.model_document);
      }
      return;
    }
    if(path == "/ws")
    {
      respond(http::status::upgrade_required, "text/plain", "WebSocket upgrade required\n");
      return;
    }
    if(path.empty() || path.front() != '/' || path.find("..") != std::string::npos || server_.options.static_root.empty())
    {
      respond(http::status::not_found, "text/plain", "not found\n");
      return;
    }
    std::filesystem::path file = server_.options.static_root / path.substr(1);
    std::error_code fs_ec;
    if(std::filesystem::is_directory(file, fs_ec))
    {
      file /= "index.html";
    }
    std::ifstream in(file, std::ios::binary);
    if(!in)
    {
      respond(http::status::not_found, "text/plain", "not found\n");
      return;
    }
    std::ostringstream body;
    body << in.rdbuf();
    respond(http::status::ok, mime_type(file), body.str());
  }

  void respond(http::status status, std::string_view content_type, std::string body)
  {
    auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
    res->set(http::field::server, "handover");
    res->set(http::field::content_type, std::string(content_type));
    res->keep_alive(req_.keep_alive());
    const bool head = req_.method() == http::verb::head;
    const std::size_t size = body.size();
    res->body() = head ? std::string{} : std::move(body);
    res->prepare_payload();
    if(head)
    {
      res->content_length(size);
    }
    res_ = res;
    http::async_write(stream_, *res_, beast::bind_front_handler(&HttpSession::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t)
  {
    const bool keep = res_ && res_->keep_alive();
    res_.reset();
    if(ec) return;
    if(!keep)
    {
      stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
      return;
    }
    read();
  }

  beast::tcp_stream stream_;
  Server::Impl & server_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  std::shared_ptr<http::response<http::string_body>> res_;
};

void Server::Impl::accept()
{
  acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
    if(ec)
    {
      if(!stopped) spdlog::warn("accept failed: {}", ec.message());
      return;
    }
    std::make_shared<HttpSession>(std::move(socket), *this)->run();
    accept();
  });
}

Server::Server(Options options) : impl_(std::make_unique<Impl>())
{
  impl_->options = std::move(options);
  if(impl_->options.queue_limit == 0)
  {
    throw std::invalid_argument("Server: queue_limit must be positive");
  }
  const tcp::endpoint endpoint(net::ip::make_address(impl_->options.address), impl_->options.port);
  tcp::acceptor & acc = impl_->acceptor;
  acc.open(endpoint.protocol());
  acc.set_option(net::socket_base::reuse_address(true));
  acc.bind(endpoint); // throws boost::system::system_error when the port is busy
  acc.listen(net::socket_base::max_listen_connections);
  impl_->accept();
  impl_->thread = std::thread([impl = impl_.get()] { impl->ioc.run(); });
}

Server::~Server()
{
  shutdown(std::chrono::milliseconds(0));
}

unsigned short Server::port() const
{
  return impl_->acceptor.local_endpoint().port();
}

void Server::broadcast(std::string text)
{
  auto msg = std::make_shared<const std::string>(std::move(text));
  net::post(impl_->ioc, [impl = impl_.get(), msg] {
    for(auto & [id, weak] : impl->sessions)
    {
      if(auto s = weak.lock()) s->send(msg);
    }
  });
}

std::size_t Server::clients() const
{
  return impl_->client_count.load();
}

long long Server::dropped() const
{
  return impl_->dropped.load();
}

bool Server::wait_for_client(std::chrono::milliseconds timeout, const std::atomic<bool> & stop) const
{
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while(clients() == 0)
  {
    if(stop.load() || std::chrono::steady_clock::now() >= deadline) return false;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  return true;
}

void Server::shutdown(std::chrono::milliseconds grace)
{
  if(!impl_ || impl_->stopped.exchange(true)) return;
  net::post(impl_->ioc, [impl = impl_.get()] {
    beast::error_code ec;
    impl->acceptor.close(ec);
    for(auto & [id, weak] : impl->sessions)
    {
      if(auto s = weak.lock()) s->close_after_flush();
    }
  });
  const auto deadline = std::chrono::steady_clock::now() + grace;
  while(clients() > 0 && std::chrono::steady_clock::now() < deadline)
  {
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  impl_->ioc.stop();
  if(impl_->thread.joinable()) impl_->thread.join();
}

} // namespace handover::service
