#include "live_server.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <chrono>
#include <csignal>
#include <deque>
#include <optional>
#include <random>
#include <string_view>
#include <utility>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <nlohmann/json.hpp>

#include "hrigame/errors.hpp"
#include "hrigame/scenario_io.hpp"
#include "hrigame/wire.hpp"

namespace hrigame {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using Clock = std::chrono::steady_clock;

namespace {

// Telemetry beyond this backlog is dropped for a slow client; control replies never are.
constexpr std::size_t kMaxQueuedFrames = 256;
// A tick handler running later than this behind schedule resynchronizes instead of bursting.
constexpr int kMaxLagTicks = 25;

bool valid_scenario_name(std::string_view name) {
  return !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

std::optional<std::string> query_value(std::string_view target, std::string_view key) {
  auto it = std::find(target.begin(), target.end(), '?');
  while (it != target.end()) {
    const auto begin = std::next(it);
    it = std::find(begin, target.end(), '&');
    const auto eq = std::find(begin, it, '=');
    if (target.substr(static_cast<std::size_t>(begin - target.begin()),
                      static_cast<std::size_t>(eq - begin)) == key) {
      return eq == it ? std::string() : std::string(std::next(eq), it);
    }
  }
  return std::nullopt;
}

std::string_view path_of(std::string_view target) { return target.substr(0, target.find('?')); }

std::string_view view(beast::string_view s) { return {s.data(), s.size()}; }

std::string new_session_id(std::uint64_t serial) {
  static std::mt19937_64 rng{std::random_device{}()};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%llx-%016llx", static_cast<unsigned long long>(serial),
                static_cast<unsigned long long>(rng()));
  return buf;
}

}  // namespace

std::vector<std::string> list_scenarios(const std::filesystem::path& dir) {
  std::vector<std::string> names;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (entry.path().extension() == ".json") names.push_back(entry.path().stem().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

class WsSession;

struct LiveServer::Impl {
  explicit Impl(ServerOptions opts) : options(std::move(opts)) {}

  void accept();
  std::size_t active_sessions();
  void shutdown();

  ServerOptions options;
  std::vector<std::weak_ptr<WsSession>> sessions;
  std::uint64_t next_serial = 1;
  net::io_context ioc{1};
  tcp::acceptor acceptor{ioc};
  net::steady_timer stop_timer{ioc};
};

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket socket, LiveServer::Impl& server, std::string scenario)
      : ws_(std::move(socket)), server_(server), scenario_(std::move(scenario)),
        timer_(ws_.get_executor()) {}

  void start(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (!ec) self->on_accept();
    });
  }

  bool running() const { return session_.has_value() && !closing_; }

  void close() {
    if (closing_) return;
    closing_ = true;
    timer_.cancel();
    if (outbox_.empty()) begin_close();
  }

 private:
  void on_accept() {
    id_ = new_session_id(server_.next_serial++);
    try {
      if (!valid_scenario_name(scenario_)) {
        throw ValidationError("query parameter 'scenario' must name a scenario file");
      }
      const auto path = server_.options.scenario_dir / (scenario_ + ".json");
      session_.emplace(LiveSession::start(load_scenario(path).scenario, server_.options.live));
    } catch (const Error& e) {
      send(wire::encode_server(ErrorMessage{e.what()}, id_), true);
      close();
      return;
    }
    server_.sessions.push_back(weak_from_this());
    send(wire::encode_server(session_->gains(), id_), true);
    next_tick_ = Clock::now();
    read();
    schedule();
  }

  void read() {
    ws_.async_read(in_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->closing_ = true;
        self->timer_.cancel();
        return;
      }
      self->inbox_.push_back(beast::buffers_to_string(self->in_.data()));
      self->in_.consume(self->in_.size());
      self->read();
    });
  }

  void schedule() {
    const auto period = std::chrono::duration_cast<Clock::duration>(
        std::chrono::duration<double>(session_->dt()));
    next_tick_ += period;
    const auto now = Clock::now();
    if (now - next_tick_ > kMaxLagTicks * period) next_tick_ = now;
    timer_.expires_at(next_tick_);
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (!ec && !self->closing_) self->tick();
    });
  }

  void tick() {
    // Commands received since the last tick take effect before it is integrated.
    while (!inbox_.empty()) {
      const std::string text = std::move(inbox_.front());
      inbox_.pop_front();
      try {
        for (const ServerEvent& ev : session_->handle(wire::decode_client(text, id_))) {
          send(wire::encode_server(ev, id_), true);
        }
      } catch (const Error& e) {
        send(wire::encode_server(ErrorMessage{e.what()}, id_), true);
      }
    }
    try {
      const Telemetry t = session_->advance();
      if (t.tick % static_cast<std::uint64_t>(session_->config().telemetry_decimation) == 0) {
        send(wire::encode_server(t, id_), false);
      }
    } catch (const Error& e) {
      send(wire::encode_server(ErrorMessage{e.what()}, id_), true);
      close();
      return;
    }
    schedule();
  }

  void send(std::string frame, bool control) {
    if (!control && outbox_.size() >= kMaxQueuedFrames) return;
    outbox_.push_back(std::move(frame));
    if (outbox_.size() == 1) write();
  }

  void write() {
    ws_.text(true);
    ws_.async_write(net::buffer(outbox_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      if (ec) {
                        self->closing_ = true;
                        self->timer_.cancel();
                        return;
                      }
                      self->outbox_.pop_front();
                      if (!self->outbox_.empty()) {
                        self->write();
                      } else if (self->closing_) {
                        self->begin_close();
                      }
                    });
  }

  void begin_close() {
    ws_.async_close(websocket::close_code::normal,
                    [self = shared_from_this()](beast::error_code) {});
  }

  websocket::stream<beast::tcp_stream> ws_;
  LiveServer::Impl& server_;
  std::string scenario_;
  std::string id_;
  std::optional<LiveSession> session_;
  net::steady_timer timer_;
  Clock::time_point next_tick_;
  beast::flat_buffer in_;
  std::deque<std::string> inbox_;
  std::deque<std::string> outbox_;
  bool closing_ = false;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket socket, LiveServer::Impl& server)
      : stream_(std::move(socket)), server_(server) {}

  void start() { read(); }

 private:
  void read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) {
                       if (ec) return self->shutdown();
                       self->on_request();
                     });
  }

  void on_request() {
    const std::string target(req_.target());
    if (websocket::is_upgrade(req_) && path_of(target) == "/session") {
      stream_.expires_never();
      std::make_shared<WsSession>(stream_.release_socket(), server_,
                                  query_value(target, "scenario").value_or(""))
          ->start(std::move(req_));
      return;
    }
    respond();
  }

  void respond() {
    auto res = std::make_shared<http::response<http::string_body>>();
    res->version(req_.version());
    res->keep_alive(req_.keep_alive());
    res->set(http::field::content_type, "application/json");
    res->set(http::field::access_control_allow_origin, "*");
    const std::string_view path = path_of(view(req_.target()));
    nlohmann::json body;
    if (req_.method() != http::verb::get) {
      res->result(http::status::method_not_allowed);
      body = {{"error", "only GET is supported"}};
    } else if (path == "/health") {
      res->result(http::status::ok);
      body = {{"status", "ok"}, {"sessions", server_.active_sessions()}};
    } else if (path == "/scenarios") {
      res->result(http::status::ok);
      body = {{"scenarios", list_scenarios(server_.options.scenario_dir)}};
    } else {
      res->result(http::status::not_found);
      body = {{"error", "no such resource"}};
    }
    res->body() = body.dump();
    res->prepare_payload();
    http::async_write(stream_, *res,
                      [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
                        if (ec || !res->keep_alive()) return self->shutdown();
                        self->read();
                      });
  }

  void shutdown() {
    beast::error_code ec;
    stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
  }

  beast::tcp_stream stream_;
  LiveServer::Impl& server_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

void LiveServer::Impl::accept() {
  acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
    if (ec) return;
    std::make_shared<HttpConnection>(std::move(socket), *this)->start();
    accept();
  });
}

std::size_t LiveServer::Impl::active_sessions() {
  std::erase_if(sessions, [](const auto& w) { return w.expired(); });
  return static_cast<std::size_t>(std::count_if(sessions.begin(), sessions.end(), [](const auto& w) {
    const auto s = w.lock();
    return s && s->running();
  }));
}

void LiveServer::Impl::shutdown() {
  beast::error_code ec;
  acceptor.close(ec);
  for (const auto& w : sessions) {
    if (auto s = w.lock()) s->close();
  }
  // Give close frames a moment to flush before the loop ends.
  stop_timer.expires_after(std::chrono::milliseconds(100));
  stop_timer.async_wait([this](beast::error_code) { ioc.stop(); });
}

LiveServer::LiveServer(ServerOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

LiveServer::~LiveServer() = default;

void LiveServer::listen() {
  beast::error_code ec;
  const auto address = net::ip::make_address(impl_->options.address, ec);
  if (ec) throw IoError("invalid listen address '" + impl_->options.address + "'");
  const tcp::endpoint endpoint{address, impl_->options.port};
  auto& acc = impl_->acceptor;
  acc.open(endpoint.protocol(), ec);
  if (!ec) acc.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) acc.bind(endpoint, ec);
  if (!ec) acc.listen(net::socket_base::max_listen_connections, ec);
  if (ec) {
    throw IoError("cannot listen on " + impl_->options.address + ":" +
                  std::to_string(impl_->options.port) + ": " + ec.message());
  }
}

std::uint16_t LiveServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void LiveServer::run() {
  impl_->accept();
  std::optional<net::signal_set> signals;
  if (impl_->options.stop_on_signal) {
    signals.emplace(impl_->ioc, SIGINT, SIGTERM);
    signals->async_wait([impl = impl_.get()](beast::error_code ec, int) {
      if (!ec) impl->shutdown();
    });
  }
  impl_->ioc.run();
}

void LiveServer::stop() {
  net::post(impl_->ioc, [impl = impl_.get()] { impl->shutdown(); });
}

}  // namespace hrigame
