#include "fovstream/serve.hpp"

#include <atomic>
#include <chrono>
#include <deque>
#include <variant>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

namespace fovstream {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

// Frames beyond this many unsent messages are dropped rather than queued.
constexpr std::size_t kMaxQueued = 3;

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, std::unique_ptr<DemoSession> session, int tick_us,
             std::chrono::steady_clock::time_point origin, std::function<void()> on_close)
      : ws_(std::move(socket)),
        timer_(ws_.get_executor()),
        session_(std::move(session)),
        tick_(std::chrono::microseconds(tick_us)),
        origin_(origin),
        on_close_(std::move(on_close)) {}

  void start() {
    ws_.binary(true);
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) return self->close("handshake failed: " + ec.message());
      spdlog::info("viewer connected");
      self->read();
      self->tick();
    });
  }

  void shutdown() {
    if (closed_) return;
    beast::error_code ignored;
    ws_.next_layer().close(ignored);
    timer_.cancel();
  }

 private:
  std::int64_t now_us() const {
    return std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - origin_)
        .count();
  }

  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->close(ec == websocket::error::closed ? "viewer left" : ec.message());
      const auto data = self->buffer_.cdata();
      const std::span<const std::uint8_t> bytes(static_cast<const std::uint8_t*>(data.data()), data.size());
      try {
        self->session_->on_message(bytes, self->now_us());
      } catch (const ProtocolError& e) {
        self->buffer_.consume(self->buffer_.size());
        return self->reject(e.what());
      }
      self->buffer_.consume(self->buffer_.size());
      self->read();
    });
  }

  void tick() {
    if (closed_) return;
    for (WireMessage& m : session_->poll(now_us())) {
      const bool droppable = std::holds_alternative<FrameMsg>(m);
      if (droppable && queue_.size() >= kMaxQueued) continue;
      queue_.push_back(serialize_msg(m));
    }
    write();
    timer_.expires_after(tick_);
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (!ec) self->tick();
    });
  }

  void write() {
    if (writing_ || queue_.empty() || closed_) return;
    writing_ = true;
    ws_.async_write(asio::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->writing_ = false;
      if (ec) return self->close(ec.message());
      self->queue_.pop_front();
      self->write();
    });
  }

  void reject(const std::string& why) {
    spdlog::warn("closing session on protocol violation: {}", why);
    ws_.async_close(websocket::close_reason(websocket::close_code::policy_error, why.substr(0, 120)),
                    [self = shared_from_this(), why](beast::error_code) { self->close(why); });
  }

  void close(const std::string& why) {
    if (closed_) return;
    closed_ = true;
    spdlog::info("session ended: {}", why);
    timer_.cancel();
    beast::error_code ignored;
    ws_.next_layer().close(ignored);
    if (on_close_) on_close_();
  }

  websocket::stream<tcp::socket> ws_;
  asio::steady_timer timer_;
  beast::flat_buffer buffer_;
  std::unique_ptr<DemoSession> session_;
  std::chrono::microseconds tick_;
  std::chrono::steady_clock::time_point origin_;
  std::function<void()> on_close_;
  std::deque<std::vector<std::uint8_t>> queue_;
  bool writing_ = false;
  bool closed_ = false;
};

}  // namespace

struct DemoServer::Impl {
  asio::io_context io{1};
  tcp::acceptor acceptor{io};
  SessionFactory factory;
  ServeOptions opts;
  std::weak_ptr<Connection> live;
  std::atomic<int> started{0};
  std::chrono::steady_clock::time_point origin = std::chrono::steady_clock::now();

  void accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) {
        if (ec != asio::error::operation_aborted) spdlog::warn("accept failed: {}", ec.message());
        if (acceptor.is_open()) accept();
        return;
      }
      ++started;
      std::unique_ptr<DemoSession> session;
      try {
        session = factory();
      } catch (const std::exception& e) {
        spdlog::error("cannot start session: {}", e.what());
        accept();
        return;
      }
      auto conn = std::make_shared<Connection>(std::move(socket), std::move(session), opts.tick_us, origin,
                                               [this] { asio::post(io, [this] { accept(); }); });
      live = conn;
      conn->start();
    });
  }
};

DemoServer::DemoServer(const ServeOptions& opts, SessionFactory factory) : impl_(std::make_unique<Impl>()) {
  impl_->factory = std::move(factory);
  impl_->opts = opts;
  beast::error_code ec;
  const auto addr = asio::ip::make_address(opts.bind, ec);
  if (ec) throw std::invalid_argument("serve: bad bind address '" + opts.bind + "'");
  const tcp::endpoint ep(addr, opts.port);
  tcp::acceptor& a = impl_->acceptor;
  a.open(ep.protocol(), ec);
  if (!ec) a.set_option(asio::socket_base::reuse_address(true), ec);
  if (!ec) a.bind(ep, ec);
  if (!ec) a.listen(asio::socket_base::max_listen_connections, ec);
  if (ec) throw PortUnavailable("serve: cannot listen on " + opts.bind + ":" + std::to_string(opts.port) + ": " + ec.message());
}

DemoServer::~DemoServer() = default;

unsigned short DemoServer::port() const { return impl_->acceptor.local_endpoint().port(); }

int DemoServer::sessions_started() const { return impl_->started.load(); }

void DemoServer::run() {
  impl_->accept();
  impl_->io.run();
}

void DemoServer::stop() {
  asio::post(impl_->io, [impl = impl_.get()] {
    beast::error_code ignored;
    impl->acceptor.close(ignored);
    if (auto c = impl->live.lock()) c->shutdown();
    impl->io.stop();
  });
}

}  // namespace fovstream
