#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>

#include "fovstream/demo.hpp"

namespace fovstream {

class PortUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ServeOptions {
  std::string bind = "127.0.0.1";
  // 0 picks a free port; see DemoServer::port().
  unsigned short port = 8765;
  // How often the live session is advanced.
  int tick_us = 2000;
};

using SessionFactory = std::function<std::unique_ptr<DemoSession>()>;

// WebSocket server for the demo viewer: one binary message per wire message,
// one viewer at a time. A session ends on disconnect or on a protocol
// violation, after which the next connection is accepted.
class DemoServer {
 public:
  // Binds immediately; throws PortUnavailable when the address is taken.
  DemoServer(const ServeOptions& opts, SessionFactory factory);
  ~DemoServer();
  DemoServer(const DemoServer&) = delete;
  DemoServer& operator=(const DemoServer&) = delete;

  unsigned short port() const;
  // Blocks until stop().
  void run();
  // Safe to call from any thread.
  void stop();
  int sessions_started() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace fovstream
