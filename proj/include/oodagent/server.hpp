#pragma once

#include "oodagent/backends.hpp"
#include "oodagent/wire.hpp"

#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

namespace httplib {
class Server;
}

namespace oodagent {

// Hosts a BackendSuite behind the wire protocol. Responses are cached by
// request id, so a retried request gets the original answer.
class WireServer {
 public:
  explicit WireServer(BackendSuite suite);
  ~WireServer();
  WireServer(const WireServer&) = delete;
  WireServer& operator=(const WireServer&) = delete;

  // Binds to `port` (0 picks a free one) and returns the bound port.
  int bind(const std::string& host, int port);
  // Serves until stop(); blocking.
  void listen();
  // Serves on a background thread.
  void start();
  void stop();

  // Dispatch for one decoded request. `status` receives the HTTP code.
  wire::Response handle(const wire::Request& req, int& status);

 private:
  wire::Response dispatch(const wire::Request& req, int& status);

  BackendSuite suite_;
  std::unique_ptr<httplib::Server> http_;
  std::thread thread_;
  std::mutex cache_mu_;
  std::map<std::string, std::pair<int, wire::Response>> cache_;
  std::deque<std::string> order_;
};

}  // namespace oodagent
