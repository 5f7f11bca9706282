#pragma once

#include "oodagent/backends.hpp"
#include "oodagent/wire.hpp"

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <string>

namespace oodagent {

namespace stubs {
struct Fixtures;
}

struct RemoteConfig {
  std::string base_url;  // e.g. "http://127.0.0.1:8080"
  double timeout_s = 30.0;
  int retries = 1;
};

// Blocking request/response against one base address. A retry reuses the
// request id so the server can answer it idempotently.
class RemoteClient {
 public:
  explicit RemoteClient(RemoteConfig cfg);

  const RemoteConfig& config() const { return cfg_; }
  std::string next_id();

  // Transport failure and timeout: backend_failure once retries run out.
  // Unparseable body or an id that does not match: protocol_error.
  wire::Response call(const wire::Request& req);

  // Sends the payload and unwraps the response, raising error envelopes.
  wire::json post(std::string_view endpoint, wire::json payload);
  wire::json get(std::string_view endpoint, const std::string& query_without_id, const std::string& id);
  bool health();

 private:
  RemoteConfig cfg_;
  std::string prefix_;
  std::atomic<long> counter_{0};
};

// Every capability handle talks to `client`.
BackendSuite remote_suite(std::shared_ptr<RemoteClient> client);

// Backend configuration file:
//   {"version": 1, "default": "stub" | "http://host:port", "timeout_s": 30,
//    "capabilities": {"detector": "http://host:port", ...}}
// Capability names are those of to_string(Capability). Unmentioned
// capabilities use "default".
BackendSuite load_backends(const std::filesystem::path& config, const stubs::Fixtures& fx);

}  // namespace oodagent
