#include "oodagent/remote.hpp"

#include "oodagent/error.hpp"
#include "oodagent/stubs.hpp"

#include "httplib.h"

#include <fstream>
#include <random>

namespace oodagent {

using wire::json;

RemoteClient::RemoteClient(RemoteConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.base_url.empty()) throw Error(ErrorCode::config_error, "remote backend needs a base address");
  if (cfg_.retries < 0) throw Error(ErrorCode::config_error, "negative retry count");
  std::random_device rd;
  prefix_ = "c" + std::to_string(rd() % 100000);
}

std::string RemoteClient::next_id() { return prefix_ + "-" + std::to_string(counter_++); }

wire::Response RemoteClient::call(const wire::Request& req) {
  httplib::Client cli(cfg_.base_url);
  auto secs = static_cast<time_t>(cfg_.timeout_s);
  auto usecs = static_cast<time_t>((cfg_.timeout_s - static_cast<double>(secs)) * 1e6);
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);

  bool is_get = req.endpoint == wire::kImageSearch || req.endpoint == wire::kSnippets || req.endpoint == wire::kHealth;
  std::string last_failure;
  for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
    httplib::Result res = is_get ? cli.Get(req.endpoint + req.payload.value("query", std::string()))
                                 : cli.Post(req.endpoint, wire::encode(req).dump(), "application/json");
    if (!res) {
      last_failure = httplib::to_string(res.error());
      continue;
    }
    json body;
    try {
      body = json::parse(res->body);
    } catch (const json::exception&) {
      throw Error(ErrorCode::protocol_error, req.endpoint + " returned a body that is not JSON (HTTP " +
                                                 std::to_string(res->status) + ")");
    }
    auto resp = wire::decode_response(body);
    if (resp.id != req.id)
      throw Error(ErrorCode::protocol_error, req.endpoint + " answered id '" + resp.id + "' to request '" + req.id + "'");
    if (resp.error && resp.error->retryable && attempt < cfg_.retries) {
      last_failure = resp.error->code + ": " + resp.error->message;
      continue;
    }
    return resp;
  }
  throw Error(ErrorCode::backend_failure, req.endpoint + " at " + cfg_.base_url + " failed after " +
                                              std::to_string(cfg_.retries + 1) + " attempts: " + last_failure);
}

namespace {

json unwrap(const wire::Response& r) {
  if (r.payload) return *r.payload;
  throw wire::from_wire_error(r.error.value_or(wire::WireError{"protocol-error", "empty response", false}));
}

}  // namespace

json RemoteClient::post(std::string_view endpoint, json payload) {
  return unwrap(call({std::string(endpoint), next_id(), std::move(payload)}));
}

// GET requests have no body; the query string travels in the request
// payload only on the client side.
json RemoteClient::get(std::string_view endpoint, const std::string& query, const std::string& id) {
  return unwrap(call({std::string(endpoint), id, json{{"query", query}}}));
}

bool RemoteClient::health() {
  auto id = next_id();
  try {
    auto p = get(wire::kHealth, "?id=" + id, id);
    return p.value("status", std::string()) == "ok";
  } catch (const Error&) {
    return false;
  }
}

namespace {

class RemoteGenerator : public Generator {
 public:
  explicit RemoteGenerator(std::shared_ptr<RemoteClient> c) : c_(std::move(c)) {}
  std::string generate(std::string_view role, const Messages& messages) override {
    auto p = c_->post(wire::kGenerate, wire::to_payload(wire::GenerateRequest{std::string(role), messages}));
    return wire::from_payload<wire::GenerateResponse>(p).text;
  }
  bool health() override { return c_->health(); }

 private:
  std::shared_ptr<RemoteClient> c_;
};

class RemoteDetector : public Detector {
 public:
  explicit RemoteDetector(std::shared_ptr<RemoteClient> c) : c_(std::move(c)) {}
  std::vector<BBox> detect(const std::string& term, const std::vector<std::string>& keywords,
                           const Frame& image) override {
    auto p = c_->post(wire::kDetect, wire::to_payload(wire::DetectRequest{term, keywords, image}));
    return wire::from_payload<wire::DetectResponse>(p).boxes;
  }
  bool health() override { return c_->health(); }

 private:
  std::shared_ptr<RemoteClient> c_;
};

class RemoteSegmenter : public Segmenter {
 public:
  explicit RemoteSegmenter(std::shared_ptr<RemoteClient> c) : c_(std::move(c)) {}
  Mask segment(const Frame& image, const BBox& box) override {
    auto p = c_->post(wire::kSegment, wire::to_payload(wire::SegmentRequest{image, box}));
    return wire::from_payload<wire::SegmentResponse>(p).mask;
  }
  bool health() override { return c_->health(); }

 private:
  std::shared_ptr<RemoteClient> c_;
};

class RemoteVos : public Vos {
 public:
  explicit RemoteVos(std::shared_ptr<RemoteClient> c) : c_(std::move(c)) {}
  std::string init(const Frame& first, const std::vector<Mask>& masks) override {
    auto p = c_->post(wire::kVosInit, wire::to_payload(wire::VosInitRequest{first, masks}));
    return wire::from_payload<wire::VosInitResponse>(p).session;
  }
  std::vector<Mask> step(const std::string& session, const Frame& frame) override {
    auto p = c_->post(wire::kVosStep, wire::to_payload(wire::VosStepRequest{session, frame}));
    return wire::from_payload<wire::VosStepResponse>(p).masks;
  }
  bool health() override { return c_->health(); }

 private:
  std::shared_ptr<RemoteClient> c_;
};

class RemotePolicy : public Policy {
 public:
  explicit RemotePolicy(std::shared_ptr<RemoteClient> c) : c_(std::move(c)) {}
  Action act(const std::string& prompt, const Frame& frame) override {
    auto p = c_->post(wire::kAct, wire::to_payload(wire::ActRequest{prompt, frame}));
    return wire::from_payload<wire::ActResponse>(p).action;
  }
  bool health() override { return c_->health(); }

 private:
  std::shared_ptr<RemoteClient> c_;
};

class RemoteVerifier : public Verifier {
 public:
  explicit RemoteVerifier(std::shared_ptr<RemoteClient> c) : c_(std::move(c)) {}
  bool verify(const std::string& prompt, const Frame& first, const Frame& last) override {
    auto p = c_->post(wire::kVerify, wire::to_payload(wire::VerifyRequest{prompt, first, last}));
    return wire::from_payload<wire::VerifyResponse>(p).answer == "Yes";
  }
  bool health() override { return c_->health(); }

 private:
  std::shared_ptr<RemoteClient> c_;
};

class RemoteImageSearch : public ImageSearch {
 public:
  explicit RemoteImageSearch(std::shared_ptr<RemoteClient> c) : c_(std::move(c)) {}
  std::vector<Image> search(const std::string& query, int limit) override {
    auto id = c_->next_id();
    wire::ImageSearchRequest req{query, limit};
    auto p = c_->get(wire::kImageSearch, wire::to_query(req, id), id);
    return wire::from_payload<wire::ImageSearchResponse>(p).images;
  }
  bool health() override { return c_->health(); }

 private:
  std::shared_ptr<RemoteClient> c_;
};

class RemoteSnippets : public SnippetSearch {
 public:
  explicit RemoteSnippets(std::shared_ptr<RemoteClient> c) : c_(std::move(c)) {}
  std::string snippets(const std::vector<std::string>& queries, int limit) override {
    auto id = c_->next_id();
    wire::SnippetsRequest req{queries, limit};
    auto p = c_->get(wire::kSnippets, wire::to_query(req, id), id);
    return wire::from_payload<wire::SnippetsResponse>(p).text;
  }
  bool health() override { return c_->health(); }

 private:
  std::shared_ptr<RemoteClient> c_;
};

}  // namespace

BackendSuite remote_suite(std::shared_ptr<RemoteClient> c) {
  BackendSuite s;
  s.planner = std::make_shared<RemoteGenerator>(c);
  s.understanding_vision = std::make_shared<RemoteGenerator>(c);
  s.understanding_text = std::make_shared<RemoteGenerator>(c);
  s.detector = std::make_shared<RemoteDetector>(c);
  s.segmenter = std::make_shared<RemoteSegmenter>(c);
  s.vos = std::make_shared<RemoteVos>(c);
  s.vla = std::make_shared<RemotePolicy>(c);
  s.verifier = std::make_shared<RemoteVerifier>(c);
  s.image_search = std::make_shared<RemoteImageSearch>(c);
  s.snippets = std::make_shared<RemoteSnippets>(c);
  return s;
}

BackendSuite load_backends(const std::filesystem::path& config, const stubs::Fixtures& fx) {
  std::ifstream in(config);
  if (!in) throw Error(ErrorCode::config_error, "cannot read backend config " + config.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::config_error, config.string() + ": " + e.what());
  }
  if (!j.is_object() || j.value("version", 0) != 1)
    throw Error(ErrorCode::config_error, config.string() + ": expected a version 1 object");

  double timeout = 30.0;
  std::string fallback = "stub";
  std::map<std::string, std::string> per;
  try {
    timeout = j.value("timeout_s", 30.0);
    fallback = j.value("default", std::string("stub"));
    if (j.contains("capabilities")) per = j["capabilities"].get<std::map<std::string, std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::config_error, config.string() + ": " + e.what());
  }
  for (const auto& [name, _] : per) {
    bool known = false;
    for (std::size_t i = 0; i < kCapabilityCount; ++i)
      if (to_string(static_cast<Capability>(i)) == name) known = true;
    if (!known) throw Error(ErrorCode::config_error, "unknown capability '" + name + "' in " + config.string());
  }

  auto stub = stubs::make_stub_suite(fx);
  std::map<std::string, BackendSuite> remotes;
  auto pick = [&](Capability c) -> const BackendSuite& {
    auto name = std::string(to_string(c));
    auto it = per.find(name);
    const auto& target = it == per.end() ? fallback : it->second;
    if (target == "stub") return stub;
    if (target.rfind("http://", 0) != 0 && target.rfind("https://", 0) != 0)
      throw Error(ErrorCode::config_error, "backend '" + name + "' must be \"stub\" or an http(s) address");
    auto r = remotes.find(target);
    if (r == remotes.end())
      r = remotes.emplace(target, remote_suite(std::make_shared<RemoteClient>(RemoteConfig{target, timeout, 1}))).first;
    return r->second;
  };
  BackendSuite s;
  s.planner = pick(Capability::planner).planner;
  s.understanding_vision = pick(Capability::understanding_vision).understanding_vision;
  s.understanding_text = pick(Capability::understanding_text).understanding_text;
  s.detector = pick(Capability::detector).detector;
  s.segmenter = pick(Capability::segmenter).segmenter;
  s.vos = pick(Capability::vos).vos;
  s.vla = pick(Capability::vla).vla;
  s.verifier = pick(Capability::verifier).verifier;
  s.image_search = pick(Capability::image_search).image_search;
  s.snippets = pick(Capability::snippets).snippets;
  return s;
}

}  // namespace oodagent
