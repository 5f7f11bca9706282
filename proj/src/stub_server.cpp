#include "oodagent/server.hpp"

#include "oodagent/error.hpp"

#include "httplib.h"

namespace oodagent {

using wire::json;

namespace {

constexpr std::size_t kCacheSize = 4096;

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::backend_failure: return 500;
    case ErrorCode::config_error: return 503;
    default: return 400;
  }
}

wire::Response failure(const std::string& id, const Error& e, int& status) {
  status = status_for(e.code());
  return {id, std::nullopt, wire::to_wire_error(e)};
}

}  // namespace

WireServer::WireServer(BackendSuite suite) : suite_(std::move(suite)), http_(std::make_unique<httplib::Server>()) {
  auto reply = [](httplib::Response& res, int status, const wire::Response& r) {
    res.status = status;
    res.set_content(wire::encode(r).dump(), "application/json");
  };

  auto post = [this, reply](const httplib::Request& req, httplib::Response& res) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::exception&) {
      reply(res, 400, {"", std::nullopt, wire::WireError{"protocol-error", "request body is not JSON", false}});
      return;
    }
    int status = 200;
    wire::Request r;
    try {
      r = wire::decode_request(body);
    } catch (const Error& e) {
      std::string id = body.is_object() && body.contains("id") && body["id"].is_string() ? body["id"].get<std::string>() : "";
      reply(res, 400, failure(id, e, status));
      return;
    }
    if (r.endpoint != req.path) {
      reply(res, 400,
            {r.id, std::nullopt, wire::WireError{"protocol-error", "envelope endpoint does not match path", false}});
      return;
    }
    auto out = handle(r, status);
    reply(res, status, out);
  };
  for (auto e : {wire::kGenerate, wire::kDetect, wire::kSegment, wire::kVosInit, wire::kVosStep, wire::kAct,
                 wire::kVerify})
    http_->Post(std::string(e), post);

  auto get = [this, reply](const httplib::Request& req, httplib::Response& res) {
    wire::Request r{req.path, req.get_param_value("id"), json::object()};
    if (req.path == wire::kImageSearch) {
      r.payload["q"] = req.get_param_value("q");
    } else if (req.path == wire::kSnippets) {
      json qs = json::array();
      for (std::size_t i = 0; i < req.get_param_value_count("q"); ++i) qs.push_back(req.get_param_value("q", i));
      r.payload["q"] = qs;
    }
    if (req.has_param("limit")) {
      try {
        r.payload["limit"] = std::stoi(req.get_param_value("limit"));
      } catch (const std::exception&) {
        reply(res, 400, {r.id, std::nullopt, wire::WireError{"protocol-error", "limit is not an integer", false}});
        return;
      }
    }
    int status = 200;
    auto out = handle(r, status);
    reply(res, status, out);
  };
  for (auto e : {wire::kImageSearch, wire::kSnippets, wire::kHealth}) http_->Get(std::string(e), get);

  http_->set_error_handler([reply](const httplib::Request& req, httplib::Response& res) {
    if (res.status != 404) return;
    reply(res, 404, {"", std::nullopt, wire::WireError{"protocol-error", "unknown endpoint " + req.path, false}});
  });
}

WireServer::~WireServer() { stop(); }

int WireServer::bind(const std::string& host, int port) {
  int bound = port == 0 ? http_->bind_to_any_port(host) : (http_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(ErrorCode::config_error, "cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void WireServer::listen() { http_->listen_after_bind(); }

void WireServer::start() {
  thread_ = std::thread([this] { http_->listen_after_bind(); });
  http_->wait_until_ready();
}

void WireServer::stop() {
  if (http_) http_->stop();
  if (thread_.joinable()) thread_.join();
}

wire::Response WireServer::handle(const wire::Request& req, int& status) {
  bool cacheable = !req.id.empty() && req.endpoint != wire::kHealth;
  if (cacheable) {
    std::lock_guard lock(cache_mu_);
    if (auto it = cache_.find(req.endpoint + "\n" + req.id); it != cache_.end()) {
      status = it->second.first;
      return it->second.second;
    }
  }
  auto out = dispatch(req, status);
  // Retryable failures are not cached so that a retry runs again.
  if (cacheable && !(out.error && out.error->retryable)) {
    std::lock_guard lock(cache_mu_);
    auto key = req.endpoint + "\n" + req.id;
    if (cache_.emplace(key, std::make_pair(status, out)).second) {
      order_.push_back(key);
      if (order_.size() > kCacheSize) {
        cache_.erase(order_.front());
        order_.pop_front();
      }
    }
  }
  return out;
}

wire::Response WireServer::dispatch(const wire::Request& req, int& status) {
  status = 200;
  const auto& p = req.payload;
  try {
    if (req.endpoint == wire::kHealth) {
      try {
        suite_.check_health();
        return {req.id, json{{"status", "ok"}}, std::nullopt};
      } catch (const Error&) {
        status = 503;
        return {req.id, json{{"status", "not-ready"}}, std::nullopt};
      }
    }
    if (req.id.empty()) throw Error(ErrorCode::protocol_error, "request id is empty");
    if (req.endpoint == wire::kGenerate) {
      auto r = wire::from_payload<wire::GenerateRequest>(p);
      std::shared_ptr<Generator> g;
      if (r.role == kRolePlanner) g = suite_.planner;
      else if (r.role == kRoleVision) g = suite_.understanding_vision;
      else if (r.role == kRoleText) g = suite_.understanding_text;
      else throw Error(ErrorCode::protocol_error, "unknown generate role '" + r.role + "'");
      return {req.id, wire::to_payload(wire::GenerateResponse{g->generate(r.role, r.messages)}), std::nullopt};
    }
    if (req.endpoint == wire::kDetect) {
      auto r = wire::from_payload<wire::DetectRequest>(p);
      return {req.id, wire::to_payload(wire::DetectResponse{suite_.detector->detect(r.term, r.keywords, r.image)}),
              std::nullopt};
    }
    if (req.endpoint == wire::kSegment) {
      auto r = wire::from_payload<wire::SegmentRequest>(p);
      return {req.id, wire::to_payload(wire::SegmentResponse{suite_.segmenter->segment(r.image, r.box)}), std::nullopt};
    }
    if (req.endpoint == wire::kVosInit) {
      auto r = wire::from_payload<wire::VosInitRequest>(p);
      return {req.id, wire::to_payload(wire::VosInitResponse{suite_.vos->init(r.image, r.masks)}), std::nullopt};
    }
    if (req.endpoint == wire::kVosStep) {
      auto r = wire::from_payload<wire::VosStepRequest>(p);
      return {req.id, wire::to_payload(wire::VosStepResponse{suite_.vos->step(r.session, r.image)}), std::nullopt};
    }
    if (req.endpoint == wire::kAct) {
      auto r = wire::from_payload<wire::ActRequest>(p);
      return {req.id, wire::to_payload(wire::ActResponse{suite_.vla->act(r.prompt, r.image)}), std::nullopt};
    }
    if (req.endpoint == wire::kVerify) {
      auto r = wire::from_payload<wire::VerifyRequest>(p);
      bool yes = suite_.verifier->verify(r.prompt, r.first, r.last);
      return {req.id, wire::to_payload(wire::VerifyResponse{yes ? "Yes" : "No"}), std::nullopt};
    }
    if (req.endpoint == wire::kImageSearch) {
      auto r = wire::from_payload<wire::ImageSearchRequest>(p);
      return {req.id, wire::to_payload(wire::ImageSearchResponse{suite_.image_search->search(r.query, r.limit)}),
              std::nullopt};
    }
    if (req.endpoint == wire::kSnippets) {
      auto r = wire::from_payload<wire::SnippetsRequest>(p);
      return {req.id, wire::to_payload(wire::SnippetsResponse{suite_.snippets->snippets(r.queries, r.limit)}),
              std::nullopt};
    }
    status = 404;
    return {req.id, std::nullopt, wire::WireError{"protocol-error", "unknown endpoint " + req.endpoint, false}};
  } catch (const Error& e) {
    return failure(req.id, e, status);
  } catch (const std::exception& e) {
    return failure(req.id, Error(ErrorCode::backend_failure, e.what()), status);
  }
}

}  // namespace oodagent
