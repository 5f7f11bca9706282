#pragma once

#include "oodagent/backends.hpp"
#include "oodagent/error.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <vector>

namespace oodagent::wire {

using nlohmann::json;

inline constexpr int kVersion = 1;

inline constexpr std::string_view kGenerate = "/v1/generate";
inline constexpr std::string_view kDetect = "/v1/detect";
inline constexpr std::string_view kSegment = "/v1/segment";
inline constexpr std::string_view kVosInit = "/v1/vos/init";
inline constexpr std::string_view kVosStep = "/v1/vos/step";
inline constexpr std::string_view kAct = "/v1/act";
inline constexpr std::string_view kVerify = "/v1/verify";
inline constexpr std::string_view kImageSearch = "/v1/imagesearch";
inline constexpr std::string_view kSnippets = "/v1/snippets";
inline constexpr std::string_view kHealth = "/v1/health";

bool known_endpoint(std::string_view endpoint);

struct Request {
  std::string endpoint;
  std::string id;
  json payload = json::object();
  friend bool operator==(const Request&, const Request&) = default;
};

struct WireError {
  std::string code;
  std::string message;
  bool retryable = false;
  friend bool operator==(const WireError&, const WireError&) = default;
};

struct Response {
  std::string id;
  std::optional<json> payload;
  std::optional<WireError> error;

  bool ok() const { return payload.has_value(); }
  friend bool operator==(const Response&, const Response&) = default;
};

json encode(const Request& r);
json encode(const Response& r);
// Both throw protocol_error on a malformed envelope.
Request decode_request(const json& j);
Response decode_response(const json& j);

// Payload building blocks. Decoders throw protocol_error.
json encode_image(const Image& img);
Image decode_image(const json& j);
json encode_mask(const Mask& m);
Mask decode_mask(const json& j);
json encode_box(const BBox& b);
BBox decode_box(const json& j);
json encode_frame(const Frame& f);
Frame decode_frame(const json& j);
json encode_messages(const Messages& m);
Messages decode_messages(const json& j);
json encode_action(const Action& a);
Action decode_action(const json& j);

// Per-endpoint payloads.
struct GenerateRequest {
  std::string role;
  Messages messages;
  friend bool operator==(const GenerateRequest&, const GenerateRequest&) = default;
};
struct GenerateResponse {
  std::string text;
  friend bool operator==(const GenerateResponse&, const GenerateResponse&) = default;
};
struct DetectRequest {
  std::string term;
  std::vector<std::string> keywords;
  Frame image;
  friend bool operator==(const DetectRequest&, const DetectRequest&) = default;
};
struct DetectResponse {
  std::vector<BBox> boxes;
  friend bool operator==(const DetectResponse&, const DetectResponse&) = default;
};
struct SegmentRequest {
  Frame image;
  BBox box;
  friend bool operator==(const SegmentRequest&, const SegmentRequest&) = default;
};
struct SegmentResponse {
  Mask mask;
  friend bool operator==(const SegmentResponse&, const SegmentResponse&) = default;
};
struct VosInitRequest {
  Frame image;
  std::vector<Mask> masks;
  friend bool operator==(const VosInitRequest&, const VosInitRequest&) = default;
};
struct VosInitResponse {
  std::string session;
  friend bool operator==(const VosInitResponse&, const VosInitResponse&) = default;
};
struct VosStepRequest {
  std::string session;
  Frame image;
  friend bool operator==(const VosStepRequest&, const VosStepRequest&) = default;
};
struct VosStepResponse {
  std::vector<Mask> masks;
  friend bool operator==(const VosStepResponse&, const VosStepResponse&) = default;
};
struct ActRequest {
  std::string prompt;
  Frame image;
  friend bool operator==(const ActRequest&, const ActRequest&) = default;
};
struct ActResponse {
  Action action{};
  friend bool operator==(const ActResponse&, const ActResponse&) = default;
};
struct VerifyRequest {
  std::string prompt;
  Frame first;
  Frame last;
  friend bool operator==(const VerifyRequest&, const VerifyRequest&) = default;
};
// answer is exactly "Yes" or "No".
struct VerifyResponse {
  std::string answer;
  friend bool operator==(const VerifyResponse&, const VerifyResponse&) = default;
};
struct ImageSearchRequest {
  std::string query;
  int limit = 6;
  friend bool operator==(const ImageSearchRequest&, const ImageSearchRequest&) = default;
};
struct ImageSearchResponse {
  std::vector<Image> images;
  friend bool operator==(const ImageSearchResponse&, const ImageSearchResponse&) = default;
};
struct SnippetsRequest {
  std::vector<std::string> queries;
  int limit = 4;
  friend bool operator==(const SnippetsRequest&, const SnippetsRequest&) = default;
};
struct SnippetsResponse {
  std::string text;
  friend bool operator==(const SnippetsResponse&, const SnippetsResponse&) = default;
};

json to_payload(const GenerateRequest& r);
json to_payload(const GenerateResponse& r);
json to_payload(const DetectRequest& r);
json to_payload(const DetectResponse& r);
json to_payload(const SegmentRequest& r);
json to_payload(const SegmentResponse& r);
json to_payload(const VosInitRequest& r);
json to_payload(const VosInitResponse& r);
json to_payload(const VosStepRequest& r);
json to_payload(const VosStepResponse& r);
json to_payload(const ActRequest& r);
json to_payload(const ActResponse& r);
json to_payload(const VerifyRequest& r);
json to_payload(const VerifyResponse& r);
json to_payload(const ImageSearchRequest& r);
json to_payload(const ImageSearchResponse& r);
json to_payload(const SnippetsRequest& r);
json to_payload(const SnippetsResponse& r);

template <class T>
T from_payload(const json& j);

// The GET endpoints carry their request in the query string.
std::string to_query(const ImageSearchRequest& r, const std::string& id);
std::string to_query(const SnippetsRequest& r, const std::string& id);

// Maps a library error onto the wire error object and back.
WireError to_wire_error(const Error& e);
Error from_wire_error(const WireError& e);

}  // namespace oodagent::wire
