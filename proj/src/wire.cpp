#include "oodagent/wire.hpp"

#include "oodagent/error.hpp"

#include <cctype>
#include <cmath>

namespace oodagent::wire {

namespace {

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorCode::protocol_error, what); }

const json& field(const json& j, const char* key) {
  if (!j.is_object()) malformed(std::string("expected an object holding '") + key + "'");
  auto it = j.find(key);
  if (it == j.end()) malformed(std::string("missing field '") + key + "'");
  return *it;
}

std::string str(const json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_string()) malformed(std::string("field '") + key + "' is not a string");
  return v.get<std::string>();
}

int integer(const json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_number_integer()) malformed(std::string("field '") + key + "' is not an integer");
  return v.get<int>();
}

double number(const json& v, const char* what) {
  if (!v.is_number()) malformed(std::string(what) + " is not a number");
  return v.get<double>();
}

bool boolean(const json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_boolean()) malformed(std::string("field '") + key + "' is not a boolean");
  return v.get<bool>();
}

std::vector<std::string> strings(const json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_array()) malformed(std::string("field '") + key + "' is not an array");
  std::vector<std::string> out;
  for (const auto& s : v) {
    if (!s.is_string()) malformed(std::string("field '") + key + "' holds a non-string");
    out.push_back(s.get<std::string>());
  }
  return out;
}

const json& array(const json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_array()) malformed(std::string("field '") + key + "' is not an array");
  return v;
}

void check_geometry(int w, int h) {
  if (w < 0 || h < 0 || w > 16384 || h > 16384) malformed("bad raster geometry");
}

std::vector<std::uint8_t> b64(const json& j, const char* key) {
  try {
    return base64_decode(str(j, key));
  } catch (const Error& e) {
    malformed(std::string("field '") + key + "': " + e.detail());
  }
}

json encode_record(const RenderRecord& r) {
  return {{"id", r.id},
          {"tags", r.tags},
          {"box", encode_box(r.box)},
          {"mask", encode_mask(r.mask)},
          {"visual_class", r.visual_class},
          {"kind", to_string(r.kind)},
          {"state", to_string(r.state)},
          {"held", r.held},
          {"support", r.support ? json(*r.support) : json(nullptr)}};
}

RenderRecord decode_record(const json& j) {
  RenderRecord r;
  r.id = integer(j, "id");
  r.tags = strings(j, "tags");
  r.box = decode_box(field(j, "box"));
  r.mask = decode_mask(field(j, "mask"));
  r.visual_class = str(j, "visual_class");
  try {
    r.kind = entity_kind_from(str(j, "kind"));
    r.state = entity_state_from(str(j, "state"));
  } catch (const Error& e) {
    malformed(e.detail());
  }
  r.held = boolean(j, "held");
  const auto& s = field(j, "support");
  if (!s.is_null()) {
    if (!s.is_number_integer()) malformed("field 'support' is not an integer");
    r.support = s.get<int>();
  }
  return r;
}

json rgb_json(Rgb c) { return json::array({c.r, c.g, c.b}); }

Rgb rgb_from(const json& j) {
  if (!j.is_array() || j.size() != 3) malformed("colour must be [r, g, b]");
  Rgb c;
  std::uint8_t* out[3] = {&c.r, &c.g, &c.b};
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number_integer() || j[i].get<int>() < 0 || j[i].get<int>() > 255) malformed("colour channel out of range");
    *out[i] = static_cast<std::uint8_t>(j[i].get<int>());
  }
  return c;
}

std::vector<Mask> masks_from(const json& j, const char* key) {
  std::vector<Mask> out;
  for (const auto& m : array(j, key)) out.push_back(decode_mask(m));
  return out;
}

json masks_json(const std::vector<Mask>& masks) {
  json out = json::array();
  for (const auto& m : masks) out.push_back(encode_mask(m));
  return out;
}

int limit_from(const json& j) {
  int n = integer(j, "limit");
  if (n < 0) malformed("negative limit");
  return n;
}

std::string percent_encode(std::string_view s) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += hex[c >> 4];
      out += hex[c & 15];
    }
  }
  return out;
}

}  // namespace

bool known_endpoint(std::string_view e) {
  for (auto k : {kGenerate, kDetect, kSegment, kVosInit, kVosStep, kAct, kVerify, kImageSearch, kSnippets, kHealth})
    if (e == k) return true;
  return false;
}

json encode(const Request& r) {
  return {{"version", kVersion}, {"endpoint", r.endpoint}, {"id", r.id}, {"payload", r.payload}};
}

json encode(const Response& r) {
  json j = {{"version", kVersion}, {"id", r.id}, {"ok", r.ok()}};
  if (r.payload) {
    j["payload"] = *r.payload;
  } else {
    WireError e = r.error.value_or(WireError{"protocol-error", "empty response", false});
    j["error"] = {{"code", e.code}, {"message", e.message}, {"retryable", e.retryable}};
  }
  return j;
}

Request decode_request(const json& j) {
  if (integer(j, "version") != kVersion) malformed("unsupported protocol version");
  Request r;
  r.endpoint = str(j, "endpoint");
  r.id = str(j, "id");
  r.payload = field(j, "payload");
  if (!r.payload.is_object()) malformed("payload is not an object");
  return r;
}

Response decode_response(const json& j) {
  if (integer(j, "version") != kVersion) malformed("unsupported protocol version");
  Response r;
  r.id = str(j, "id");
  if (boolean(j, "ok")) {
    r.payload = field(j, "payload");
    if (!r.payload->is_object()) malformed("payload is not an object");
  } else {
    const auto& e = field(j, "error");
    r.error = WireError{str(e, "code"), str(e, "message"), boolean(e, "retryable")};
  }
  return r;
}

json encode_image(const Image& img) {
  return {{"width", img.width()}, {"height", img.height()}, {"rgb8", base64_encode(img.bytes())}};
}

Image decode_image(const json& j) {
  int w = integer(j, "width"), h = integer(j, "height");
  check_geometry(w, h);
  auto bytes = b64(j, "rgb8");
  if (bytes.size() != static_cast<std::size_t>(w) * h * 3) malformed("raster byte count does not match geometry");
  return Image::from_bytes(w, h, std::move(bytes));
}

json encode_mask(const Mask& m) {
  return {{"width", m.width()}, {"height", m.height()}, {"bits", base64_encode(m.pack())}};
}

Mask decode_mask(const json& j) {
  int w = integer(j, "width"), h = integer(j, "height");
  check_geometry(w, h);
  auto bytes = b64(j, "bits");
  if (bytes.size() != (static_cast<std::size_t>(w) * h + 7) / 8) malformed("packed mask size does not match geometry");
  return Mask::unpack(w, h, bytes);
}

json encode_box(const BBox& b) {
  return {{"x0", b.x0}, {"y0", b.y0}, {"x1", b.x1}, {"y1", b.y1}, {"score", b.score}};
}

BBox decode_box(const json& j) {
  return {integer(j, "x0"), integer(j, "y0"), integer(j, "x1"), integer(j, "y1"), number(field(j, "score"), "score")};
}

json encode_frame(const Frame& f) {
  json j = encode_image(f.raster);
  json records = json::array();
  for (const auto& r : f.records) records.push_back(encode_record(r));
  j["records"] = std::move(records);
  if (f.gripper) {
    j["gripper"] = {{"x", f.gripper->x},
                    {"y", f.gripper->y},
                    {"z", f.gripper->z},
                    {"holding", f.gripper->holding ? json(*f.gripper->holding) : json(nullptr)}};
  } else {
    j["gripper"] = nullptr;
  }
  json layers = json::array();
  for (const auto& l : f.layers)
    layers.push_back({{"color", l.color}, {"rgb", rgb_json(l.rgb)}, {"term", l.term}, {"mask", encode_mask(l.mask)}});
  j["layers"] = std::move(layers);
  return j;
}

Frame decode_frame(const json& j) {
  Frame f;
  f.raster = decode_image(j);
  for (const auto& r : array(j, "records")) f.records.push_back(decode_record(r));
  const auto& g = field(j, "gripper");
  if (!g.is_null()) {
    GripperPose p{integer(g, "x"), integer(g, "y"), integer(g, "z"), std::nullopt};
    const auto& h = field(g, "holding");
    if (!h.is_null()) {
      if (!h.is_number_integer()) malformed("field 'holding' is not an integer");
      p.holding = h.get<int>();
    }
    f.gripper = p;
  }
  for (const auto& l : array(j, "layers"))
    f.layers.push_back({str(l, "color"), rgb_from(field(l, "rgb")), str(l, "term"), decode_mask(field(l, "mask"))});
  return f;
}

json encode_messages(const Messages& messages) {
  json out = json::array();
  for (const auto& m : messages) {
    json parts = json::array();
    for (const auto& p : m.parts) {
      if (p.is_image())
        parts.push_back({{"type", "image"}, {"image", encode_frame(*p.image)}});
      else
        parts.push_back({{"type", "text"}, {"text", p.text}});
    }
    out.push_back({{"role", m.role}, {"parts", std::move(parts)}});
  }
  return out;
}

Messages decode_messages(const json& j) {
  if (!j.is_array()) malformed("messages is not an array");
  Messages out;
  for (const auto& m : j) {
    Message msg{str(m, "role"), {}};
    for (const auto& p : array(m, "parts")) {
      auto type = str(p, "type");
      if (type == "text")
        msg.parts.push_back(MessagePart::of_text(str(p, "text")));
      else if (type == "image")
        msg.parts.push_back(MessagePart::of_image(decode_frame(field(p, "image"))));
      else
        malformed("unknown message part type '" + type + "'");
    }
    out.push_back(std::move(msg));
  }
  return out;
}

json encode_action(const Action& a) {
  json out = json::array();
  for (double v : a) {
    if (!std::isfinite(v)) throw Error(ErrorCode::invalid_input, "action component is not finite");
    out.push_back(v);
  }
  return out;
}

Action decode_action(const json& j) {
  if (!j.is_array() || j.size() != 7) malformed("action must have 7 components");
  Action a{};
  for (std::size_t i = 0; i < 7; ++i) a[i] = number(j[i], "action component");
  return a;
}

json to_payload(const GenerateRequest& r) { return {{"role", r.role}, {"messages", encode_messages(r.messages)}}; }
json to_payload(const GenerateResponse& r) { return {{"text", r.text}}; }
json to_payload(const DetectRequest& r) {
  return {{"term", r.term}, {"keywords", r.keywords}, {"image", encode_frame(r.image)}};
}
json to_payload(const DetectResponse& r) {
  json boxes = json::array();
  for (const auto& b : r.boxes) boxes.push_back(encode_box(b));
  return {{"boxes", std::move(boxes)}};
}
json to_payload(const SegmentRequest& r) { return {{"image", encode_frame(r.image)}, {"box", encode_box(r.box)}}; }
json to_payload(const SegmentResponse& r) { return {{"mask", encode_mask(r.mask)}}; }
json to_payload(const VosInitRequest& r) { return {{"image", encode_frame(r.image)}, {"masks", masks_json(r.masks)}}; }
json to_payload(const VosInitResponse& r) { return {{"session", r.session}}; }
json to_payload(const VosStepRequest& r) { return {{"session", r.session}, {"image", encode_frame(r.image)}}; }
json to_payload(const VosStepResponse& r) { return {{"masks", masks_json(r.masks)}}; }
json to_payload(const ActRequest& r) { return {{"prompt", r.prompt}, {"image", encode_frame(r.image)}}; }
json to_payload(const ActResponse& r) { return {{"action", encode_action(r.action)}}; }
json to_payload(const VerifyRequest& r) {
  return {{"prompt", r.prompt}, {"first", encode_frame(r.first)}, {"last", encode_frame(r.last)}};
}
json to_payload(const VerifyResponse& r) { return {{"answer", r.answer}}; }
json to_payload(const ImageSearchRequest& r) { return {{"q", r.query}, {"limit", r.limit}}; }
json to_payload(const ImageSearchResponse& r) {
  json images = json::array();
  for (const auto& i : r.images) images.push_back(encode_image(i));
  return {{"images", std::move(images)}};
}
json to_payload(const SnippetsRequest& r) { return {{"q", r.queries}, {"limit", r.limit}}; }
json to_payload(const SnippetsResponse& r) { return {{"text", r.text}}; }

template <>
GenerateRequest from_payload(const json& j) {
  return {str(j, "role"), decode_messages(field(j, "messages"))};
}
template <>
GenerateResponse from_payload(const json& j) {
  return {str(j, "text")};
}
template <>
DetectRequest from_payload(const json& j) {
  return {str(j, "term"), strings(j, "keywords"), decode_frame(field(j, "image"))};
}
template <>
DetectResponse from_payload(const json& j) {
  DetectResponse r;
  for (const auto& b : array(j, "boxes")) r.boxes.push_back(decode_box(b));
  return r;
}
template <>
SegmentRequest from_payload(const json& j) {
  return {decode_frame(field(j, "image")), decode_box(field(j, "box"))};
}
template <>
SegmentResponse from_payload(const json& j) {
  return {decode_mask(field(j, "mask"))};
}
template <>
VosInitRequest from_payload(const json& j) {
  return {decode_frame(field(j, "image")), masks_from(j, "masks")};
}
template <>
VosInitResponse from_payload(const json& j) {
  return {str(j, "session")};
}
template <>
VosStepRequest from_payload(const json& j) {
  return {str(j, "session"), decode_frame(field(j, "image"))};
}
template <>
VosStepResponse from_payload(const json& j) {
  return {masks_from(j, "masks")};
}
template <>
ActRequest from_payload(const json& j) {
  return {str(j, "prompt"), decode_frame(field(j, "image"))};
}
template <>
ActResponse from_payload(const json& j) {
  return {decode_action(field(j, "action"))};
}
template <>
VerifyRequest from_payload(const json& j) {
  return {str(j, "prompt"), decode_frame(field(j, "first")), decode_frame(field(j, "last"))};
}
template <>
VerifyResponse from_payload(const json& j) {
  auto a = str(j, "answer");
  if (a != "Yes" && a != "No") malformed("verify answer must be Yes or No, got '" + a + "'");
  return {a};
}
template <>
ImageSearchRequest from_payload(const json& j) {
  return {str(j, "q"), limit_from(j)};
}
template <>
ImageSearchResponse from_payload(const json& j) {
  ImageSearchResponse r;
  for (const auto& i : array(j, "images")) r.images.push_back(decode_image(i));
  return r;
}
template <>
SnippetsRequest from_payload(const json& j) {
  return {strings(j, "q"), limit_from(j)};
}
template <>
SnippetsResponse from_payload(const json& j) {
  return {str(j, "text")};
}

std::string to_query(const ImageSearchRequest& r, const std::string& id) {
  return "?id=" + percent_encode(id) + "&q=" + percent_encode(r.query) + "&limit=" + std::to_string(r.limit);
}

std::string to_query(const SnippetsRequest& r, const std::string& id) {
  std::string out = "?id=" + percent_encode(id);
  for (const auto& q : r.queries) out += "&q=" + percent_encode(q);
  return out + "&limit=" + std::to_string(r.limit);
}

WireError to_wire_error(const Error& e) {
  bool retryable = e.code() == ErrorCode::backend_failure;
  return {std::string(to_string(e.code())), e.detail(), retryable};
}

Error from_wire_error(const WireError& e) {
  auto code = error_code_from(e.code).value_or(ErrorCode::backend_failure);
  return Error(code, e.message);
}

}  // namespace oodagent::wire
