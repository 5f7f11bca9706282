#include "oodagent/error.hpp"
#include "oodagent/language.hpp"
#include "oodagent/remote.hpp"
#include "oodagent/server.hpp"
#include "oodagent/stubs.hpp"
#include "oodagent/wire.hpp"

#include "support.hpp"

#include "httplib.h"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <limits>

using namespace oodagent;
using wire::json;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::config_error;
}

Image random_image(std::mt19937_64& rng, int max_side = 5) {
  Image img(1 + static_cast<int>(rng() % max_side), 1 + static_cast<int>(rng() % max_side));
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      img.set(x, y, {static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng())});
  return img;
}

Mask random_mask(std::mt19937_64& rng, int w, int h) {
  Mask m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m.set(x, y, rng() % 2);
  return m;
}

double random_real(std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(-10.0, 10.0)(rng);
}

BBox random_box(std::mt19937_64& rng) {
  return {static_cast<int>(rng() % 9), static_cast<int>(rng() % 9), static_cast<int>(rng() % 9),
          static_cast<int>(rng() % 9), std::uniform_real_distribution<double>(0.0, 1.0)(rng)};
}

Frame random_frame(std::mt19937_64& rng) {
  Frame f;
  f.raster = random_image(rng);
  int w = f.raster.width(), h = f.raster.height();
  for (int i = 0, n = static_cast<int>(rng() % 3); i < n; ++i) {
    RenderRecord r;
    r.id = static_cast<int>(rng() % 100);
    for (int k = 0, m = static_cast<int>(rng() % 3); k < m; ++k) r.tags.push_back(testsupport::random_word(rng));
    r.box = random_box(rng);
    r.mask = random_mask(rng, w, h);
    r.visual_class = testsupport::random_word(rng);
    r.kind = static_cast<EntityKind>(rng() % 4);
    r.state = static_cast<EntityState>(rng() % 5);
    r.held = rng() % 2;
    if (rng() % 2) r.support = static_cast<int>(rng() % 10);
    f.records.push_back(r);
  }
  if (rng() % 2) {
    GripperPose g{static_cast<int>(rng() % 8), static_cast<int>(rng() % 8), static_cast<int>(rng() % 4), std::nullopt};
    if (rng() % 2) g.holding = static_cast<int>(rng() % 10);
    f.gripper = g;
  }
  for (int i = 0, n = static_cast<int>(rng() % 3); i < n; ++i)
    f.layers.push_back({testsupport::random_word(rng),
                        {static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng())},
                        testsupport::random_word(rng) + " " + testsupport::random_word(rng),
                        random_mask(rng, w, h)});
  return f;
}

Messages random_messages(std::mt19937_64& rng) {
  Messages m;
  for (int i = 0, n = 1 + static_cast<int>(rng() % 3); i < n; ++i) {
    Message msg;
    msg.role = rng() % 2 ? "user" : "system";
    for (int k = 0, p = 1 + static_cast<int>(rng() % 3); k < p; ++k) {
      if (rng() % 3 == 0) msg.parts.push_back(MessagePart::of_image(random_frame(rng)));
      else msg.parts.push_back(MessagePart::of_text(testsupport::random_word(rng) + "\n\"quoted\" ünï"));
    }
    m.push_back(msg);
  }
  return m;
}

template <class T>
void check_round_trip(const T& value) {
  // Through text so number formatting is exercised too.
  auto text = wire::to_payload(value).dump();
  auto back = wire::from_payload<T>(json::parse(text));
  ASSERT_TRUE(back == value) << text.substr(0, 400);
}

Frame stove_frame() {
  Frame f;
  f.raster = Image::from_bytes(2, 1, {1, 2, 3, 4, 5, 6});
  RenderRecord r;
  r.id = 1;
  r.tags = {"burner"};
  r.box = {0, 0, 1, 1, 1.0};
  r.mask = Mask(2, 1);
  r.mask.set(0, 0, true);
  r.visual_class = "stove";
  r.kind = EntityKind::device;
  r.state = EntityState::off;
  f.records.push_back(r);
  f.gripper = GripperPose{0, 0, 1, std::nullopt};
  return f;
}

}  // namespace

TEST(WireProperty, PayloadRoundTrip) {
  std::mt19937_64 rng(1234);
  for (int i = 0; i < 1000; ++i) {
    switch (i % 9) {
      case 0: check_round_trip(wire::GenerateRequest{testsupport::random_word(rng), random_messages(rng)}); break;
      case 1: {
        wire::DetectRequest r{testsupport::random_word(rng), {}, random_frame(rng)};
        for (int k = 0, n = static_cast<int>(rng() % 4); k < n; ++k) r.keywords.push_back(testsupport::random_word(rng));
        check_round_trip(r);
        wire::DetectResponse d;
        for (int k = 0, n = static_cast<int>(rng() % 4); k < n; ++k) d.boxes.push_back(random_box(rng));
        check_round_trip(d);
        break;
      }
      case 2: {
        auto f = random_frame(rng);
        check_round_trip(wire::SegmentRequest{f, random_box(rng)});
        check_round_trip(wire::SegmentResponse{random_mask(rng, f.raster.width(), f.raster.height())});
        break;
      }
      case 3: {
        auto f = random_frame(rng);
        wire::VosInitRequest r{f, {}};
        for (int k = 0, n = static_cast<int>(rng() % 4); k < n; ++k)
          r.masks.push_back(random_mask(rng, f.raster.width(), f.raster.height()));
        check_round_trip(r);
        check_round_trip(wire::VosInitResponse{"vos-" + std::to_string(rng() % 100)});
        check_round_trip(wire::VosStepRequest{"vos-1", f});
        check_round_trip(wire::VosStepResponse{r.masks});
        break;
      }
      case 4: {
        Action a;
        for (auto& v : a) v = random_real(rng);
        check_round_trip(wire::ActRequest{testsupport::random_word(rng), random_frame(rng)});
        check_round_trip(wire::ActResponse{a});
        break;
      }
      case 5:
        check_round_trip(wire::VerifyRequest{testsupport::random_word(rng), random_frame(rng), random_frame(rng)});
        check_round_trip(wire::VerifyResponse{rng() % 2 ? "Yes" : "No"});
        break;
      case 6: {
        check_round_trip(wire::ImageSearchRequest{testsupport::random_word(rng) + " x", static_cast<int>(rng() % 10)});
        wire::ImageSearchResponse r;
        for (int k = 0, n = static_cast<int>(rng() % 4); k < n; ++k) r.images.push_back(random_image(rng));
        check_round_trip(r);
        break;
      }
      case 7: {
        wire::SnippetsRequest r{{}, static_cast<int>(rng() % 10)};
        for (int k = 0, n = 1 + static_cast<int>(rng() % 4); k < n; ++k) r.queries.push_back(testsupport::random_word(rng));
        check_round_trip(r);
        check_round_trip(wire::SnippetsResponse{testsupport::random_word(rng) + "\n" + testsupport::random_word(rng)});
        check_round_trip(wire::GenerateResponse{testsupport::random_word(rng)});
        break;
      }
      default: {
        wire::Request req{std::string(wire::kDetect), "id-" + std::to_string(i), json{{"k", i}}};
        ASSERT_EQ(wire::decode_request(json::parse(wire::encode(req).dump())), req);
        wire::Response ok{"id-" + std::to_string(i), json{{"v", random_real(rng)}}, std::nullopt};
        ASSERT_EQ(wire::decode_response(json::parse(wire::encode(ok).dump())), ok);
        wire::Response bad{"id", std::nullopt, wire::WireError{"backend-failure", testsupport::random_word(rng), true}};
        ASSERT_EQ(wire::decode_response(json::parse(wire::encode(bad).dump())), bad);
        break;
      }
    }
  }
}

TEST(Wire, MalformedInputs) {
  auto frame_json = wire::encode_frame(stove_frame());
  auto broken = frame_json;
  broken["rgb8"] = "AQID";
  EXPECT_EQ(code_of([&] { wire::decode_frame(broken); }), ErrorCode::protocol_error);
  broken = frame_json;
  broken["rgb8"] = "!!!!";
  EXPECT_EQ(code_of([&] { wire::decode_frame(broken); }), ErrorCode::protocol_error);
  broken = frame_json;
  broken.erase("records");
  EXPECT_EQ(code_of([&] { wire::decode_frame(broken); }), ErrorCode::protocol_error);
  broken = frame_json;
  broken["records"][0]["mask"]["bits"] = "AQID";
  EXPECT_EQ(code_of([&] { wire::decode_frame(broken); }), ErrorCode::protocol_error);

  EXPECT_EQ(code_of([] { wire::decode_request(json{{"version", 2}, {"endpoint", "/v1/act"}, {"id", "x"}, {"payload", json::object()}}); }),
            ErrorCode::protocol_error);
  EXPECT_EQ(code_of([] { wire::decode_response(json::array()); }), ErrorCode::protocol_error);
  EXPECT_EQ(code_of([] { wire::from_payload<wire::VerifyResponse>(json{{"answer", "Maybe"}}); }),
            ErrorCode::protocol_error);
  EXPECT_EQ(code_of([] { wire::decode_action(json::array({1, 2, 3})); }), ErrorCode::protocol_error);
  Action nan{};
  nan[2] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(code_of([&] { wire::encode_action(nan); }), ErrorCode::invalid_input);
}

TEST(Wire, ErrorMappingAndQueries) {
  auto w = wire::to_wire_error(Error(ErrorCode::backend_failure, "down"));
  EXPECT_EQ(w, (wire::WireError{"backend-failure", "down", true}));
  EXPECT_FALSE(wire::to_wire_error(Error(ErrorCode::invalid_input, "x")).retryable);
  auto e = wire::from_wire_error({"protocol-error", "bad", false});
  EXPECT_EQ(e.code(), ErrorCode::protocol_error);
  EXPECT_EQ(e.detail(), "bad");
  EXPECT_EQ(wire::from_wire_error({"mystery", "m", false}).code(), ErrorCode::backend_failure);

  EXPECT_EQ(wire::to_query(wire::ImageSearchRequest{"blue white/bowl", 6}, "c-1"),
            "?id=c-1&q=blue%20white%2Fbowl&limit=6");
  EXPECT_EQ(wire::to_query(wire::SnippetsRequest{{"moutai", "red label"}, 4}, "c-2"),
            "?id=c-2&q=moutai&q=red%20label&limit=4");
}

TEST(StubDetector, NameAndKeywordMatches) {
  auto suite = testsupport::stub_suite();
  auto stove = sim::render(sim::initial_scene(testsupport::task("hard", "stove")));
  auto boxes = suite.detector->detect("stove", {}, stove);
  ASSERT_EQ(boxes.size(), 1u);
  EXPECT_DOUBLE_EQ(boxes[0].score, 0.9);

  auto bowl_frame = sim::render(sim::initial_scene(testsupport::task("hard", "bowl-stove")));
  EXPECT_TRUE(suite.detector->detect("blue white porcelain bowl", {}, bowl_frame).empty());
  auto kw = suite.detector->detect("blue white porcelain bowl", {"porcelain", "round", "nonexistent"}, bowl_frame);
  ASSERT_EQ(kw.size(), 1u);
  EXPECT_DOUBLE_EQ(kw[0].score, 0.6);
  EXPECT_TRUE(suite.detector->detect("blue white porcelain bowl", {"porcelain"}, bowl_frame).empty());

  auto moutai = sim::render(sim::initial_scene(testsupport::task("hard", "moutai-rack")));
  EXPECT_TRUE(suite.detector->detect("moutai", {}, moutai).empty());
}

TEST(StubUnderstanding, VisionAndTextRoles) {
  auto suite = testsupport::stub_suite();
  auto kw = suite.understanding_vision->generate(
      kRoleVision, vision::build_vision_messages("moutai", Image(3, 2), stove_frame()));
  EXPECT_EQ(vision::parse_keywords(kw),
            (std::vector<std::string>{"white-glazed", "red-label", "bottle-shaped", "liquor", "ceramic"}));
  EXPECT_EQ(suite.understanding_vision->generate(
                kRoleVision, vision::build_vision_messages("flux capacitor", Image(3, 2), stove_frame())),
            "[]");

  const auto& known = testsupport::fixtures().known;
  auto bare = language::build_text_messages("blue white porcelain bowl", {}, known, true);
  EXPECT_EQ(suite.understanding_text->generate(kRoleText, bare), "<answer>black bowl</answer>");
  // Snippet evidence is required for moutai.
  auto no_brief = language::build_text_messages("moutai", {}, known, true);
  EXPECT_EQ(suite.understanding_text->generate(kRoleText, no_brief), "<answer>NONE</answer>");
  language::TextEvidence ev;
  ev.snippets = "Moutai is a Chinese baijiu liquor distilled from sorghum in Guizhou.";
  EXPECT_EQ(suite.understanding_text->generate(kRoleText, language::build_text_messages("moutai", ev, known, true)),
            "<answer>wine bottle</answer>");
  // A replacement outside the allowed vocabulary is never produced.
  auto small = language::build_text_messages("blue white porcelain bowl", {}, KnownList({"plate"}), true);
  EXPECT_EQ(suite.understanding_text->generate(kRoleText, small), "<answer>NONE</answer>");
}

TEST(StubPlanner, KnownTaskAndFallback) {
  auto suite = testsupport::stub_suite();
  auto prompt = [](const std::string& t) {
    return Messages{{"user", {MessagePart::of_text(plan::build_planner_prompt(plan::Instruction(t), plan::ParseStatus::success, {}))}}};
  };
  auto instr = testsupport::task("hard", "bowl-stove").instruction;
  auto out = suite.planner->generate(kRolePlanner, prompt(instr));
  auto parsed = plan::parse_plan(out);
  ASSERT_TRUE(std::holds_alternative<plan::TaskPlan>(parsed)) << out;
  EXPECT_EQ(std::get<plan::TaskPlan>(parsed).subtasks.size(), 2u);
  auto other = suite.planner->generate(kRolePlanner, prompt("pick up the spoon"));
  EXPECT_EQ(other.rfind("Plan for the robot arm:\n\n", 0), 0u);
}

TEST(CallMeter, ModeledTimingKeys) {
  auto meter = std::make_shared<CallMeter>();
  auto suite = instrument(testsupport::stub_suite(), meter);
  suite.detector->detect("stove", {}, stove_frame());
  suite.image_search->search("moutai", 6);
  suite.snippets->snippets({"moutai"}, 4);
  suite.vla->act("lift the gripper", stove_frame());
  EXPECT_EQ(meter->calls(Capability::detector), 1);
  EXPECT_EQ(meter->total_calls(), 4);
  auto t = meter->timings();
  std::vector<std::string> keys;
  for (const auto& [k, v] : t) keys.push_back(k);
  std::vector<std::string> want(kTimingKeys.begin(), kTimingKeys.end());
  std::sort(want.begin(), want.end());
  EXPECT_EQ(keys, want);
  EXPECT_DOUBLE_EQ(t["vision"], CallMeter::modeled_latency(Capability::detector) +
                                    CallMeter::modeled_latency(Capability::image_search));
  EXPECT_DOUBLE_EQ(t["language"], CallMeter::modeled_latency(Capability::snippets));
  double sum = 0;
  for (const auto& [k, v] : t)
    if (k != "total") sum += v;
  EXPECT_DOUBLE_EQ(t["total"], sum);
}

TEST(Health, MissingHandleIsConfigError) {
  auto suite = testsupport::stub_suite();
  EXPECT_NO_THROW(suite.check_health());
  suite.vos.reset();
  EXPECT_EQ(code_of([&] { suite.check_health(); }), ErrorCode::config_error);
}

TEST(Transcript, GoldenExchanges) {
  std::ifstream in(std::filesystem::path(OODAGENT_DATA_DIR) / "fixtures" / "wire" / "transcript.json");
  ASSERT_TRUE(in);
  auto doc = json::parse(in);
  WireServer server(testsupport::stub_suite());
  ASSERT_EQ(doc["exchanges"].size(), 5u);
  for (const auto& ex : doc["exchanges"]) {
    auto req = wire::decode_request(ex["request"]);
    ASSERT_EQ(wire::encode(req), ex["request"]);
    int status = 0;
    auto resp = server.handle(req, status);
    EXPECT_EQ(status, ex["status"].get<int>()) << req.endpoint;
    EXPECT_EQ(wire::encode(resp), ex["response"]) << wire::encode(resp).dump();
    EXPECT_EQ(wire::decode_response(ex["response"]), resp);
  }
}

TEST(Server, RetriedIdGetsCachedAnswer) {
  WireServer server(testsupport::stub_suite());
  auto payload = wire::to_payload(wire::VosInitRequest{stove_frame(), {}});
  int status = 0;
  auto a = server.handle({std::string(wire::kVosInit), "same", payload}, status);
  auto b = server.handle({std::string(wire::kVosInit), "same", payload}, status);
  auto c = server.handle({std::string(wire::kVosInit), "other", payload}, status);
  ASSERT_TRUE(a.ok());
  EXPECT_EQ(a.payload, b.payload);
  EXPECT_NE(a.payload, c.payload);
  auto empty = server.handle({std::string(wire::kVosInit), "", payload}, status);
  EXPECT_EQ(status, 400);
  EXPECT_EQ(empty.error->code, "protocol-error");
}

TEST(Remote, MatchesInProcessStubs) {
  WireServer server(testsupport::stub_suite());
  int port = server.bind("127.0.0.1", 0);
  server.start();
  auto client = std::make_shared<RemoteClient>(RemoteConfig{"http://127.0.0.1:" + std::to_string(port), 5.0, 1});
  EXPECT_TRUE(client->health());
  auto remote = remote_suite(client);
  auto local = testsupport::stub_suite();
  EXPECT_NO_THROW(remote.check_health());

  auto frame = sim::render(sim::initial_scene(testsupport::task("hard", "stove")));
  EXPECT_EQ(remote.detector->detect("stove", {}, frame), local.detector->detect("stove", {}, frame));
  EXPECT_EQ(remote.image_search->search("moutai", 6), local.image_search->search("moutai", 6));
  EXPECT_EQ(remote.snippets->snippets({"moutai", "white cabinet"}, 4),
            local.snippets->snippets({"moutai", "white cabinet"}, 4));
  EXPECT_EQ(remote.vla->act("lift the gripper", frame), local.vla->act("lift the gripper", frame));
  auto session = remote.vos->init(frame, {frame.records[0].mask});
  EXPECT_EQ(remote.vos->step(session, frame).size(), 1u);
  EXPECT_EQ(code_of([&] { remote.vos->step("vos-missing", frame); }), ErrorCode::backend_failure);
  server.stop();
}

TEST(Remote, UnreachableIsBackendFailure) {
  RemoteClient client({"http://127.0.0.1:1", 1.0, 1});
  EXPECT_FALSE(client.health());
  EXPECT_EQ(code_of([&] { client.post(wire::kAct, wire::to_payload(wire::ActRequest{"x", stove_frame()})); }),
            ErrorCode::backend_failure);
}

TEST(Remote, MismatchedIdAndGarbageAreProtocolErrors) {
  httplib::Server fake;
  fake.Post("/v1/act", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"version":1,"id":"someone-else","ok":true,"payload":{"action":[0,0,0,0,0,0,0]}})",
                    "application/json");
  });
  fake.Post("/v1/verify", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("<html>oops</html>", "text/html");
  });
  int port = fake.bind_to_any_port("127.0.0.1");
  std::thread t([&] { fake.listen_after_bind(); });
  fake.wait_until_ready();
  RemoteClient client({"http://127.0.0.1:" + std::to_string(port), 2.0, 0});
  EXPECT_EQ(code_of([&] { client.post(wire::kAct, wire::to_payload(wire::ActRequest{"x", stove_frame()})); }),
            ErrorCode::protocol_error);
  EXPECT_EQ(code_of([&] { client.post(wire::kVerify, json::object()); }), ErrorCode::protocol_error);
  fake.stop();
  t.join();
}

TEST(LoadBackends, ConfigFile) {
  testsupport::TempDir dir;
  auto write = [&](const std::string& body) {
    auto p = dir.path() / "backends.json";
    std::ofstream(p) << body;
    return p;
  };
  const auto& fx = testsupport::fixtures();
  auto stub = load_backends(write(R"({"version":1,"default":"stub"})"), fx);
  EXPECT_NO_THROW(stub.check_health());
  EXPECT_EQ(code_of([&] { load_backends(write(R"({"version":1,"default":"stub","capabilities":{"teleporter":"stub"}})"), fx); }),
            ErrorCode::config_error);
  EXPECT_EQ(code_of([&] { load_backends(write(R"({"version":9,"default":"stub"})"), fx); }), ErrorCode::config_error);
  EXPECT_EQ(code_of([&] { load_backends(write("{"), fx); }), ErrorCode::config_error);
  EXPECT_EQ(code_of([&] { load_backends(dir.path() / "missing.json", fx); }), ErrorCode::config_error);
  auto mixed = load_backends(
      write(R"({"version":1,"default":"stub","timeout_s":1,"capabilities":{"vla":"http://127.0.0.1:1"}})"), fx);
  EXPECT_EQ(code_of([&] { mixed.check_health(); }), ErrorCode::backend_failure);
}
