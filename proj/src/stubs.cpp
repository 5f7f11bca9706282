#include "oodagent/stubs.hpp"

#include "oodagent/error.hpp"
#include "oodagent/plan.hpp"
#include "oodagent/simworld.hpp"
#include "oodagent/text.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

namespace oodagent::stubs {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::load_failure, "cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::load_failure, path.string() + ": " + e.what());
  }
}

std::string all_text(const Messages& messages) {
  std::string out;
  for (const auto& m : messages)
    for (const auto& p : m.parts)
      if (!p.is_image()) out += p.text + "\n";
  return out;
}

std::optional<std::string> capture(const std::string& s, const std::regex& re) {
  std::smatch m;
  if (!std::regex_search(s, m, re)) return std::nullopt;
  return text::trim(m[1].str());
}

}  // namespace

Fixtures load_fixtures(const fs::path& root) {
  Fixtures fx;
  auto dir = root / "fixtures";
  try {
    const auto lexicon = read_json(dir / "detector_lexicon.json");
    const auto und = read_json(dir / "understanding.json");
    const auto web = read_json(dir / "web_corpus.json");
    const auto plans = read_json(dir / "planner_plans.json");
    const auto idm = read_json(dir / "id_memory.json");
    for (const auto& [k, v] : lexicon.items())
      fx.detector_lexicon[text::normalize(k)] = v.get<std::vector<std::string>>();
    for (const auto& [k, v] : und.items()) {
      UnderstandingEntry e;
      e.keywords = v.at("keywords").get<std::vector<std::string>>();
      if (v.contains("replacement") && !v["replacement"].is_null()) e.replacement = v["replacement"].get<std::string>();
      e.evidence = v.value("evidence", std::string("text"));
      fx.understanding[text::normalize(k)] = std::move(e);
    }
    for (const auto& [k, v] : web.items()) {
      WebEntry e;
      e.images = v.value("images", 0);
      e.snippets = v.value("snippets", std::vector<std::string>{});
      fx.web[text::normalize(k)] = std::move(e);
    }
    for (const auto& [k, v] : plans.items()) fx.plans[text::normalize(k)] = v.get<std::string>();
    for (const auto& [k, v] : idm.items())
      fx.id_memory[text::normalize(k)] = v.get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::load_failure, dir.string() + ": " + e.what());
  }
  std::ifstream corpus(dir / "training_corpus.txt");
  if (!corpus) throw Error(ErrorCode::load_failure, "cannot read " + (dir / "training_corpus.txt").string());
  for (std::string line; std::getline(corpus, line);)
    if (!text::trim(line).empty()) fx.training_corpus.push_back(text::trim(line));
  fx.known = build_known_list(fx.training_corpus);
  return fx;
}

Fixtures load_fixtures() { return load_fixtures(sim::data_dir()); }

MemoryStore seeded_memory(const Fixtures& fx) {
  MemoryStore store(fx.known);
  for (const auto& [term, kw] : fx.id_memory) store.put_vision({term, kw, std::nullopt, {}});
  return store;
}

Image web_image(const std::string& term, int index) {
  std::uint32_t h = 2166136261u;
  for (char c : term) h = (h ^ static_cast<unsigned char>(c)) * 16777619u;
  h = (h ^ static_cast<std::uint32_t>(index)) * 16777619u;
  Rgb bg{static_cast<std::uint8_t>(h), static_cast<std::uint8_t>(h >> 8), static_cast<std::uint8_t>(h >> 16)};
  Image img(16, 16, bg);
  Rgb fg{static_cast<std::uint8_t>(255 - bg.r), static_cast<std::uint8_t>(255 - bg.g),
         static_cast<std::uint8_t>(255 - bg.b)};
  int off = static_cast<int>((h >> 24) % 6);
  img.fill_rect(3 + off / 2, 4, 11 + off / 2, 12, fg);
  return img;
}

std::string StubPlanner::generate(std::string_view role, const Messages& messages) {
  if (role != kRolePlanner) throw Error(ErrorCode::invalid_input, "stub planner got role " + std::string(role));
  static const std::regex task_re(R"(Task: ([^\n]*)\nOutput:)");
  auto task = capture(all_text(messages), task_re);
  if (!task || task->empty()) return "I could not find a task.";
  if (auto it = plans_.find(text::normalize(*task)); it != plans_.end()) return it->second;
  return "Plan for the robot arm:\n\n" + plan::format_plan(plan::fallback_parse(plan::Instruction(*task)));
}

std::string StubUnderstanding::generate(std::string_view role, const Messages& messages) {
  auto body = all_text(messages);
  if (role == kRoleVision) {
    static const std::regex query_re(R"(input:([^\n]*)\n)");
    auto term = capture(body, query_re);
    if (!term) return "[]";
    auto it = entries_.find(text::normalize(*term));
    if (it == entries_.end()) return "[]";
    return json(it->second.keywords).dump();
  }
  if (role != kRoleText) throw Error(ErrorCode::invalid_input, "stub understanding got role " + std::string(role));
  static const std::regex term_re(R"(New object mention: ([^\n]*))");
  auto term = capture(body, term_re);
  if (!term) return "<answer>NONE</answer>";
  auto it = entries_.find(text::normalize(*term));
  if (it == entries_.end() || !it->second.replacement) return "<answer>NONE</answer>";
  const auto& e = it->second;

  bool listed = false;
  for (const auto& m : messages)
    for (const auto& p : m.parts)
      if (!p.is_image() && p.text.rfind("Allowed vocabulary:\n", 0) == 0)
        for (const auto& line : text::split_lines(p.text))
          if (line == "- " + *e.replacement) listed = true;
  if (!listed) return "<answer>NONE</answer>";

  auto has_turn = [&](std::string_view prefix) {
    for (const auto& m : messages)
      for (const auto& p : m.parts)
        if (!p.is_image() && p.text.rfind(prefix, 0) == 0) return true;
    return false;
  };
  bool ok = false;
  if (e.evidence == "text") {
    ok = true;
  } else if (e.evidence == "snippets") {
    ok = has_turn("External brief (web/Wikipedia):");
  } else if (e.evidence == "keywords") {
    ok = has_turn("Image/scene keywords:");
  } else if (e.evidence.rfind("visual:", 0) == 0) {
    auto tag = e.evidence.substr(7);
    for (const auto& m : messages)
      for (const auto& p : m.parts)
        if (p.is_image())
          for (const auto& r : p.image->records)
            if (std::find(r.tags.begin(), r.tags.end(), tag) != r.tags.end()) ok = true;
  }
  return ok ? "<answer>" + *e.replacement + "</answer>" : "<answer>NONE</answer>";
}

std::vector<BBox> StubDetector::detect(const std::string& term, const std::vector<std::string>& keywords,
                                       const Frame& image) {
  std::vector<BBox> out;
  auto lex = lexicon_.find(text::normalize(term));
  for (const auto& r : image.records) {
    auto visible = [&](const std::string& t) { return std::find(r.tags.begin(), r.tags.end(), t) != r.tags.end(); };
    double score = 0.0;
    if (lex != lexicon_.end() && !lex->second.empty() && std::all_of(lex->second.begin(), lex->second.end(), visible)) {
      score = 0.9;
    } else {
      std::set<std::string> uniq(keywords.begin(), keywords.end());
      int hits = static_cast<int>(std::count_if(uniq.begin(), uniq.end(), visible));
      if (hits >= 2) score = 0.6;
    }
    if (score > 0.0) {
      BBox b = r.box;
      b.score = score;
      out.push_back(b);
    }
  }
  return out;
}

Mask StubSegmenter::segment(const Frame& image, const BBox& box) {
  int w = image.raster.width(), h = image.raster.height();
  auto area = Mask::from_box(box, w, h);
  const RenderRecord* best = nullptr;
  std::size_t best_n = 0;
  for (const auto& r : image.records) {
    auto n = area.intersection(r.mask);
    if (n > best_n) {
      best_n = n;
      best = &r;
    }
  }
  return best ? best->mask : Mask(w, h);
}

std::string StubVos::init(const Frame& first, const std::vector<Mask>& masks) {
  std::vector<int> ids;
  for (const auto& m : masks) {
    int best = -1;
    std::size_t best_n = 0;
    for (const auto& r : first.records) {
      auto n = m.intersection(r.mask);
      if (n > best_n) {
        best_n = n;
        best = r.id;
      }
    }
    ids.push_back(best);
  }
  std::lock_guard lock(mu_);
  auto id = "vos-" + std::to_string(next_++);
  sessions_[id] = std::move(ids);
  return id;
}

std::vector<Mask> StubVos::step(const std::string& session, const Frame& frame) {
  std::vector<int> ids;
  {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(session);
    if (it == sessions_.end()) throw Error(ErrorCode::backend_failure, "unknown vos session " + session);
    ids = it->second;
  }
  std::vector<Mask> out;
  for (int id : ids) {
    const auto* r = frame.record(id);
    out.push_back(r ? r->mask : Mask(frame.raster.width(), frame.raster.height()));
  }
  return out;
}

Action StubPolicy::act(const std::string& prompt, const Frame& frame) { return sim::scripted_vla(prompt, frame, vocab_); }

bool StubVerifier::verify(const std::string& prompt, const Frame& first, const Frame& last) {
  if (!last.gripper) return false;
  if (prompt.find("grasped and lifted off any surface") != std::string::npos) return last.gripper->holding.has_value();
  if (prompt.find("been placed") != std::string::npos) {
    return first.gripper && first.gripper->holding &&
           (!last.gripper->holding || *last.gripper->holding != *first.gripper->holding);
  }
  auto any_state = [&](EntityState s) {
    return std::any_of(last.records.begin(), last.records.end(), [&](const auto& r) { return r.state == s; });
  };
  if (prompt.find("fully opened") != std::string::npos) return any_state(EntityState::open);
  if (prompt.find("fully closed") != std::string::npos) return any_state(EntityState::closed);
  if (prompt.find("turned on (powered up)") != std::string::npos) return any_state(EntityState::on);
  if (prompt.find("turned off (powered down)") != std::string::npos) return any_state(EntityState::off);
  return false;
}

std::vector<Image> StubImageSearch::search(const std::string& query, int limit) {
  std::vector<Image> out;
  auto it = web_.find(text::normalize(query));
  if (it == web_.end()) return out;
  for (int i = 0; i < std::min(limit, it->second.images); ++i) out.push_back(web_image(text::normalize(query), i));
  return out;
}

std::string StubSnippets::snippets(const std::vector<std::string>& queries, int limit) {
  std::vector<std::string> lines;
  for (const auto& q : queries) {
    auto it = web_.find(text::normalize(q));
    if (it == web_.end()) continue;
    for (const auto& s : it->second.snippets) {
      if (static_cast<int>(lines.size()) >= limit) break;
      if (std::find(lines.begin(), lines.end(), s) == lines.end()) lines.push_back(s);
    }
  }
  return text::join(lines, "\n");
}

BackendSuite make_stub_suite(const Fixtures& fx) {
  BackendSuite s;
  s.planner = std::make_shared<StubPlanner>(fx.plans);
  auto understanding = std::make_shared<StubUnderstanding>(fx.understanding);
  s.understanding_vision = understanding;
  s.understanding_text = understanding;
  s.detector = std::make_shared<StubDetector>(fx.detector_lexicon);
  s.segmenter = std::make_shared<StubSegmenter>();
  s.vos = std::make_shared<StubVos>();
  s.vla = std::make_shared<StubPolicy>(fx.known);
  s.verifier = std::make_shared<StubVerifier>();
  s.image_search = std::make_shared<StubImageSearch>(fx.web);
  s.snippets = std::make_shared<StubSnippets>(fx.web);
  return s;
}

}  // namespace oodagent::stubs
