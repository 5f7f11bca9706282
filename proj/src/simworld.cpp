#include "oodagent/simworld.hpp"

#include "oodagent/error.hpp"
#include "oodagent/plan.hpp"
#include "oodagent/text.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <regex>
#include <set>
#include <sstream>

namespace oodagent::sim {

namespace fs = std::filesystem;
using nlohmann::json;

const Entity* Scene::find(std::string_view name) const {
  for (const auto& e : entities)
    if (e.name == name) return &e;
  return nullptr;
}

const Entity* Scene::by_id(int id) const {
  for (const auto& e : entities)
    if (e.id == id) return &e;
  return nullptr;
}

Entity* Scene::by_id(int id) {
  for (auto& e : entities)
    if (e.id == id) return &e;
  return nullptr;
}

BBox entity_box(const Entity& e) {
  int px = e.x * kCell, py = (kGrid - 1 - e.y) * kCell;
  if (e.kind == EntityKind::object) return {px + 2, py + 2, px + 6, py + 6, 1.0};
  return {px, py, px + kCell, py + kCell, 1.0};
}

std::pair<int, int> cell_of(const BBox& box) { return {box.x0 / kCell, kGrid - 1 - box.y0 / kCell}; }

int stack_depth(const Scene& scene, const Entity& e) {
  int depth = 0;
  const Entity* cur = &e;
  while (cur->support && depth <= static_cast<int>(scene.entities.size())) {
    cur = scene.by_id(*cur->support);
    if (!cur) break;
    ++depth;
  }
  return depth;
}

namespace {

Mask box_mask(const BBox& b) {
  auto m = Mask::from_box(b, kPixels, kPixels);
  for (auto [x, y] : {std::pair{b.x0, b.y0}, {b.x1 - 1, b.y0}, {b.x0, b.y1 - 1}, {b.x1 - 1, b.y1 - 1}})
    m.set(x, y, false);
  return m;
}

// Entities in draw order: fixtures, then objects bottom-up; id breaks ties.
std::vector<const Entity*> draw_order(const Scene& scene) {
  std::vector<const Entity*> out;
  for (const auto& e : scene.entities) out.push_back(&e);
  std::stable_sort(out.begin(), out.end(), [&](const Entity* a, const Entity* b) {
    auto key = [&](const Entity* e) {
      return std::tuple{e->kind == EntityKind::object ? 1 : 0, e->held ? 1 : 0, stack_depth(scene, *e), e->id};
    };
    return key(a) < key(b);
  });
  return out;
}

// Topmost entity in cell (x, y) other than `skip`, optionally objects only.
const Entity* topmost(const Scene& scene, int x, int y, std::optional<int> skip, bool objects_only) {
  const Entity* best = nullptr;
  for (const auto* e : draw_order(scene)) {
    if (e->held || e->x != x || e->y != y || (skip && e->id == *skip)) continue;
    if (objects_only && e->kind != EntityKind::object) continue;
    best = e;
  }
  return best;
}

int axis_step(double v) { return v >= 0.5 ? 1 : (v <= -0.5 ? -1 : 0); }

}  // namespace

Frame render(const Scene& scene) {
  Frame f;
  f.raster = Image(kPixels, kPixels, {214, 196, 164});
  for (const auto* e : draw_order(scene)) {
    auto b = entity_box(*e);
    f.raster.fill_rect(b.x0, b.y0, b.x1, b.y1, e->color);
    RenderRecord r;
    r.id = e->id;
    r.tags = e->tags;
    if (is_near(e->y)) r.tags.insert(r.tags.end(), e->fine_tags.begin(), e->fine_tags.end());
    r.box = b;
    r.mask = box_mask(b);
    r.visual_class = e->visual_class;
    r.kind = e->kind;
    r.state = e->state;
    r.held = e->held;
    r.support = e->support;
    f.records.push_back(std::move(r));
  }
  std::sort(f.records.begin(), f.records.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  const auto& g = scene.gripper;
  int gx = g.x * kCell, gy = (kGrid - 1 - g.y) * kCell;
  std::uint8_t shade = static_cast<std::uint8_t>(40 + 50 * g.z);
  f.raster.fill_rect(gx, gy, gx + 2, gy + 2, {shade, shade, shade});
  f.gripper = GripperPose{g.x, g.y, g.z, g.holding};
  return f;
}

Scene step(const Scene& scene, const Action& a) {
  for (double v : a)
    if (!std::isfinite(v)) return scene;
  Scene s = scene;
  auto& g = s.gripper;
  g.x = std::clamp(g.x + axis_step(a[0]), 0, kGrid - 1);
  g.y = std::clamp(g.y + axis_step(a[1]), 0, kGrid - 1);
  g.z = std::clamp(g.z + axis_step(a[2]), 0, kMaxZ);
  if (g.holding) {
    if (auto* held = s.by_id(*g.holding)) {
      held->x = g.x;
      held->y = g.y;
    }
  }
  int grip = axis_step(a[6]);
  if (grip > 0 && !g.holding) {
    if (const auto* top = topmost(s, g.x, g.y, std::nullopt, true)) {
      auto* e = s.by_id(top->id);
      e->held = true;
      e->support.reset();
      g.holding = e->id;
    }
  } else if (grip < 0 && g.holding) {
    auto* e = s.by_id(*g.holding);
    const auto* below = topmost(s, g.x, g.y, e->id, false);
    e->held = false;
    e->support = below ? std::optional<int>(below->id) : std::nullopt;
    g.holding.reset();
  }
  int roll = axis_step(a[3]);
  if (roll != 0) {
    for (auto& e : s.entities) {
      if (e.kind == EntityKind::object || e.x != g.x || e.y != g.y) continue;
      if (roll > 0 && e.state == EntityState::closed) e.state = EntityState::open;
      else if (roll > 0 && e.state == EntityState::off) e.state = EntityState::on;
      else if (roll < 0 && e.state == EntityState::open) e.state = EntityState::closed;
      else if (roll < 0 && e.state == EntityState::on) e.state = EntityState::off;
      else continue;
      break;
    }
  }
  return s;
}

const TaskDef* Suite::find(std::string_view id) const {
  for (const auto& t : tasks)
    if (t.id == id) return &t;
  return nullptr;
}

fs::path data_dir() {
  if (const char* env = std::getenv("OODAGENT_DATA")) return env;
#ifdef OODAGENT_DATA_DIR
  return OODAGENT_DATA_DIR;
#else
  return fs::current_path();
#endif
}

namespace {

Rgb rgb_from(const json& j) {
  auto v = j.get<std::vector<int>>();
  if (v.size() != 3) throw Error(ErrorCode::invalid_suite, "colour must have three components");
  return {static_cast<std::uint8_t>(v[0]), static_cast<std::uint8_t>(v[1]), static_cast<std::uint8_t>(v[2])};
}

GoalAtom goal_from(const json& j) {
  GoalAtom g;
  if (j.contains("state")) {
    g.kind = GoalKind::state;
    g.entity = j["state"].at(0).get<std::string>();
    g.state = entity_state_from(j["state"].at(1).get<std::string>());
  } else if (j.contains("supported")) {
    g.kind = GoalKind::supported;
    g.entity = j["supported"].at(0).get<std::string>();
    g.other = j["supported"].at(1).get<std::string>();
  } else if (j.contains("front_of")) {
    g.kind = GoalKind::front_of;
    g.entity = j["front_of"].at(0).get<std::string>();
    g.other = j["front_of"].at(1).get<std::string>();
  } else {
    throw Error(ErrorCode::invalid_suite, "unknown goal atom " + j.dump());
  }
  return g;
}

}  // namespace

Suite parse_suite(std::string_view name, const std::string& json_text) {
  Suite suite;
  suite.name = std::string(name);
  try {
    auto doc = json::parse(json_text);
    if (doc.at("version").get<int>() != 1) throw Error(ErrorCode::invalid_suite, "unsupported suite version");
    for (const auto& jt : doc.at("tasks")) {
      TaskDef t;
      t.id = jt.at("id").get<std::string>();
      t.instruction = jt.at("instruction").get<std::string>();
      t.novel_terms = jt.at("novel_terms").get<int>();
      int next_id = 1;
      std::set<std::pair<int, int>> claimed;
      for (const auto& je : jt.at("entities")) {
        EntitySpec spec;
        auto& e = spec.proto;
        e.id = next_id++;
        e.name = je.at("name").get<std::string>();
        e.kind = entity_kind_from(je.at("kind").get<std::string>());
        e.visual_class = je.at("visual_class").get<std::string>();
        e.tags = je.value("tags", std::vector<std::string>{});
        e.fine_tags = je.value("fine_tags", std::vector<std::string>{});
        e.state = entity_state_from(je.value("state", std::string("none")));
        e.color = rgb_from(je.at("color"));
        spec.on = je.value("on", std::string());
        for (const auto& c : je.value("cells", json::array())) {
          std::pair<int, int> cell{c.at(0).get<int>(), c.at(1).get<int>()};
          if (cell.first < 0 || cell.first >= kGrid || cell.second < 0 || cell.second >= kGrid)
            throw Error(ErrorCode::invalid_suite, t.id + "/" + e.name + ": cell outside the grid");
          if (!claimed.insert(cell).second)
            throw Error(ErrorCode::invalid_suite, t.id + "/" + e.name + ": candidate cell shared with another entity");
          spec.cells.push_back(cell);
        }
        if (spec.cells.empty() == spec.on.empty())
          throw Error(ErrorCode::invalid_suite, t.id + "/" + e.name + ": needs exactly one of cells or on");
        t.entities.push_back(std::move(spec));
      }
      for (const auto& jg : jt.at("goal")) t.goal.push_back(goal_from(jg));
      auto known = [&](const std::string& n) {
        return std::any_of(t.entities.begin(), t.entities.end(), [&](const auto& s) { return s.proto.name == n; });
      };
      for (const auto& g : t.goal)
        if (!known(g.entity) || (g.kind != GoalKind::state && !known(g.other)))
          throw Error(ErrorCode::invalid_suite, t.id + ": goal names an unknown entity");
      for (const auto& s : t.entities)
        if (!s.on.empty() && !known(s.on)) throw Error(ErrorCode::invalid_suite, t.id + ": unknown support " + s.on);
      suite.tasks.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::invalid_suite, std::string(name) + ": " + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::invalid_suite) throw;
    throw Error(ErrorCode::invalid_suite, std::string(name) + ": " + e.what());
  }
  std::sort(suite.tasks.begin(), suite.tasks.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return suite;
}

Suite load_suite(std::string_view name, const fs::path& root) {
  static const std::set<std::string, std::less<>> names{"easy", "medium", "hard", "original"};
  if (!names.count(name)) throw Error(ErrorCode::invalid_suite, "unknown suite '" + std::string(name) + "'");
  auto path = root / "suites" / (std::string(name) + ".json");
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::invalid_suite, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_suite(name, ss.str());
}

bool goal_satisfied(const TaskDef& task, const Scene& scene) {
  for (const auto& g : task.goal) {
    const auto* e = scene.find(g.entity);
    if (!e) return false;
    switch (g.kind) {
      case GoalKind::state:
        if (e->state != g.state) return false;
        break;
      case GoalKind::supported: {
        const auto* o = scene.find(g.other);
        if (!o || e->held || e->support != o->id) return false;
        break;
      }
      case GoalKind::front_of: {
        const auto* o = scene.find(g.other);
        if (!o || e->held || e->x != o->x || e->y != o->y - 1) return false;
        break;
      }
    }
  }
  return true;
}

std::uint64_t episode_seed(std::uint64_t seed, std::string_view task_id, int episode) {
  std::uint64_t h = 1469598103934665603ull;
  for (char c : task_id) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  };
  return mix(mix(seed) ^ h ^ mix(static_cast<std::uint64_t>(episode) + 0x51ed27ull));
}

namespace {

Scene place(const TaskDef& task, const std::vector<std::pair<int, int>>& cells) {
  Scene s;
  for (std::size_t i = 0; i < task.entities.size(); ++i) {
    Entity e = task.entities[i].proto;
    if (task.entities[i].on.empty()) {
      e.x = cells[i].first;
      e.y = cells[i].second;
    }
    s.entities.push_back(e);
  }
  for (std::size_t i = 0; i < task.entities.size(); ++i) {
    const auto& on = task.entities[i].on;
    if (on.empty()) continue;
    const auto* base = s.find(on);
    s.entities[i].x = base->x;
    s.entities[i].y = base->y;
    s.entities[i].support = base->id;
  }
  return s;
}

}  // namespace

Scene sample_scene(const TaskDef& task, std::uint64_t seed, int episode) {
  std::mt19937_64 rng(episode_seed(seed, task.id, episode));
  std::vector<std::pair<int, int>> cells;
  for (const auto& spec : task.entities) {
    if (spec.cells.empty()) {
      cells.emplace_back(0, 0);
      continue;
    }
    cells.push_back(spec.cells[rng() % spec.cells.size()]);
  }
  return place(task, cells);
}

Scene initial_scene(const TaskDef& task) {
  std::vector<std::pair<int, int>> cells;
  for (const auto& spec : task.entities) cells.push_back(spec.cells.empty() ? std::pair{0, 0} : spec.cells.front());
  return place(task, cells);
}

namespace {

struct Clause {
  plan::Verb verb = plan::Verb::pick_up;
  std::string object;
  std::string location;
  bool front = false;
};

std::string strip_article(std::string s) {
  s = text::trim(s);
  for (std::string_view a : {"the ", "a ", "an "})
    if (s.rfind(a, 0) == 0) return text::trim(s.substr(a.size()));
  return s;
}

std::optional<Clause> parse_clause(const std::string& raw) {
  auto s = text::normalize(raw);
  auto verb = plan::classify_command(s);
  if (!verb) return std::nullopt;
  Clause c;
  c.verb = *verb;
  auto word = plan::command_word(*verb);
  auto rest = text::trim(s.substr(word.size()));
  if (*verb == plan::Verb::place_on || *verb == plan::Verb::place_in) {
    std::optional<std::size_t> cut;
    std::size_t cut_len = 0;
    for (std::string_view prep : {"on", "in", "onto", "into", "inside", "on top of"}) {
      for (auto p = text::find_word(rest, prep); p; p = text::find_word(rest, prep, *p + 1)) {
        if (!cut || *p > *cut || (*p == *cut && prep.size() > cut_len)) {
          cut = p;
          cut_len = prep.size();
        }
      }
    }
    // "on top of" starts at the same position as "on"; prefer the longer form.
    if (cut && rest.compare(*cut, 9, "on top of") == 0) cut_len = 9;
    if (!cut) return std::nullopt;
    c.object = strip_article(rest.substr(0, *cut));
    auto loc = strip_article(rest.substr(*cut + cut_len));
    for (std::string_view f : {"front of ", "the front of "}) {
      if (loc.rfind(f, 0) == 0) {
        c.front = true;
        loc = strip_article(loc.substr(f.size()));
      }
    }
    c.location = loc;
  } else if (*verb == plan::Verb::pick_up) {
    c.object = strip_article(rest);
  } else {
    c.location = strip_article(rest);
  }
  return c;
}

std::optional<int> resolve(const std::string& phrase, const Frame& overlay, const KnownList& vocab) {
  static const std::regex qualifier(R"(([a-z]+)-mask )");
  std::smatch m;
  std::string bare = phrase;
  if (std::regex_search(phrase, m, qualifier)) {
    auto color = m[1].str();
    bare = m.prefix().str() + m.suffix().str();
    for (const auto& layer : overlay.layers) {
      if (layer.color != color) continue;
      std::optional<int> best;
      std::size_t best_n = 0;
      for (const auto& r : overlay.records) {
        auto n = layer.mask.intersection(r.mask);
        if (n > best_n) {
          best_n = n;
          best = r.id;
        }
      }
      if (best) return best;
    }
  }
  auto noun = plan::sanitize_slot(bare);
  if (!vocab.contains(noun)) return std::nullopt;
  for (const auto& r : overlay.records)
    if (r.visual_class == text::normalize(noun)) return r.id;
  return std::nullopt;
}

const RenderRecord* record_of(const Frame& f, int id) { return f.record(id); }

bool clause_done(const Clause& c, const Frame& f, const KnownList& vocab) {
  const auto& g = *f.gripper;
  switch (c.verb) {
    case plan::Verb::pick_up: {
      auto target = resolve(c.object, f, vocab);
      return g.holding && (!target || *g.holding == *target);
    }
    case plan::Verb::place_on:
    case plan::Verb::place_in: {
      auto obj = resolve(c.object, f, vocab);
      auto loc = resolve(c.location, f, vocab);
      if (!obj || !loc) return false;
      const auto* o = record_of(f, *obj);
      const auto* l = record_of(f, *loc);
      if (!o || !l || o->held) return false;
      if (c.front) {
        auto [ox, oy] = cell_of(o->box);
        auto [lx, ly] = cell_of(l->box);
        return ox == lx && oy == ly - 1;
      }
      return o->support == l->id;
    }
    default: {
      auto loc = resolve(c.location, f, vocab);
      const auto* l = loc ? record_of(f, *loc) : nullptr;
      if (!l) return false;
      auto want = c.verb == plan::Verb::open      ? EntityState::open
                  : c.verb == plan::Verb::close   ? EntityState::closed
                  : c.verb == plan::Verb::turn_on ? EntityState::on
                                                  : EntityState::off;
      return l->state == want;
    }
  }
}

Action hover(const GripperPose& g) {
  Action a{};
  a[2] = g.z >= 2 ? -1.0 : 1.0;
  return a;
}

Action toward(const GripperPose& g, int tx, int ty) {
  Action a{};
  if (tx != g.x) a[0] = tx > g.x ? 1.0 : -1.0;
  else if (ty != g.y) a[1] = ty > g.y ? 1.0 : -1.0;
  return a;
}

Action act_on(const Clause& c, const Frame& f, const KnownList& vocab) {
  const auto& g = *f.gripper;
  switch (c.verb) {
    case plan::Verb::pick_up: {
      if (g.holding) return hover(g);
      auto target = resolve(c.object, f, vocab);
      if (!target) return {};
      auto [tx, ty] = cell_of(record_of(f, *target)->box);
      if (tx != g.x || ty != g.y) return toward(g, tx, ty);
      Action a{};
      a[6] = 1.0;
      return a;
    }
    case plan::Verb::place_on:
    case plan::Verb::place_in: {
      if (!g.holding) return hover(g);
      auto target = resolve(c.location, f, vocab);
      if (!target) return {};
      auto [tx, ty] = cell_of(record_of(f, *target)->box);
      if (c.front) ty -= 1;
      if (tx != g.x || ty != g.y) return toward(g, tx, ty);
      Action a{};
      a[6] = -1.0;
      return a;
    }
    default: {
      if (clause_done(c, f, vocab)) return hover(g);
      auto target = resolve(c.location, f, vocab);
      if (!target) return {};
      auto [tx, ty] = cell_of(record_of(f, *target)->box);
      if (tx != g.x || ty != g.y) return toward(g, tx, ty);
      Action a{};
      a[3] = (c.verb == plan::Verb::open || c.verb == plan::Verb::turn_on) ? 1.0 : -1.0;
      return a;
    }
  }
}

}  // namespace

Action scripted_vla(const std::string& prompt, const Frame& overlay, const KnownList& vocab) {
  if (!overlay.gripper) return {};
  static const std::regex augmented(R"(^now do '(.*)', the whole task is '(.*)'$)");
  std::smatch m;
  std::string current;
  if (std::regex_match(prompt, m, augmented)) {
    current = m[1].str();
  } else {
    current = prompt;
  }
  if (text::normalize(current) == "lift the gripper") {
    Action a{};
    a[2] = 1.0;
    return a;
  }
  if (auto clause = parse_clause(current)) return act_on(*clause, overlay, vocab);

  // A bare goal: decompose it and work on the step after the last one done.
  if (text::trim(current).empty()) return {};
  auto steps = plan::fallback_parse(plan::Instruction(current)).subtasks;
  std::vector<Clause> clauses;
  for (const auto& st : steps)
    if (auto c = parse_clause(st.text)) clauses.push_back(*c);
  if (clauses.empty()) return {};
  std::size_t next = 0;
  for (std::size_t i = clauses.size(); i-- > 0;) {
    if (clause_done(clauses[i], overlay, vocab)) {
      next = i + 1;
      break;
    }
  }
  if (next >= clauses.size()) return hover(*overlay.gripper);
  return act_on(clauses[next], overlay, vocab);
}

std::vector<Action> golden_actions(std::string_view suite, std::string_view task_id, const fs::path& root) {
  auto path = root / "fixtures" / "golden_actions.json";
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::load_failure, "cannot read " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::load_failure, path.string() + ": " + e.what());
  }
  auto s = std::string(suite), t = std::string(task_id);
  if (!doc.contains(s) || !doc[s].contains(t))
    throw Error(ErrorCode::load_failure, "no golden actions for " + s + "/" + t);
  std::vector<Action> out;
  for (const auto& tok : text::split(doc[s][t].get<std::string>(), ' ')) {
    if (tok.empty()) continue;
    Action a{};
    if (tok == "E") a[0] = 1;
    else if (tok == "W") a[0] = -1;
    else if (tok == "N") a[1] = 1;
    else if (tok == "S") a[1] = -1;
    else if (tok == "U") a[2] = 1;
    else if (tok == "D") a[2] = -1;
    else if (tok == "G") a[6] = 1;
    else if (tok == "R") a[6] = -1;
    else if (tok == "T+") a[3] = 1;
    else if (tok == "T-") a[3] = -1;
    else if (tok == "-") {
    } else {
      throw Error(ErrorCode::load_failure, "bad golden action token '" + tok + "'");
    }
    out.push_back(a);
  }
  return out;
}

}  // namespace oodagent::sim
