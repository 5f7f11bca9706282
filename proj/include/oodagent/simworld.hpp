#pragma once

#include "oodagent/backends.hpp"
#include "oodagent/frame.hpp"
#include "oodagent/memory.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace oodagent::sim {

inline constexpr int kGrid = 8;
inline constexpr int kCell = 8;
inline constexpr int kPixels = kGrid * kCell;
// Rows y < kNearRows are close to the camera; fine appearance tags are only
// visible there.
inline constexpr int kNearRows = 4;
inline constexpr int kMaxZ = 3;

struct Entity {
  int id = 0;
  std::string name;
  EntityKind kind = EntityKind::object;
  std::vector<std::string> tags;
  std::vector<std::string> fine_tags;
  std::string visual_class;
  EntityState state = EntityState::none;
  int x = 0, y = 0;
  std::optional<int> support;
  bool held = false;
  Rgb color;

  friend bool operator==(const Entity&, const Entity&) = default;
};

struct Gripper {
  int x = 4, y = 4, z = 1;
  std::optional<int> holding;
  friend bool operator==(const Gripper&, const Gripper&) = default;
};

struct Scene {
  std::vector<Entity> entities;
  Gripper gripper;

  const Entity* find(std::string_view name) const;
  const Entity* by_id(int id) const;
  Entity* by_id(int id);
  friend bool operator==(const Scene&, const Scene&) = default;
};

inline bool is_near(int y) { return y < kNearRows; }

// Pixel box of an entity: fixtures fill their cell, objects are a 4x4 inset.
BBox entity_box(const Entity& e);
// Cell of a render box, inverse of entity_box.
std::pair<int, int> cell_of(const BBox& box);

Frame render(const Scene& scene);

// Translation moves one cell per axis toward the sign of dx/dy/dz; gripper
// > 0.5 grasps the topmost object in the cell, < -0.5 releases onto the
// topmost entity below; roll > 0.5 opens / switches on the fixture in the
// cell, < -0.5 closes / switches off. Anything else is a no-op.
Scene step(const Scene& scene, const Action& action);

// Depth in the support stack (0 = resting on the table).
int stack_depth(const Scene& scene, const Entity& e);

enum class GoalKind { state, supported, front_of };

struct GoalAtom {
  GoalKind kind = GoalKind::state;
  std::string entity;
  std::string other;
  EntityState state = EntityState::none;
};

struct EntitySpec {
  Entity proto;
  std::vector<std::pair<int, int>> cells;
  std::string on;  // name of the entity it starts on, if any
};

struct TaskDef {
  std::string id;
  std::string instruction;
  int novel_terms = 0;
  std::vector<EntitySpec> entities;
  std::vector<GoalAtom> goal;
};

struct Suite {
  std::string name;
  std::vector<TaskDef> tasks;
  const TaskDef* find(std::string_view id) const;
};

std::filesystem::path data_dir();

// Loads suites/<name>.json under the data directory. Throws invalid_suite.
Suite load_suite(std::string_view name, const std::filesystem::path& root = data_dir());
Suite parse_suite(std::string_view name, const std::string& json_text);

bool goal_satisfied(const TaskDef& task, const Scene& scene);

// Per-episode placement: every entity picks one of its candidate cells with
// an RNG derived from (seed, task id, episode).
Scene sample_scene(const TaskDef& task, std::uint64_t seed, int episode);
// Every entity at its first candidate cell.
Scene initial_scene(const TaskDef& task);

std::uint64_t episode_seed(std::uint64_t seed, std::string_view task_id, int episode);

// Desk-scale stand-in for the action model. Reads the current-subtask clause
// (or a bare goal), resolves its target through a colour-mask layer or a
// vocabulary label matching a visual class, and takes one greedy step. An
// unresolved target yields the null action.
Action scripted_vla(const std::string& prompt, const Frame& overlay, const KnownList& vocab);

// Golden action sequences: fixtures/golden_actions.json.
std::vector<Action> golden_actions(std::string_view suite, std::string_view task_id,
                                   const std::filesystem::path& root = data_dir());

}  // namespace oodagent::sim
