#pragma once

#include "oodagent/backends.hpp"
#include "oodagent/language.hpp"
#include "oodagent/simworld.hpp"
#include "oodagent/vision.hpp"

#include "json.hpp"

#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace oodagent::executor {

inline constexpr std::string_view kLiftPrompt = "lift the gripper";

struct ExecConfig {
  int verify_every = 20;
  int recovery_steps = 10;
  int window = 15;
  double k = 0.1;
  double epsilon_min = 0.05;
  int max_steps = 400;
  // false sends the rewritten goal instead of the per-subtask prompt.
  bool augment_prompt = true;
};

struct Pose {
  double x = 0, y = 0, z = 0;
};

struct Recovery {
  int steps_remaining = 0;
  std::size_t saved_index = 1;
  int saved_progress = 0;
};

struct EpisodeState {
  std::size_t subtask_index = 1;  // 1-based
  int step_count = 0;
  int progress = 0;  // counted steps on the current subtask
  int since_verify = 0;
  std::vector<Pose> history;
  std::vector<double> displacements;
  std::optional<Recovery> recovery;

  void push_pose(const Pose& p);
};

double median(std::vector<double> values);
// k times the median per-step displacement so far, floored at epsilon_min.
double dynamic_epsilon(const EpisodeState& state, const ExecConfig& cfg);
// Max pairwise distance among the last `window` poses below epsilon, with
// recovery inactive and a full window.
bool check_recovery(const EpisodeState& state, const ExecConfig& cfg);
void apply_recovery(EpisodeState& state, const ExecConfig& cfg);
// Counts one recovery step down; restores the saved subtask and progress
// and restarts the stall window when it runs out. Returns true on that final
// step.
bool tick_recovery(EpisodeState& state);

struct Event {
  int step = 0;
  std::string kind;
  std::size_t subtask = 0;
  std::string detail;
  friend bool operator==(const Event&, const Event&) = default;
};

struct EpisodeResult {
  bool success = false;
  bool goal_met = false;
  int steps = 0;
  std::vector<bool> verified;
  std::map<std::string, double> timings;
  std::vector<Event> events;

  int count(std::string_view kind) const;
};

// Per-step record for the line-delimited trace.
struct StepRecord {
  int step = 0;
  std::size_t subtask = 0;
  bool recovery = false;
  std::string prompt;
  Action action{};
  sim::Gripper gripper;
};

using StepSink = std::function<void(const StepRecord&)>;

// Runs one episode against `scene`. `flow` overlays masks when present.
// `task` is only used to record whether the goal predicate holds at the end.
EpisodeResult run_episode(sim::Scene& scene, const language::FinalTaskList& list, const BackendSuite& backends,
                          const ExecConfig& cfg, vision::MaskFlow* flow = nullptr,
                          const sim::TaskDef* task = nullptr, const StepSink& sink = {});

nlohmann::json to_json(const Event& e);
nlohmann::json to_json(const StepRecord& r);

// Writes one JSON object per line.
class TraceWriter {
 public:
  explicit TraceWriter(std::ostream& out) : out_(out) {}
  void step(const StepRecord& r);
  void events(const std::vector<Event>& events);
  StepSink sink() {
    return [this](const StepRecord& r) { step(r); };
  }

 private:
  std::ostream& out_;
};

}  // namespace oodagent::executor
