#include "oodagent/executor.hpp"

#include "oodagent/error.hpp"

#include <algorithm>
#include <cmath>

namespace oodagent::executor {

namespace {

double distance(const Pose& a, const Pose& b) {
  return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) + (a.z - b.z) * (a.z - b.z));
}

Pose pose_of(const sim::Scene& s) {
  return {static_cast<double>(s.gripper.x), static_cast<double>(s.gripper.y), static_cast<double>(s.gripper.z)};
}

}  // namespace

void EpisodeState::push_pose(const Pose& p) {
  if (!history.empty()) displacements.push_back(distance(history.back(), p));
  history.push_back(p);
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  double hi = *mid;
  double lo = *std::max_element(v.begin(), mid);
  return (lo + hi) / 2.0;
}

double dynamic_epsilon(const EpisodeState& state, const ExecConfig& cfg) {
  return std::max(cfg.k * median(state.displacements), cfg.epsilon_min);
}

bool check_recovery(const EpisodeState& state, const ExecConfig& cfg) {
  if (state.recovery || cfg.window <= 0) return false;
  auto n = static_cast<std::size_t>(cfg.window);
  if (state.history.size() < n) return false;
  double eps = dynamic_epsilon(state, cfg);
  auto first = state.history.end() - static_cast<std::ptrdiff_t>(n);
  double spread = 0.0;
  for (auto a = first; a != state.history.end(); ++a)
    for (auto b = a + 1; b != state.history.end(); ++b) spread = std::max(spread, distance(*a, *b));
  return spread < eps;
}

void apply_recovery(EpisodeState& state, const ExecConfig& cfg) {
  if (state.recovery) return;
  state.recovery = Recovery{cfg.recovery_steps, state.subtask_index, state.progress};
}

bool tick_recovery(EpisodeState& state) {
  if (!state.recovery) return false;
  if (--state.recovery->steps_remaining > 0) return false;
  state.subtask_index = state.recovery->saved_index;
  state.progress = state.recovery->saved_progress;
  state.recovery.reset();
  // A fresh window has to fill before the next trigger; the displacement
  // record behind the median is kept.
  if (!state.history.empty()) state.history.erase(state.history.begin(), state.history.end() - 1);
  return true;
}

int EpisodeResult::count(std::string_view kind) const {
  return static_cast<int>(std::count_if(events.begin(), events.end(), [&](const Event& e) { return e.kind == kind; }));
}

EpisodeResult run_episode(sim::Scene& scene, const language::FinalTaskList& list, const BackendSuite& backends,
                          const ExecConfig& cfg, vision::MaskFlow* flow, const sim::TaskDef* task,
                          const StepSink& sink) {
  EpisodeResult result;
  if (list.subtasks.empty()) {
    result.events.push_back({0, "invalid-plan", 0, "empty task list"});
    return result;
  }
  result.verified.assign(list.subtasks.size(), false);
  EpisodeState state;
  state.push_pose(pose_of(scene));

  auto observe = [&]() {
    auto raw = sim::render(scene);
    if (!flow) return raw;
    bool frozen = false;
    auto out = flow->overlay(raw, &frozen);
    if (frozen) result.events.push_back({state.step_count, "vos-frozen", state.subtask_index, ""});
    return out;
  };

  try {
    Frame current = observe();
    Frame segment_start = current;
    while (state.step_count < cfg.max_steps) {
      bool recovering = state.recovery.has_value();
      std::string prompt = recovering ? std::string(kLiftPrompt)
                                      : language::build_execution_prompt(list, state.subtask_index - 1, cfg.augment_prompt);
      Action action = backends.vla->act(prompt, current);
      scene = sim::step(scene, action);
      ++state.step_count;
      state.push_pose(pose_of(scene));
      current = observe();
      if (sink) sink({state.step_count, state.subtask_index, recovering, prompt, action, scene.gripper});

      if (recovering) {
        if (tick_recovery(state))
          result.events.push_back({state.step_count, "recovery-end", state.subtask_index,
                                   "progress " + std::to_string(state.progress)});
        continue;
      }

      ++state.progress;
      ++state.since_verify;
      if (state.since_verify >= cfg.verify_every) {
        state.since_verify = 0;
        const auto& st = list.subtasks[state.subtask_index - 1];
        bool yes = backends.verifier->verify(language::build_verifier_prompt(st), segment_start, current);
        segment_start = current;
        result.events.push_back({state.step_count, "verify", state.subtask_index, yes ? "Yes" : "No"});
        if (yes) {
          result.verified[state.subtask_index - 1] = true;
          if (state.subtask_index == list.subtasks.size()) {
            result.success = true;
            break;
          }
          ++state.subtask_index;
          state.progress = 0;
        }
      }

      if (check_recovery(state, cfg)) {
        apply_recovery(state, cfg);
        result.events.push_back({state.step_count, "recovery-start", state.subtask_index,
                                 "progress " + std::to_string(state.progress)});
      }
    }
  } catch (const Error& e) {
    result.success = false;
    result.events.push_back({state.step_count, "backend-error", state.subtask_index, e.what()});
  }
  if (state.recovery)
    result.events.push_back({state.step_count, "unfinished-recovery", state.subtask_index,
                             std::to_string(state.recovery->steps_remaining) + " steps left"});
  result.steps = state.step_count;
  if (task) result.goal_met = sim::goal_satisfied(*task, scene);
  return result;
}

nlohmann::json to_json(const Event& e) {
  return {{"step", e.step}, {"event", e.kind}, {"subtask", e.subtask}, {"detail", e.detail}};
}

nlohmann::json to_json(const StepRecord& r) {
  nlohmann::json g = {{"x", r.gripper.x}, {"y", r.gripper.y}, {"z", r.gripper.z}};
  g["holding"] = r.gripper.holding ? nlohmann::json(*r.gripper.holding) : nlohmann::json(nullptr);
  return {{"step", r.step},   {"event", "step"},    {"subtask", r.subtask}, {"recovery", r.recovery},
          {"prompt", r.prompt}, {"action", r.action}, {"gripper", g}};
}

void TraceWriter::step(const StepRecord& r) { out_ << to_json(r).dump() << '\n'; }

void TraceWriter::events(const std::vector<Event>& events) {
  for (const auto& e : events) out_ << to_json(e).dump() << '\n';
}

}  // namespace oodagent::executor
