#pragma once

#include "oodagent/backends.hpp"
#include "oodagent/executor.hpp"
#include "oodagent/language.hpp"
#include "oodagent/memory.hpp"
#include "oodagent/plan.hpp"
#include "oodagent/simworld.hpp"
#include "oodagent/vision.hpp"

#include <optional>
#include <string>
#include <vector>

namespace oodagent::pipeline {

struct AblationConfig {
  bool no_mask = false;
  bool no_replace = false;
  bool no_web = false;
  bool no_subtask_augmentation = false;

  // Comma-separated; accepts "mask" or "no_mask" style names, and "subtask"
  // for no_subtask_augmentation. Unknown names throw config_error.
  static AblationConfig parse(std::string_view csv);
  // "full", or the set flags joined with '+'.
  std::string label() const;
  friend bool operator==(const AblationConfig&, const AblationConfig&) = default;
};

// Everything the one-shot cognition stage produced for a task.
struct Cognition {
  plan::PlanOutcome plan;
  std::vector<vision::GroundingRecord> records;  // objects, then locations
  vision::ColorAssignment colors;
  std::vector<language::ReplaceDecision> decisions;
  language::FinalTaskList final_list;
  std::vector<executor::Event> events;

  const vision::GroundingRecord* record(std::string_view term) const;
  const language::ReplaceDecision* decision(std::string_view term) const;
};

// Descriptive names the planner must keep verbatim.
std::vector<std::string> planner_inlist(const std::string& instruction);

// Planner, vision pre-processing and vision, language, task-list repair.
Cognition cognize(const std::string& instruction, const Frame& first, MemoryStore& memory,
                  const BackendSuite& backends, const AblationConfig& ablation);

struct RunOutcome {
  Cognition cognition;
  executor::EpisodeResult result;
  std::array<int, kCapabilityCount> calls{};
};

// Cognition once, then the executor loop on `scene`.
RunOutcome run_task(const sim::TaskDef& task, sim::Scene scene, MemoryStore& memory, const BackendSuite& backends,
                    const AblationConfig& ablation, executor::ExecConfig cfg = {}, bool wall_clock = false,
                    const executor::StepSink& sink = {});

}  // namespace oodagent::pipeline
