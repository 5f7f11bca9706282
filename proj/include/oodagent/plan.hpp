#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace oodagent::plan {

// A natural-language task string; never empty after trimming.
class Instruction {
 public:
  explicit Instruction(std::string_view text);
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

enum class Verb { pick_up, place_on, place_in, open, close, turn_on, turn_off };

std::string_view to_string(Verb v);
Verb verb_from(std::string_view s);
// The surface form as it appears in commands ("place" for both place verbs).
std::string_view command_word(Verb v);
bool is_manipulation(Verb v);

struct Subtask {
  int index = 1;
  Verb verb = Verb::pick_up;
  std::string text;
  std::vector<std::string> slots;

  friend bool operator==(const Subtask&, const Subtask&) = default;
};

struct TaskPlan {
  std::string goal;
  std::vector<Subtask> subtasks;
  std::vector<std::string> objects;
  std::vector<std::string> locations;

  friend bool operator==(const TaskPlan&, const TaskPlan&) = default;
};

enum class ParseStatus { success, no_subtask_found, no_objects_found, no_subtask_or_objects };

std::string_view to_string(ParseStatus s);
// The regeneration hint the planner prompt carries for each status.
std::string_view additional_info(ParseStatus s);

std::string build_planner_prompt(const Instruction& task, ParseStatus sign,
                                 const std::vector<std::string>& inlist);

std::variant<TaskPlan, ParseStatus> parse_plan(std::string_view model_output);

// Template decomposition used once the model has failed twice.
TaskPlan fallback_parse(const Instruction& task);

// Recomputes objects/locations from the subtask list (first-occurrence order).
void derive_terms(TaskPlan& plan);

// Drops positional modifiers and reduces "part of the X" to X.
std::string sanitize_slot(std::string_view slot);

// Renders "Goal: ...\n1. cmd /(a, b)/\n..." in the planner's output format.
std::string format_plan(const TaskPlan& plan);

// Classifies a command string by longest allowed-verb prefix.
std::optional<Verb> classify_command(std::string_view command, std::string_view first_slot = {});

struct PlanOutcome {
  TaskPlan plan;
  int model_calls = 0;
  bool used_fallback = false;
  std::vector<ParseStatus> statuses;
};

using PlannerFn = std::function<std::string(const std::string& prompt)>;

// First failure regenerates with the status hint; the second falls back to
// template parsing.
PlanOutcome plan_task(const Instruction& task, const PlannerFn& planner,
                      const std::vector<std::string>& inlist);

}  // namespace oodagent::plan
