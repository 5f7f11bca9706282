#include "oodagent/plan.hpp"

#include "oodagent/error.hpp"
#include "oodagent/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <regex>
#include <set>

namespace oodagent::plan {

namespace {

// Planner prompt template. Placeholders: {inlist}, {additional_info}, {task_description}.
constexpr std::string_view kPlannerTemplate = R"PLAN(
You are a planning assistant for a fixed robotic arm. Your goal is to break down a high-level task into a sequence of **essential high-level commands**, suitable for a capable Vision-Language-Action (VLA) model to execute directly.

Output Format:
Generate a numbered list of commands. Each command should represent a significant action achieving a clear sub-goal. Stick to the allowed high-level actions.

Example Plan Format (Use **exactly** this level of granularity):
Plan for the robot arm:

Goal: <original instruction>
1. pick up the <object_name_1> /(<object_name_1>)/
2. place the <object_name_1> in the <target_location> /(<object_name_1>,<target_location>)/
3. pick up the <object_name_2> /(<object_name_2>)/
4. place the <object_name_2> in the <target_location> /(<object_name_2>,<target_location>)/

--- Example for a different task ---
Goal: Put the apple in the red bowl
1. pick up the apple /(apple)/
2. place the apple in the red bowl /(apple, red bowl)/

--- Example for another task ---
Goal: Put the cup in the microwave and close it
1. pick up the cup /(cup)/
2. place the cup in the microwave /(cup, microwave)/
3. close the microwave /(microwave)/

--- Example for another task ---
Goal: Turn on the stove and put the pot on it
1. turn on the stove /(stove)/
2. pick up the pot /(pot)/
3. place the pot on the stove /(pot, stove)/

--- Example for another task ---
Goal: Put both books on the bookshelf
1. pick up the red book /(red book)/
2. place the red book on the bookshelf /(red book, bookshelf)/
3. pick up the brown book /(brown book)/
4. place the brown book on the bookshelf /(brown book, bookshelf)/

--- Example for another task ---
Goal: pick the red book near the butter and the brown book on the plate and put them on the left bookshelf
1. pick up the red book near the butter /(red book)/
2. place the red book near the butter on the left bookshelf /(red book, bookshelf)/
3. pick up the brown book on the plate /(brown book)/
4. place the brown book on the plate on the left bookshelf /(brown book, bookshelf)/

--- Example for another task ---
Goal: pick up the yellow and white mug next to the cookie box and place it on the plate
1. pick up the yellow and white mug next to the cookie box /(yellow and white mug)/
2. place the yellow and white mug next to the cookie box on the plate /(yellow and white mug, plate)/

--- Example for another task ---
Goal: put the black bowl in the bottom drawer of the cabinet and close it
1. pick up the black bowl /(black bowl)/
2. place the black bowl in the bottom drawer of the cabinet /(black bowl, cabinet)/
3. close the bottom drawer of the cabinet /(cabinet)/

Instructions:
- Generate **only** high-level commands. 
- Your output should be in the ***ABSOLUTELY SAME format*** as the example above. Even with unseen tasks, follow the same structure. ***WITHOUT ANY OTHER ANALYSIS and DESCRIPTION***.
- **After each command**, include a comment with the object names and locations in */()/*. This is necessary for the VLA model to understand which objects are involved in each command.
- DO NOT include any descriptions of position and order in */()/* (e.g., "first pot", "back of the shelf", "bottom of sth", "upper of sth"), only color and shape are permitted (e.g., "red bowl", "cylindrical box").
    But you should maintain the details of the objects and locations as described in the task to subtask, such as "red bowl near the plate", "brown book on the cabinet", "left bookshelf", "black bowl next to the cookie box", etc.
- **ONLY USE */()/* to EXPRESS *OBJECTS*.** Comments, explanations, and anything else that has nothing to do with expressing objects are not allowed.
- When an object or location has a qualifying modifier, such as a cabinet's drawer, door of a microwave, or the handle of pot, what you are expected to display in the /()/ is actually the **largest specific items these expressions** refer to, which are cabinets, microwaves, and pots, not the parts or subordinate items on these items that belong to these items.
    Meanwhile, you should still maintain the detailed expression in the subtask as "the drawer of the cabinet", "the door of the microwave" (eg. pick up the bottle on the stove; pick up the bowl in the drawer).
- **Allowed commands are strictly limited to:**
    - `pick up [object]`
    - `place [object] on [location]`
    - `place [object] in [location]`
    - `open [object/container/drawer/cabinet/etc.]`
    - `close [object/container/drawer/cabinet/etc.]`
    - `turn on [device]`
    - `turn off [device]`
- Use the commands above **only when necessary** to achieve the goal. Most tasks will primarily use `pick up` and `place`.
- **Explicitly DO NOT include separate steps for:**
    - `locate` (Assume VLA finds the object as part of executing the command)
    - `move to` or `move towards` (Assume the command includes necessary travel)
    - `lift`, `lower`, `grasp`, `release`, `push`, `pull`, `rotate`, `adjust` (Assume high-level commands handle these internally)
- **Assume the VLA model handles all implicit actions:**
    - "pick up [object]" means: Find the object, navigate to it, grasp it securely, and lift it.
    - "place [object] in [location]" means: Transport the object to the location, position it correctly, and release the grasp.
    - "open/close [container]" means: Find the handle/seam, interact with it appropriately (pull, slide, lift) to change the container's state.
    - "turn on/off [device]" means: Find the correct button/switch, interact with it to change the device's power state.
- Use the descriptive names from the task description and **DO NOT make any distortions** in subtasks (e.g., if the task involves {inlist}, make sure the subtasks about them are exactly the same).
- Generate the minimal sequence of these high-level commands required to fulfill the Goal. Ensure the sequence logically achieves the task (e.g., you might need to `open` a drawer before `placing something inside it, even if 'open' isn't explicitly stated in the goal).
- Additional INFO:{additional_info}
Task: {task_description}
Output:
)PLAN";

struct VerbForm {
  std::string_view surface;
  Verb verb;
};

// "place" resolves to place_on / place_in after inspecting the preposition.
constexpr std::array<VerbForm, 6> kVerbForms{{
    {"pick up", Verb::pick_up},
    {"place", Verb::place_on},
    {"open", Verb::open},
    {"close", Verb::close},
    {"turn on", Verb::turn_on},
    {"turn off", Verb::turn_off},
}};

const std::set<std::string, std::less<>> kPositional{
    "first", "second", "third", "fourth", "last", "top",  "bottom", "middle",
    "upper", "lower",  "back",  "front",  "left", "right", "rear"};

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

std::string strip_article(std::string s) {
  for (std::string_view a : {"the ", "a ", "an "}) {
    if (s.size() > a.size() && text::lower(s.substr(0, a.size())) == a) return text::trim(s.substr(a.size()));
  }
  return s;
}

std::string first_word(std::string_view s) {
  auto t = text::trim(s);
  auto sp = t.find_first_of(" \t,.;");
  return text::lower(t.substr(0, sp));
}

Verb place_variant(std::string_view command_lower, std::string_view first_slot) {
  std::string_view rest = command_lower.substr(std::min<std::size_t>(5, command_lower.size()));
  if (!first_slot.empty()) {
    auto slot = text::lower(first_slot);
    if (auto pos = text::find_word(rest, slot)) {
      auto w = first_word(rest.substr(*pos + slot.size()));
      if (w == "in" || w == "into" || w == "inside") return Verb::place_in;
      return Verb::place_on;
    }
  }
  std::string rs(rest);
  for (const auto& w : text::split(rs, ' ')) {
    if (w == "in" || w == "into" || w == "inside") return Verb::place_in;
    if (w == "on" || w == "onto") return Verb::place_on;
  }
  return Verb::place_on;
}

// Last "/( ... )/" group on a line, with the command text before it.
struct Annotated {
  std::string command;
  std::optional<std::string> group;
};

Annotated split_annotation(std::string_view content) {
  auto open = content.rfind("/(");
  if (open == std::string_view::npos) return {text::trim(content), std::nullopt};
  auto close = content.find(")/", open + 2);
  if (close == std::string_view::npos) return {text::trim(content), std::nullopt};
  // Earlier groups on the same line are dropped from the command text.
  std::string command(content.substr(0, open));
  for (auto o = command.find("/("); o != std::string::npos; o = command.find("/(")) {
    auto c = command.find(")/", o);
    command.erase(o, c == std::string::npos ? std::string::npos : c + 2 - o);
  }
  return {text::trim(command), std::string(content.substr(open + 2, close - open - 2))};
}

std::vector<std::string> split_slots(std::string_view group) {
  std::vector<std::string> out;
  for (auto& part : text::split(group, ',')) {
    auto t = text::trim(part);
    if (!t.empty()) out.push_back(sanitize_slot(t));
  }
  return out;
}

Subtask make_subtask(int index, Verb verb, std::string text, std::vector<std::string> slots) {
  Subtask s;
  s.index = index;
  s.verb = verb;
  s.text = std::move(text);
  s.slots = std::move(slots);
  return s;
}

}  // namespace

Instruction::Instruction(std::string_view text) : text_(text::trim(text)) {
  if (text_.empty()) throw Error(ErrorCode::invalid_instruction, "instruction is empty");
}

std::string_view to_string(Verb v) {
  switch (v) {
    case Verb::pick_up: return "pick up";
    case Verb::place_on: return "place-on";
    case Verb::place_in: return "place-in";
    case Verb::open: return "open";
    case Verb::close: return "close";
    case Verb::turn_on: return "turn on";
    case Verb::turn_off: return "turn off";
  }
  return "pick up";
}

Verb verb_from(std::string_view s) {
  for (Verb v : {Verb::pick_up, Verb::place_on, Verb::place_in, Verb::open, Verb::close, Verb::turn_on,
                 Verb::turn_off})
    if (to_string(v) == s) return v;
  throw Error(ErrorCode::invalid_input, "unknown verb: " + std::string(s));
}

std::string_view command_word(Verb v) {
  return (v == Verb::place_on || v == Verb::place_in) ? std::string_view("place") : to_string(v);
}

bool is_manipulation(Verb v) { return v == Verb::pick_up || v == Verb::place_on || v == Verb::place_in; }

std::string_view to_string(ParseStatus s) {
  switch (s) {
    case ParseStatus::success: return "success";
    case ParseStatus::no_subtask_found: return "no subtask found";
    case ParseStatus::no_objects_found: return "no objects found";
    case ParseStatus::no_subtask_or_objects: return "no subtask or objects found";
  }
  return "success";
}

std::string_view additional_info(ParseStatus s) {
  switch (s) {
    case ParseStatus::success:
      return "You are doing a good job, keep it up";
    case ParseStatus::no_subtask_found:
      return "PAY MORE ATTENTION TO THE SUBTASKS in your last output, no valid subtask found. You should "
             "output the subtask in the same format as the example, without any other analysis or description.";
    case ParseStatus::no_objects_found:
      return "PAY MORE ATTENTION TO THE OBJECTS in your last output, no valid objects found in /(here)/. You "
             "should output the objects in the same format as the example, without any other analysis or "
             "description.";
    case ParseStatus::no_subtask_or_objects:
      return "PAY MORE ATTENTION TO THE SUBTASKS and OBJECTS in your last output, no valid subtask or objects "
             "found. You should output the subtask and objects in the same format as the example, without any "
             "other analysis or description.";
  }
  return "";
}

std::string build_planner_prompt(const Instruction& task, ParseStatus sign, const std::vector<std::string>& inlist) {
  std::string out(kPlannerTemplate);
  out = replace_all(std::move(out), "{inlist}", text::py_list(inlist));
  out = replace_all(std::move(out), "{additional_info}", additional_info(sign));
  out = replace_all(std::move(out), "{task_description}", task.text());
  return out;
}

std::string sanitize_slot(std::string_view slot) {
  std::string s = text::trim(slot);
  auto lower = text::lower(s);
  // "middle drawer of the white cabinet" names the white cabinet.
  std::size_t of = std::string::npos;
  for (auto pos = text::find_word(lower, "of"); pos; pos = text::find_word(lower, "of", *pos + 2)) of = *pos;
  if (of != std::string::npos && of + 2 < s.size()) s = text::trim(s.substr(of + 2));
  s = strip_article(s);
  auto words = text::split(s, ' ');
  std::size_t drop = 0;
  while (drop + 1 < words.size() && kPositional.count(text::lower(words[drop]))) ++drop;
  words.erase(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(drop));
  return text::trim(text::join(words, " "));
}

std::optional<Verb> classify_command(std::string_view command, std::string_view first_slot) {
  auto lower = text::lower(text::trim(command));
  const VerbForm* best = nullptr;
  for (const auto& form : kVerbForms) {
    if (text::starts_with_word(lower, form.surface) && (!best || form.surface.size() > best->surface.size()))
      best = &form;
  }
  if (!best) return std::nullopt;
  if (best->surface == "place") return place_variant(lower, first_slot);
  return best->verb;
}

void derive_terms(TaskPlan& plan) {
  plan.objects.clear();
  plan.locations.clear();
  auto add = [](std::vector<std::string>& v, const std::string& t) {
    if (!t.empty() && std::find(v.begin(), v.end(), t) == v.end()) v.push_back(t);
  };
  for (const auto& st : plan.subtasks) {
    if (st.slots.empty()) continue;
    switch (st.verb) {
      case Verb::pick_up:
        add(plan.objects, st.slots[0]);
        break;
      case Verb::place_on:
      case Verb::place_in:
        add(plan.objects, st.slots[0]);
        if (st.slots.size() > 1) add(plan.locations, st.slots[1]);
        break;
      default:
        add(plan.locations, st.slots[0]);
        break;
    }
  }
}

std::variant<TaskPlan, ParseStatus> parse_plan(std::string_view model_output) {
  static const std::regex numbered(R"(^\s*(\d+)\s*[.)]\s*(.*)$)");
  TaskPlan plan;
  int numbered_lines = 0;
  bool non_command_group = false;
  bool missing_group = false;
  for (const auto& line : text::split_lines(model_output)) {
    auto trimmed = text::trim(line);
    if (text::lower(trimmed).rfind("goal:", 0) == 0 && plan.goal.empty()) {
      plan.goal = text::trim(trimmed.substr(5));
      continue;
    }
    std::smatch m;
    if (!std::regex_match(trimmed, m, numbered)) continue;
    ++numbered_lines;
    auto ann = split_annotation(m[2].str());
    std::vector<std::string> slots = ann.group ? split_slots(*ann.group) : std::vector<std::string>{};
    auto verb = classify_command(ann.command, slots.empty() ? std::string_view{} : std::string_view(slots[0]));
    if (!verb) {
      non_command_group = non_command_group || ann.group.has_value();
      continue;
    }
    if (slots.empty()) missing_group = true;
    int index = static_cast<int>(plan.subtasks.size()) + 1;
    plan.subtasks.push_back(make_subtask(index, *verb, ann.command, std::move(slots)));
  }
  if (plan.subtasks.empty()) {
    if (numbered_lines > 0 && !non_command_group) return ParseStatus::no_subtask_or_objects;
    return ParseStatus::no_subtask_found;
  }
  if (missing_group) return ParseStatus::no_objects_found;
  derive_terms(plan);
  return plan;
}

TaskPlan fallback_parse(const Instruction& task) {
  using std::regex;
  const auto flags = regex::ECMAScript | regex::icase;
  static const regex open_put(R"(^open (?:the )?(.+?) and (?:put|place) (?:the )?(.+?) (?:inside|in it|into it)$)", flags);
  static const regex put(R"(^(?:put|place) (?:the )?(.+?) (on top of|onto|on|into|inside|in) (?:the )?(.+)$)", flags);
  static const regex push(R"(^push (?:the )?(.+?) to (?:the )?(front|back|left|right) of (?:the )?(.+)$)", flags);
  static const regex pick_place(
      R"(^pick up (?:the )?(.+?) and (?:put|place) it (on top of|onto|on|into|inside|in) (?:the )?(.+)$)", flags);
  static const regex turn(R"(^turn (on|off) (?:the )?(.+)$)", flags);
  static const regex open_close(R"(^(open|close) (?:the )?(.+)$)", flags);
  static const regex pick(R"(^pick up (?:the )?(.+)$)", flags);

  std::string goal = task.text();
  std::string s = goal;
  while (!s.empty() && (s.back() == '.' || s.back() == '!')) s.pop_back();
  s = text::trim(s);

  TaskPlan plan;
  plan.goal = goal;
  auto add = [&](Verb v, std::string txt, std::vector<std::string> slots) {
    int idx = static_cast<int>(plan.subtasks.size()) + 1;
    plan.subtasks.push_back(make_subtask(idx, v, std::move(txt), std::move(slots)));
  };
  auto place_pair = [&](const std::string& obj, const std::string& prep, const std::string& loc) {
    auto p = text::lower(prep);
    bool in = p == "in" || p == "into" || p == "inside";
    std::string phrase = (p == "on top of") ? "on top of" : (in ? "in" : "on");
    add(Verb::pick_up, "pick up the " + obj, {sanitize_slot(obj)});
    add(in ? Verb::place_in : Verb::place_on, "place the " + obj + " " + phrase + " the " + loc,
        {sanitize_slot(obj), sanitize_slot(loc)});
  };

  std::smatch m;
  if (std::regex_match(s, m, open_put)) {
    std::string container = m[1].str(), obj = m[2].str();
    add(Verb::open, "open the " + container, {sanitize_slot(container)});
    add(Verb::pick_up, "pick up the " + obj, {sanitize_slot(obj)});
    add(Verb::place_in, "place the " + obj + " in the " + container, {sanitize_slot(obj), sanitize_slot(container)});
  } else if (std::regex_match(s, m, pick_place) || std::regex_match(s, m, put)) {
    place_pair(m[1].str(), m[2].str(), m[3].str());
  } else if (std::regex_match(s, m, push)) {
    std::string obj = m[1].str(), side = text::lower(m[2].str()), loc = m[3].str();
    add(Verb::pick_up, "pick up the " + obj, {sanitize_slot(obj)});
    add(Verb::place_on, "place the " + obj + " on the " + side + " of the " + loc,
        {sanitize_slot(obj), sanitize_slot(loc)});
  } else if (std::regex_match(s, m, turn)) {
    auto v = text::lower(m[1].str()) == "on" ? Verb::turn_on : Verb::turn_off;
    add(v, "turn " + text::lower(m[1].str()) + " the " + m[2].str(), {sanitize_slot(m[2].str())});
  } else if (std::regex_match(s, m, open_close)) {
    auto v = text::lower(m[1].str()) == "open" ? Verb::open : Verb::close;
    add(v, text::lower(m[1].str()) + " the " + m[2].str(), {sanitize_slot(m[2].str())});
  } else if (std::regex_match(s, m, pick)) {
    add(Verb::pick_up, "pick up the " + m[1].str(), {sanitize_slot(m[1].str())});
  } else {
    // No template: one subtask carrying the whole instruction.
    auto lower = text::lower(s);
    Verb verb = Verb::pick_up;
    std::size_t best_pos = std::string::npos, verb_len = 0;
    for (const auto& form : kVerbForms) {
      auto pos = text::find_word(lower, form.surface);
      if (pos && *pos < best_pos) {
        best_pos = *pos;
        verb_len = form.surface.size();
        verb = form.surface == "place" ? place_variant(lower.substr(*pos), {}) : form.verb;
      }
    }
    std::string rest = best_pos == std::string::npos ? s : s.substr(best_pos + verb_len);
    static const regex cut(R"(^\s*(?:the |a |an )?(.+?)(?: (?:on|in|into|onto|to|with|from|near) .*)?$)", flags);
    std::smatch r;
    std::string slot = std::regex_match(rest, r, cut) ? sanitize_slot(r[1].str()) : sanitize_slot(rest);
    if (slot.empty()) slot = sanitize_slot(s);
    add(verb, s, {slot});
  }
  derive_terms(plan);
  return plan;
}

std::string format_plan(const TaskPlan& plan) {
  std::string out = "Goal: " + plan.goal + "\n";
  for (const auto& st : plan.subtasks) {
    out += std::to_string(st.index) + ". " + st.text + " /(" + text::join(st.slots, ", ") + ")/\n";
  }
  return out;
}

PlanOutcome plan_task(const Instruction& task, const PlannerFn& planner, const std::vector<std::string>& inlist) {
  PlanOutcome outcome;
  ParseStatus sign = ParseStatus::success;
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto output = planner(build_planner_prompt(task, sign, inlist));
    ++outcome.model_calls;
    auto parsed = parse_plan(output);
    if (auto* p = std::get_if<TaskPlan>(&parsed)) {
      outcome.plan = std::move(*p);
      outcome.plan.goal = task.text();
      outcome.statuses.push_back(ParseStatus::success);
      return outcome;
    }
    sign = std::get<ParseStatus>(parsed);
    outcome.statuses.push_back(sign);
  }
  outcome.plan = fallback_parse(task);
  outcome.used_fallback = true;
  return outcome;
}

}  // namespace oodagent::plan
