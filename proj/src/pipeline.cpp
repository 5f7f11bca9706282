#include "oodagent/pipeline.hpp"

#include "oodagent/error.hpp"
#include "oodagent/text.hpp"

#include <algorithm>

namespace oodagent::pipeline {

AblationConfig AblationConfig::parse(std::string_view csv) {
  AblationConfig a;
  for (auto raw : text::split(csv, ',')) {
    auto name = text::normalize(raw);
    if (name.empty() || name == "none" || name == "full") continue;
    if (name.rfind("no_", 0) == 0) name = name.substr(3);
    if (name == "mask") a.no_mask = true;
    else if (name == "replace") a.no_replace = true;
    else if (name == "web") a.no_web = true;
    else if (name == "subtask" || name == "subtask_augmentation") a.no_subtask_augmentation = true;
    else throw Error(ErrorCode::config_error, "unknown ablation '" + std::string(text::trim(raw)) + "'");
  }
  return a;
}

std::string AblationConfig::label() const {
  std::vector<std::string> parts;
  if (no_mask) parts.emplace_back("no_mask");
  if (no_replace) parts.emplace_back("no_replace");
  if (no_web) parts.emplace_back("no_web");
  if (no_subtask_augmentation) parts.emplace_back("no_subtask_augmentation");
  return parts.empty() ? "full" : text::join(parts, "+");
}

const vision::GroundingRecord* Cognition::record(std::string_view term) const {
  for (const auto& r : records)
    if (r.term == term) return &r;
  return nullptr;
}

const language::ReplaceDecision* Cognition::decision(std::string_view term) const {
  for (const auto& d : decisions)
    if (d.term == term) return &d;
  return nullptr;
}

std::vector<std::string> planner_inlist(const std::string& instruction) {
  auto p = plan::fallback_parse(plan::Instruction(instruction));
  std::vector<std::string> out = p.objects;
  for (const auto& l : p.locations)
    if (std::find(out.begin(), out.end(), l) == out.end()) out.push_back(l);
  return out;
}

Cognition cognize(const std::string& instruction, const Frame& first, MemoryStore& memory,
                  const BackendSuite& backends, const AblationConfig& ablation) {
  Cognition c;
  plan::Instruction task(instruction);
  auto planner = [&](const std::string& prompt) {
    Messages msgs{{"user", {MessagePart::of_text(prompt)}}};
    return backends.planner->generate(kRolePlanner, msgs);
  };
  c.plan = plan::plan_task(task, planner, planner_inlist(instruction));
  if (c.plan.used_fallback) c.events.push_back({0, "planner-fallback", 0, ""});
  const auto& tp = c.plan.plan;

  std::vector<std::string> terms = tp.objects;
  for (const auto& l : tp.locations)
    if (std::find(terms.begin(), terms.end(), l) == terms.end()) terms.push_back(l);

  vision::GroundOptions gopt;
  gopt.web_enabled = !ablation.no_web;
  for (const auto& t : terms) c.records.push_back(vision::ground_term(t, first, memory, backends, gopt));

  c.colors = vision::assign_colors(tp.objects, tp.locations);
  if (!ablation.no_mask) {
    vision::make_masks(c.records, first, backends, [&](const std::string& kind, const std::string& detail) {
      c.events.push_back({0, kind, 0, detail});
    });
    vision::attach_colors(c.records, c.colors);
  }

  language::ReplaceOptions ropt;
  ropt.web_enabled = !ablation.no_web;
  ropt.replace_enabled = !ablation.no_replace;
  for (std::size_t i = 0; i < terms.size(); ++i)
    c.decisions.push_back(language::resolve_replacement(terms[i], c.records[i], first, memory, backends, ropt));

  c.final_list = language::finalize_task_list(tp, c.decisions, c.records);
  return c;
}

RunOutcome run_task(const sim::TaskDef& task, sim::Scene scene, MemoryStore& memory, const BackendSuite& backends,
                    const AblationConfig& ablation, executor::ExecConfig cfg, bool wall_clock,
                    const executor::StepSink& sink) {
  auto meter = std::make_shared<CallMeter>(wall_clock);
  auto metered = instrument(backends, meter);
  RunOutcome out;
  Frame first = sim::render(scene);
  std::optional<vision::MaskFlow> flow;
  try {
    out.cognition = cognize(task.instruction, first, memory, metered, ablation);
    if (!ablation.no_mask) flow.emplace(metered, first, out.cognition.records, out.cognition.colors);
  } catch (const Error& e) {
    out.result.events.push_back({0, "backend-error", 0, e.what()});
    out.result.timings = meter->timings();
    for (std::size_t i = 0; i < kCapabilityCount; ++i) out.calls[i] = meter->calls(static_cast<Capability>(i));
    return out;
  }
  cfg.augment_prompt = !ablation.no_subtask_augmentation;
  out.result = executor::run_episode(scene, out.cognition.final_list, metered, cfg, flow ? &*flow : nullptr, &task, sink);
  out.result.events.insert(out.result.events.begin(), out.cognition.events.begin(), out.cognition.events.end());
  out.result.timings = meter->timings();
  for (std::size_t i = 0; i < kCapabilityCount; ++i) out.calls[i] = meter->calls(static_cast<Capability>(i));
  return out;
}

}  // namespace oodagent::pipeline
