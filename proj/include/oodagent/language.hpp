#pragma once

#include "oodagent/backends.hpp"
#include "oodagent/memory.hpp"
#include "oodagent/plan.hpp"
#include "oodagent/vision.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace oodagent::language {

inline constexpr int kSnippetLimit = 4;

enum class ReplaceSource { identity_known, memory_hit, model_generated, none };
std::string_view to_string(ReplaceSource s);

struct ReplaceDecision {
  std::string term;
  std::optional<std::string> replacement;
  ReplaceSource source = ReplaceSource::none;

  friend bool operator==(const ReplaceDecision&, const ReplaceDecision&) = default;
};

// What the understanding model may be shown for one term.
struct TextEvidence {
  std::optional<Image> collage;
  std::optional<std::vector<std::string>> keywords;
  std::optional<Frame> top_crop;
  bool has_scores = false;
  std::optional<Frame> raw_image;
  std::string snippets;
};

TextEvidence evidence_from(const vision::GroundingRecord& grounding, const std::optional<Frame>& raw_image);

Messages build_text_messages(std::string_view term, const TextEvidence& evidence, const KnownList& known,
                             bool web_enabled);

// Content of the first <answer>...</answer> span; NONE and non-members give nullopt.
std::optional<std::string> parse_answer(std::string_view model_output, const KnownList& known);
bool has_answer_span(std::string_view model_output);

struct ReplaceOptions {
  bool web_enabled = true;
  // When false only identity decisions are made (the replace ablation).
  bool replace_enabled = true;
};

ReplaceDecision resolve_replacement(const std::string& term, const vision::GroundingRecord& grounding,
                                    const Frame& first, MemoryStore& memory, const BackendSuite& backends,
                                    const ReplaceOptions& options = {});

struct FinalTaskList {
  std::string goal;
  std::vector<plan::Subtask> subtasks;

  std::vector<std::string> prompts() const;
  friend bool operator==(const FinalTaskList&, const FinalTaskList&) = default;
};

// Rewrites every occurrence of each term to "<color>-mask <replacement or
// term>" (the qualifier only when the record has a mask), then repairs the
// slot lists by re-parsing each rewritten line.
FinalTaskList finalize_task_list(const plan::TaskPlan& plan, const std::vector<ReplaceDecision>& decisions,
                                 const std::vector<vision::GroundingRecord>& records);

// Applies the same rewrite to free text.
std::string rewrite_terms(std::string_view text, const std::vector<ReplaceDecision>& decisions,
                          const std::vector<vision::GroundingRecord>& records);

std::string build_execution_prompt(const FinalTaskList& list, std::size_t current, bool augment = true);

std::string build_verifier_prompt(const plan::Subtask& subtask, std::string_view title_prefix = {});
// Verb given as text; verbs outside the known set get the generic question.
std::string build_verifier_prompt(std::string_view verb, std::string_view subtask, std::string_view object_name,
                                  std::string_view location_name, std::string_view raw_part,
                                  std::string_view title_prefix = {});

}  // namespace oodagent::language
