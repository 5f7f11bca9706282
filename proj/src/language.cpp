#include "oodagent/language.hpp"

#include "oodagent/error.hpp"
#include "oodagent/text.hpp"

#include <algorithm>

namespace oodagent::language {

namespace {

constexpr std::string_view kSystemSteer =
    "You normalize open-world object mentions to a closed training vocabulary. "
    "Return EXACTLY ONE label copied verbatim from the allowed list below, "
    "or output NONE if no label applies.";

constexpr std::string_view kStrictConstraints =
    "STRICT CONSTRAINTS:\n"
    "- Output MUST be exactly one label copied verbatim from the allowed vocabulary above, "
    "or the token NONE when no label applies.\n"
    "- DO NOT include any analysis, explanation, reasoning, or additional text.\n"
    "- Format your final decision ONLY as:\n"
    "  <answer>LABEL_OR_NONE</answer>\n"
    "- LABEL_OR_NONE must be one of the allowed labels or NONE.";

Message user_text(std::string t) { return {"user", {MessagePart::of_text(std::move(t))}}; }

Message user_image(std::string t, Frame f) {
  return {"user", {MessagePart::of_text(std::move(t)), MessagePart::of_image(std::move(f))}};
}

std::optional<std::string> answer_span(std::string_view s) {
  auto open = s.find("<answer>");
  if (open == std::string_view::npos) return std::nullopt;
  auto close = s.find("</answer>", open + 8);
  if (close == std::string_view::npos) return std::nullopt;
  return text::trim(s.substr(open + 8, close - open - 8));
}

const vision::GroundingRecord* record_for(const std::vector<vision::GroundingRecord>& records, std::string_view t) {
  for (const auto& r : records)
    if (r.term == t) return &r;
  return nullptr;
}

std::string display_for(const ReplaceDecision& d, const vision::GroundingRecord* rec) {
  std::string noun = d.replacement.value_or(d.term);
  if (rec && rec->mask && rec->color) return *rec->color + "-mask " + noun;
  return noun;
}

std::string strip_annotations(std::string s) {
  for (auto o = s.find("/("); o != std::string::npos; o = s.find("/(")) {
    auto c = s.find(")/", o);
    s.erase(o, c == std::string::npos ? std::string::npos : c + 2 - o);
  }
  return text::trim(s);
}

}  // namespace

std::string_view to_string(ReplaceSource s) {
  switch (s) {
    case ReplaceSource::identity_known: return "identity-known";
    case ReplaceSource::memory_hit: return "memory-hit";
    case ReplaceSource::model_generated: return "model-generated";
    case ReplaceSource::none: return "none";
  }
  return "none";
}

TextEvidence evidence_from(const vision::GroundingRecord& grounding, const std::optional<Frame>& raw_image) {
  TextEvidence ev;
  ev.collage = grounding.collage;
  ev.keywords = grounding.keywords;
  ev.top_crop = grounding.top_crop;
  ev.has_scores = grounding.has_scores;
  ev.raw_image = raw_image;
  return ev;
}

Messages build_text_messages(std::string_view term, const TextEvidence& ev, const KnownList& known,
                             bool web_enabled) {
  Messages m;
  m.push_back({"system", {MessagePart::of_text(std::string(kSystemSteer))}});
  std::vector<std::string> bullets;
  for (const auto& label : known.labels()) bullets.push_back("- " + label);
  m.push_back(user_text("Allowed vocabulary:\n" + text::join(bullets, "\n")));
  m.push_back(user_text("New object mention: " + text::normalize(term)));

  bool has_com = ev.collage.has_value();
  bool has_kw = ev.keywords && !ev.keywords->empty();
  bool has_boxes = ev.top_crop.has_value();
  bool has_scores = ev.has_scores;
  bool context_added = false;

  // Case A
  if (!has_com && !has_kw && (has_boxes || ev.raw_image)) {
    if (has_boxes) {
      m.push_back(user_image("Evidence crop (highest detector score).", *ev.top_crop));
    } else {
      m.push_back(user_image("Context image.", *ev.raw_image));
      context_added = true;
    }
  }
  // Case B; Case A may already have shown the same raw image.
  if (!has_com && !has_kw && !has_boxes && !has_scores && ev.raw_image && !context_added)
    m.push_back(user_image("Context image.", *ev.raw_image));
  // Case C
  if (has_com && has_kw && has_boxes) {
    Frame com;
    com.raster = *ev.collage;
    m.push_back(user_image("Composite reference image from the web.", com));
    m.push_back(user_image("Top-scoring evidence crop from the original image.", *ev.top_crop));
    m.push_back(user_text("Image/scene keywords: " + text::join(*ev.keywords, ", ")));
  }
  if (web_enabled && !ev.snippets.empty()) m.push_back(user_text("External brief (web/Wikipedia):\n" + ev.snippets));
  m.push_back(user_text(std::string(kStrictConstraints)));
  return m;
}

bool has_answer_span(std::string_view model_output) { return answer_span(model_output).has_value(); }

std::optional<std::string> parse_answer(std::string_view model_output, const KnownList& known) {
  auto span = answer_span(model_output);
  if (!span || *span == "NONE") return std::nullopt;
  if (!known.contains(*span)) return std::nullopt;
  return text::normalize(*span);
}

ReplaceDecision resolve_replacement(const std::string& term, const vision::GroundingRecord& grounding,
                                    const Frame& first, MemoryStore& memory, const BackendSuite& backends,
                                    const ReplaceOptions& options) {
  ReplaceDecision d;
  d.term = term;
  auto known = memory.known_list();
  if (known.contains(term)) {
    d.replacement = text::normalize(term);
    d.source = ReplaceSource::identity_known;
    return d;
  }
  if (!options.replace_enabled) return d;
  if (auto hit = memory.replacement(term)) {
    d.replacement = *hit;
    d.source = ReplaceSource::memory_hit;
    return d;
  }
  auto ev = evidence_from(grounding, first);
  if (options.web_enabled) {
    std::vector<std::string> queries{text::normalize(term)};
    if (grounding.keywords)
      for (const auto& k : *grounding.keywords) queries.push_back(text::trim(k));
    ev.snippets = backends.snippets->snippets(queries, kSnippetLimit);
  }
  auto messages = build_text_messages(term, ev, known, options.web_enabled);
  std::optional<std::string> output;
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      output = backends.understanding_text->generate(kRoleText, messages);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::backend_failure && e.code() != ErrorCode::protocol_error) throw;
      output.reset();
      continue;
    }
    if (has_answer_span(*output)) break;
  }
  if (!output) return d;
  if (auto label = parse_answer(*output, known)) {
    memory.put_replacement(term, *label);
    d.replacement = *label;
    d.source = ReplaceSource::model_generated;
  }
  return d;
}

std::string rewrite_terms(std::string_view input, const std::vector<ReplaceDecision>& decisions,
                          const std::vector<vision::GroundingRecord>& records) {
  struct Hit {
    std::size_t pos, len;
    std::string with;
  };
  std::vector<const ReplaceDecision*> order;
  for (const auto& d : decisions) order.push_back(&d);
  std::stable_sort(order.begin(), order.end(),
                   [](const auto* a, const auto* b) { return a->term.size() > b->term.size(); });
  auto lower = text::lower(input);
  std::vector<Hit> hits;
  for (const auto* d : order) {
    auto needle = text::lower(d->term);
    if (needle.empty()) continue;
    auto with = display_for(*d, record_for(records, d->term));
    for (auto pos = text::find_word(lower, needle); pos; pos = text::find_word(lower, needle, *pos + needle.size())) {
      bool overlaps = std::any_of(hits.begin(), hits.end(), [&](const Hit& h) {
        return *pos < h.pos + h.len && h.pos < *pos + needle.size();
      });
      if (!overlaps) hits.push_back({*pos, needle.size(), with});
    }
  }
  std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) { return a.pos < b.pos; });
  std::string out;
  std::size_t cursor = 0;
  for (const auto& h : hits) {
    out.append(input.substr(cursor, h.pos - cursor));
    out += h.with;
    cursor = h.pos + h.len;
  }
  out.append(input.substr(cursor));
  return out;
}

FinalTaskList finalize_task_list(const plan::TaskPlan& plan, const std::vector<ReplaceDecision>& decisions,
                                 const std::vector<vision::GroundingRecord>& records) {
  FinalTaskList out;
  out.goal = rewrite_terms(plan.goal, decisions, records);
  for (const auto& st : plan.subtasks) {
    auto rewritten = strip_annotations(rewrite_terms(st.text, decisions, records));
    std::vector<std::string> slots;
    for (const auto& s : st.slots) {
      auto it = std::find_if(decisions.begin(), decisions.end(), [&](const auto& d) { return d.term == s; });
      slots.push_back(it != decisions.end() && it->replacement ? *it->replacement : s);
    }
    // Repair: the rewritten line must still parse to one subtask.
    auto line = "1. " + rewritten + " /(" + text::join(slots, ", ") + ")/";
    auto parsed = plan::parse_plan(line);
    plan::Subtask fixed;
    if (auto* p = std::get_if<plan::TaskPlan>(&parsed); p && p->subtasks.size() == 1) {
      fixed = p->subtasks.front();
    } else {
      fixed.verb = st.verb;
      fixed.text = rewritten;
      fixed.slots = slots;
    }
    fixed.index = static_cast<int>(out.subtasks.size()) + 1;
    out.subtasks.push_back(std::move(fixed));
  }
  return out;
}

std::vector<std::string> FinalTaskList::prompts() const {
  std::vector<std::string> out;
  for (const auto& s : subtasks) out.push_back(s.text);
  return out;
}

std::string build_execution_prompt(const FinalTaskList& list, std::size_t current, bool augment) {
  if (!augment || list.subtasks.empty()) return list.goal;
  if (current >= list.subtasks.size()) throw Error(ErrorCode::invalid_input, "current subtask out of range");
  return "now do '" + list.subtasks[current].text + "', the whole task is '" + text::join(list.prompts(), "; ") +
         "'";
}

std::string build_verifier_prompt(std::string_view verb, std::string_view subtask, std::string_view object_name,
                                  std::string_view location_name, std::string_view raw_part,
                                  std::string_view title_prefix) {
  std::string prefix;
  if (!title_prefix.empty()) prefix = std::string(title_prefix) + " - ";
  prefix += "Observe the inputs (two videos or two image-flow videos). ";
  prefix += "The subtask robot arm is currently working on: '" + std::string(subtask) + "'. ";
  const std::string answer = "Answer 'Yes' or 'No'.";
  if (verb == "pick up")
    return prefix + " Based *Only* on the provided media, has '" + std::string(object_name) +
           "' or anything else been grasped and lifted off any surface by the end? " + answer;
  if (verb == "place")
    return prefix + " Based *Only* on the provided media, has '" + std::string(object_name) +
           "' or anything else been placed '" + std::string(location_name) + "' and is the gripper away? " + answer;
  if (verb == "turn on" || verb == "turn off" || verb == "open" || verb == "close") {
    std::string target(raw_part.empty() ? object_name : raw_part);
    std::string action_text = verb == "turn on"    ? "turned on (powered up)"
                              : verb == "turn off" ? "turned off (powered down)"
                              : verb == "open"     ? "fully opened"
                                                   : "fully closed";
    return prefix + " Based *Only* on the provided media, has '" + target + "' or anything else been " +
           action_text + " by the end? " + answer;
  }
  return prefix + " Based *Only* on the provided media, has the instructed action been completed successfully by the end? " +
         answer;
}

std::string build_verifier_prompt(const plan::Subtask& st, std::string_view title_prefix) {
  auto verb = plan::command_word(st.verb);
  std::string object = st.slots.empty() ? std::string() : st.slots[0];
  std::string location = st.slots.size() > 1 ? st.slots[1] : std::string();
  std::string raw_part;
  auto lower = text::lower(st.text);
  if (text::starts_with_word(lower, verb)) raw_part = text::trim(std::string_view(st.text).substr(verb.size()));
  if (st.verb == plan::Verb::place_on || st.verb == plan::Verb::place_in) {
    if (auto pos = object.empty() ? std::nullopt : text::find_word(lower, text::lower(object))) {
      auto rest = text::trim(std::string_view(st.text).substr(*pos + object.size()));
      if (!rest.empty()) location = rest;
    }
  }
  return build_verifier_prompt(verb, st.text, object, location, raw_part, title_prefix);
}

}  // namespace oodagent::language
