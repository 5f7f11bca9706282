#include "oodagent/error.hpp"
#include "oodagent/memory.hpp"
#include "oodagent/text.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <unordered_map>

namespace oodagent {

namespace {

enum class Pos { noun, adj, verb, det, prep, pron, conj, part, num, other };

// Closed-class words plus the open-class words of the task domain that are
// not nouns. Anything else is tagged by suffix, defaulting to noun.
const std::unordered_map<std::string, Pos>& lexicon() {
  static const std::unordered_map<std::string, Pos> table = [] {
    std::unordered_map<std::string, Pos> t;
    for (const char* w : {"the", "a", "an", "this", "that", "these", "those", "both", "all", "each", "every",
                          "some", "any", "its", "their"})
      t[w] = Pos::det;
    for (const char* w : {"on", "in", "into", "onto", "inside", "of", "to", "at", "near", "next", "with",
                          "from", "under", "behind", "between", "beside", "above", "below", "over", "by",
                          "toward", "towards", "across", "against", "around", "outside"})
      t[w] = Pos::prep;
    for (const char* w : {"put", "pick", "place", "open", "close", "turn", "push", "pull", "lift", "grab",
                          "move", "take", "stack", "set", "slide", "rotate", "is", "are", "be", "go",
                          "bring", "get", "leave", "keep", "switch", "drop", "hold", "find"})
      t[w] = Pos::verb;
    for (const char* w : {"it", "them", "they", "he", "she", "you", "one"}) t[w] = Pos::pron;
    for (const char* w : {"and", "or", "but", "then", "while"}) t[w] = Pos::conj;
    for (const char* w : {"up", "down", "off", "away", "out", "back", "there", "here", "together"})
      t[w] = Pos::part;
    for (const char* w : {"black", "white", "red", "green", "blue", "yellow", "orange", "purple", "pink",
                          "brown", "gray", "grey", "silver", "golden", "wooden", "metal", "plastic",
                          "glass", "ceramic", "small", "large", "big", "little", "tall", "short", "round",
                          "square", "empty", "full", "top", "bottom", "middle", "upper", "lower", "left",
                          "right", "front", "rear", "first", "second", "third", "last", "other", "same",
                          "new", "old", "dark", "light", "clean", "dirty", "flat", "shallow", "deep"})
      t[w] = Pos::adj;
    return t;
  }();
  return table;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() > suffix.size() + 2 && s.substr(s.size() - suffix.size()) == suffix;
}

Pos tag_word(const std::string& w) {
  if (auto it = lexicon().find(w); it != lexicon().end()) return it->second;
  if (std::all_of(w.begin(), w.end(), [](unsigned char c) { return std::isdigit(c); })) return Pos::num;
  if (ends_with(w, "ly")) return Pos::other;
  if (ends_with(w, "ing") || ends_with(w, "ed")) return Pos::verb;
  if (ends_with(w, "ous") || ends_with(w, "ful") || ends_with(w, "ish") || ends_with(w, "ive")) return Pos::adj;
  return Pos::noun;
}

std::vector<std::string> tokenize(std::string_view sentence) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text::lower(sentence)) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '\'') {
      cur.push_back(c);
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace

KnownList build_known_list(const std::vector<std::string>& corpus) {
  if (corpus.empty()) throw Error(ErrorCode::invalid_input, "known-list corpus is empty");
  std::set<std::string> labels;
  for (const auto& sentence : corpus) {
    auto tokens = tokenize(sentence);
    if (tokens.empty()) throw Error(ErrorCode::invalid_input, "known-list corpus has an empty sentence");
    std::vector<Pos> tags;
    for (const auto& t : tokens) tags.push_back(tag_word(t));
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (tags[i] != Pos::noun) continue;
      labels.insert(tokens[i]);
      if (i > 0 && (tags[i - 1] == Pos::adj || tags[i - 1] == Pos::noun))
        labels.insert(tokens[i - 1] + " " + tokens[i]);
    }
  }
  return KnownList({labels.begin(), labels.end()});
}

}  // namespace oodagent
