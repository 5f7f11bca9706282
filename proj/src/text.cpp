#include "oodagent/text.hpp"

#include "oodagent/error.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace oodagent {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_instruction: return "invalid-instruction";
    case ErrorCode::invalid_input: return "invalid-input";
    case ErrorCode::keyword_parse_failure: return "keyword-parse-failure";
    case ErrorCode::palette_exhausted: return "palette-exhausted";
    case ErrorCode::backend_failure: return "backend-failure";
    case ErrorCode::protocol_error: return "protocol-error";
    case ErrorCode::load_failure: return "load-failure";
    case ErrorCode::invalid_suite: return "invalid-suite";
    case ErrorCode::invalid_comparison: return "invalid-comparison";
    case ErrorCode::invalid_plan: return "invalid-plan";
    case ErrorCode::config_error: return "config-error";
  }
  return "unknown";
}

std::optional<ErrorCode> error_code_from(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(ErrorCode::config_error); ++i)
    if (to_string(static_cast<ErrorCode>(i)) == name) return static_cast<ErrorCode>(i);
  return std::nullopt;
}

namespace text {

namespace {
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_word(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_' || c == '-';
}
}  // namespace

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string normalize(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char c : s) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

std::vector<std::string> split_lines(std::string_view s) {
  auto lines = split(s, '\n');
  for (auto& l : lines) {
    if (!l.empty() && l.back() == '\r') l.pop_back();
  }
  return lines;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

bool starts_with_word(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size() || s.substr(0, prefix.size()) != prefix) return false;
  return s.size() == prefix.size() || !is_word(s[prefix.size()]);
}

std::optional<std::size_t> find_word(std::string_view hay, std::string_view needle, std::size_t from) {
  if (needle.empty()) return std::nullopt;
  while (from <= hay.size()) {
    auto pos = hay.find(needle, from);
    if (pos == std::string_view::npos) return std::nullopt;
    bool left_ok = pos == 0 || !is_word(hay[pos - 1]);
    std::size_t end = pos + needle.size();
    bool right_ok = end == hay.size() || !is_word(hay[end]);
    if (left_ok && right_ok) return pos;
    from = pos + 1;
  }
  return std::nullopt;
}

bool contains_word(std::string_view hay, std::string_view needle) {
  return find_word(hay, needle).has_value();
}

std::string slugify(std::string_view s) {
  std::string out;
  for (char c : normalize(s)) {
    if (c == ' ') {
      out.push_back('_');
    } else if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') {
      out.push_back(c);
    }
  }
  return out.empty() ? std::string("term") : out;
}

std::string py_list(const std::vector<std::string>& items) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) os << ", ";
    os << '\'' << items[i] << '\'';
  }
  os << ']';
  return os.str();
}

}  // namespace text
}  // namespace oodagent
