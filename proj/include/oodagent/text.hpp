#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace oodagent::text {

std::string trim(std::string_view s);
std::string lower(std::string_view s);
// Lowercase, trim, and collapse internal whitespace runs to a single space.
std::string normalize(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::vector<std::string> split_lines(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
bool starts_with_word(std::string_view s, std::string_view prefix);

// Position of `needle` in `hay` where both ends fall on word boundaries,
// starting the search at `from`. Case-sensitive.
std::optional<std::size_t> find_word(std::string_view hay, std::string_view needle, std::size_t from = 0);
bool contains_word(std::string_view hay, std::string_view needle);

// Lowercase slug for directory names: spaces become underscores, anything
// outside [a-z0-9_-] is dropped.
std::string slugify(std::string_view s);

// Python-style list literal, e.g. ['apple', 'red bowl'].
std::string py_list(const std::vector<std::string>& items);

}  // namespace oodagent::text
