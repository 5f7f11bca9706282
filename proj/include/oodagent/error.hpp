#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace oodagent {

enum class ErrorCode {
  invalid_instruction,
  invalid_input,
  keyword_parse_failure,
  palette_exhausted,
  backend_failure,
  protocol_error,
  load_failure,
  invalid_suite,
  invalid_comparison,
  invalid_plan,
  config_error,
};

std::string_view to_string(ErrorCode code);
// Inverse of to_string; nullopt for an unknown name.
std::optional<ErrorCode> error_code_from(std::string_view name);

// Every failure the library raises carries one of the codes above so callers
// (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  // The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace oodagent
