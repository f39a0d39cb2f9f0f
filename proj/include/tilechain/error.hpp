#pragma once

#include <stdexcept>
#include <string>

namespace tilechain {

// Machine-readable failure categories. The string form is what the CLI
// prints and what the HTTP layer puts in the `category` field.
enum class ErrorCategory {
  input_not_found,
  invalid_input,
  domain_conflict,
  unknown_domain,
  inconsistent_tiles,
  degenerate_target,
  inference_failed,
  not_found,
  busy,
};

const char* to_string(ErrorCategory category) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& detail)
      : std::runtime_error(detail), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

}  // namespace tilechain
