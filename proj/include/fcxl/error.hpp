#pragma once

#include <stdexcept>
#include <string>

namespace fcxl {

enum class ErrorCategory {
  invalid_argument,
  dataset,
  backend,
  io,
};

/// Exception carrying a stable, machine-readable code such as
/// "empty-mask-bbox" or "remote-dim-mismatch".
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message,
        ErrorCategory category = ErrorCategory::invalid_argument)
      : std::runtime_error(code + ": " + message),
        code_(std::move(code)),
        category_(category) {}

  const std::string& code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_; }

 private:
  std::string code_;
  ErrorCategory category_;
};

class BackendError : public Error {
 public:
  BackendError(std::string code, const std::string& message)
      : Error(std::move(code), message, ErrorCategory::backend) {}
};

class DatasetError : public Error {
 public:
  DatasetError(std::string code, const std::string& message)
      : Error(std::move(code), message, ErrorCategory::dataset) {}
};

}  // namespace fcxl
