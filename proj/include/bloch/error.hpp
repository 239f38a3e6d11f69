#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bloch {

/// Failure categories; the numeric values double as CLI exit codes.
enum class ErrorKind { config = 2, numeric = 3, io = 4 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

  std::string_view tag() const noexcept {
    switch (kind_) {
      case ErrorKind::config: return "E_CONFIG";
      case ErrorKind::numeric: return "E_NUMERIC";
      case ErrorKind::io: return "E_IO";
    }
    return "E_UNKNOWN";
  }

 private:
  ErrorKind kind_;
};

inline Error config_error(const std::string& what) { return {ErrorKind::config, what}; }
inline Error numeric_error(const std::string& what) { return {ErrorKind::numeric, what}; }
inline Error io_error(const std::string& what) { return {ErrorKind::io, what}; }

}  // namespace bloch
