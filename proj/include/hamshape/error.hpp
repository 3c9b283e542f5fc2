#pragma once

#include <stdexcept>
#include <string>

namespace hamshape {

// Broad failure classes; the CLI maps each one to a distinct exit code.
enum class ErrorKind {
  kConfig,         // malformed input, rejected before any numerics run
  kNumerical,      // solver failure, trajectory escaped, no periodic return
  kAdmissibility,  // level function violates a constraint of the design family
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& what)
      : std::runtime_error(what), kind_(kind), code_(std::move(code)) {}

  ErrorKind kind() const noexcept { return kind_; }
  // Short machine-readable tag, e.g. "no_zero_set" or "no_return".
  const std::string& code() const noexcept { return code_; }

 private:
  ErrorKind kind_;
  std::string code_;
};

inline Error config_error(const std::string& what) {
  return Error(ErrorKind::kConfig, "config", what);
}

inline Error numerical_error(std::string code, const std::string& what) {
  return Error(ErrorKind::kNumerical, std::move(code), what);
}

inline Error admissibility_error(std::string code, const std::string& what) {
  return Error(ErrorKind::kAdmissibility, std::move(code), what);
}

}  // namespace hamshape
