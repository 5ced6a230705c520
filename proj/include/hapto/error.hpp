#ifndef HAPTO_ERROR_HPP
#define HAPTO_ERROR_HPP

#include <stdexcept>
#include <string>

namespace hapto {

enum class ErrorCode {
  invalid_domain,
  invalid_mass,
  invalid_argument,
  no_finite_root,
  invalid_regime,
  alternative_a_forced,
  numerical_integration,
  domain_error,
  non_convergence,
  insufficient_data,
  config_error,
  io_error,
  solver_failure,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_domain: return "invalid-domain";
    case ErrorCode::invalid_mass: return "invalid-mass";
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::no_finite_root: return "no-finite-root";
    case ErrorCode::invalid_regime: return "invalid-regime";
    case ErrorCode::alternative_a_forced: return "alternative-a-forced";
    case ErrorCode::numerical_integration: return "numerical-integration";
    case ErrorCode::domain_error: return "domain-error";
    case ErrorCode::non_convergence: return "non-convergence";
    case ErrorCode::insufficient_data: return "insufficient-data";
    case ErrorCode::config_error: return "config-error";
    case ErrorCode::io_error: return "io-error";
    case ErrorCode::solver_failure: return "solver-failure";
  }
  return "unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hapto

#endif  // HAPTO_ERROR_HPP
