#pragma once

#include <stdexcept>
#include <string>

namespace oulab {

// Error taxonomy shared by the whole library. The CLI maps kinds to exit
// codes: config/invalid_input -> 2, everything numerical -> 3.
enum class ErrorKind {
    invalid_input,   // non-finite / malformed arguments
    model,           // model violates a structural assumption (singular U, ...)
    conditioning,    // factorization failed or matrix numerically singular
    accuracy,        // quadrature refinement did not converge
    bandwidth,       // shell/bandwidth too small for the Monte Carlo resolution
    domain,          // point outside the admissible set
    config,          // bad config file / CLI arguments
    internal,        // internal consistency check tripped
};

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

  private:
    ErrorKind kind_;
};

inline const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::invalid_input: return "invalid_input";
        case ErrorKind::model: return "model";
        case ErrorKind::conditioning: return "conditioning";
        case ErrorKind::accuracy: return "accuracy";
        case ErrorKind::bandwidth: return "bandwidth";
        case ErrorKind::domain: return "domain";
        case ErrorKind::config: return "config";
        case ErrorKind::internal: return "internal";
    }
    return "unknown";
}

}  // namespace oulab
