#ifndef SMURF_ERRORS_HPP
#define SMURF_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace smurf {

// Raised when a sampler or estimator leaves its trusted numeric range
// (e.g. a variance trace excursion outside [1e-8, 1e3]).  Callers that
// drive whole fits should treat this as "abort the run", not as bad input.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised for unreadable/unwritable files and malformed on-disk payloads.
class io_error : public std::runtime_error {
 public:
  explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace smurf

#endif
