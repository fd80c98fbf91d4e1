#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace skewsim {

// Error categories map 1:1 onto CLI exit codes, see tools/.
enum class ErrorKind {
  config,      // bad parameters, unparseable input          -> exit 3
  window,      // orbit window exceeded / resource exhausted -> exit 4
  numerical,   // NaN or domain failure inside a model       -> exit 4
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

// Thrown when an operation asks for time indices outside the sampled
// two-sided window; carries the radius that would have sufficed.
class OutOfWindowError : public Error {
 public:
  OutOfWindowError(const std::string& what, std::int64_t required_radius)
      : Error(ErrorKind::window, what), required_radius_(required_radius) {}
  std::int64_t required_radius() const { return required_radius_; }

 private:
  std::int64_t required_radius_;
};

class NumericalDomainError : public Error {
 public:
  explicit NumericalDomainError(const std::string& what)
      : Error(ErrorKind::numerical, what) {}
};

}  // namespace skewsim
