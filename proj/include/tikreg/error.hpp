#pragma once

#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>

namespace tikreg {

/// Vectors from different operators (or from the wrong side of one) were mixed.
class FrameMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Data has mass outside the closure of the retained range.
class DataNotInRange : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A sweep produced a grid that cannot be fitted (too short, zero errors, ...).
class DegenerateGrid : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The hypothesis of a bound is not met by the supplied measure.
class PremiseViolation : public std::domain_error {
 public:
  PremiseViolation(const std::string& what, double witness)
      : std::domain_error(what), witness_(witness) {}
  double witness() const noexcept { return witness_; }

 private:
  double witness_;
};

using WarningSink = std::function<void(const std::string&)>;

inline WarningSink& warning_sink() {
  static WarningSink sink = [](const std::string& msg) {
    std::cerr << "tikreg: warning: " << msg << '\n';
  };
  return sink;
}

inline void warn(const std::string& msg) {
  if (warning_sink()) warning_sink()(msg);
}

}  // namespace tikreg
