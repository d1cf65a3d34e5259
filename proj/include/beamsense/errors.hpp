#pragma once

#include <stdexcept>
#include <string>

namespace beamsense {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mode index beyond the configured truncation.
class TruncationError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent beam or detector geometry.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Caller violated an operation precondition (unnormalized shape, mismatched grids, ...).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Modulation outside the linearized small-signal window.
class ValidityError : public Error {
 public:
  ValidityError(const std::string& what, double ratio) : Error(what), ratio_(ratio) {}
  double ratio() const noexcept { return ratio_; }

 private:
  double ratio_;
};

/// Quantity that only exists as a limit (N = 0, zero SNR, ...).
class UndefinedLimitError : public Error {
 public:
  using Error::Error;
};

/// Floating-point failure: non-PSD covariance, non-finite result.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Scenario parse or validation failure. `where` names the line or the section/key.
class ScenarioError : public Error {
 public:
  ScenarioError(const std::string& where, const std::string& what)
      : Error(where + ": " + what), where_(where) {}
  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

}  // namespace beamsense
