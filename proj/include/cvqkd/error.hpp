#pragma once

#include <stdexcept>
#include <string>

namespace cvqkd {

/// Base class for all errors raised by the toolkit.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// Shot-noise calibration traces are unusable (vacuum not above electronic noise, ...).
class CalibrationError : public Error {
public:
  using Error::Error;
};

/// No dominant pilot tone in the search band.
class PilotLost : public Error {
public:
  using Error::Error;
};

/// Cross-correlation peak is ambiguous.
class SyncFailure : public Error {
public:
  SyncFailure(const std::string& what, double peak_to_sidelobe_db)
      : Error(what), peak_to_sidelobe_db_(peak_to_sidelobe_db) {}
  double peak_to_sidelobe_db() const noexcept { return peak_to_sidelobe_db_; }

private:
  double peak_to_sidelobe_db_;
};

/// ADC clipped more than the allowed fraction of samples.
class ClippingError : public Error {
public:
  ClippingError(const std::string& what, double rate) : Error(what), rate_(rate) {}
  double rate() const noexcept { return rate_; }

private:
  double rate_;
};

/// Covariance matrix is not a physical (bona fide) state.
class NotBonaFide : public Error {
public:
  using Error::Error;
};

/// Run configuration is malformed or fails schema validation.
class ConfigError : public Error {
public:
  using Error::Error;
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidArgument(msg);
}

}  // namespace detail
}  // namespace cvqkd
