#pragma once

#include <stdexcept>
#include <string>

namespace micc {

// Base class for all library errors. Callers that do not care about the
// exact failure mode can catch this one type.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string &msg) : std::runtime_error(msg) {}
};

// Input values outside the documented domain (e.g. gamma-encoded samples
// outside [0,1], NaNs in pixel data).
class ValueRangeError : public Error {
  public:
    using Error::Error;
};

// Raster dimensions or channel counts do not line up.
class ShapeError : public Error {
  public:
    using Error::Error;
};

// A per-channel division hit an illuminant channel at or below the epsilon
// floor. Records the offending pixel.
class SingularIlluminantError : public Error {
  public:
    SingularIlluminantError(int x, int y, const std::string &msg)
        : Error(msg), x_(x), y_(y) {}
    int x() const { return x_; }
    int y() const { return y_; }

  private:
    int x_;
    int y_;
};

// An aggregate was requested over zero valid samples/pixels.
class EmptyDomainError : public Error {
  public:
    using Error::Error;
};

// Fewer gray candidates than requested clusters.
class DegenerateClusteringError : public Error {
  public:
    using Error::Error;
};

// A segment holds fewer pixels than the requested seed count.
class InsufficientRegionError : public Error {
  public:
    using Error::Error;
};

// A serialized artifact violates its documented format.
class FormatError : public Error {
  public:
    using Error::Error;
};

// Inconsistent or invalid run configuration.
class ConfigError : public Error {
  public:
    using Error::Error;
};

// Filesystem / decoding failures.
class IoError : public Error {
  public:
    using Error::Error;
};

} // namespace micc
