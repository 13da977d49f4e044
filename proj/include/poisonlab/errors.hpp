#pragma once

#include <stdexcept>
#include <string>

namespace poisonlab {

/// Bad user-facing configuration: unknown env/agent/attack id, missing
/// target policy, incompatible action space.
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Data fails a structural invariant (transition rows not stochastic,
/// budget constants inconsistent, ...).
class ValidationError : public std::runtime_error {
  public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Operation exists but not for this input (stochastic policy where a
/// deterministic one is required, tabularization of a continuous env).
class UnsupportedError : public std::runtime_error {
  public:
    explicit UnsupportedError(const std::string& what) : std::runtime_error(what) {}
};

/// Exact enumeration would exceed the blowup guard.
class SizeError : public std::runtime_error {
  public:
    explicit SizeError(const std::string& what) : std::runtime_error(what) {}
};

/// A corruption-count bound has a non-positive distance margin.
class BoundUndefinedError : public std::runtime_error {
  public:
    explicit BoundUndefinedError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace poisonlab
