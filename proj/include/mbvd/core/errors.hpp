#pragma once

#include <stdexcept>
#include <string>

namespace mbvd {

// Caller violated a documented precondition (bad shape, masked action, k < 1, ...).
class UsageError : public std::invalid_argument {
 public:
  explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

// Exhaustive enumeration would exceed the supported problem size.
class CapacityError : public std::runtime_error {
 public:
  explicit CapacityError(const std::string& what) : std::runtime_error(what) {}
};

// Missing, truncated or malformed file (checkpoint, episode, config).
class LoadError : public std::runtime_error {
 public:
  explicit LoadError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mbvd
