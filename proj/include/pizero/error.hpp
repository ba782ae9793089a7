#pragma once

#include <stdexcept>
#include <string>

namespace pizero {

/// Invalid dimensions, out-of-range indices, or malformed configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed, duplicated, or out-of-order message between ES workers,
/// or workers whose parameters have diverged.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A peer did not deliver its message before the deadline.
class TransportTimeout : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pizero
