#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pizero/es.hpp"

namespace pizero::cli {

/// Binary, little-endian:
///
///   "PZCK" | version u16 | config hash u64 | generation u64 | adam step u64 |
///   [theta] [adam m] [adam v] [beta1 beta2 epsilon]
///
/// where each [..] is a u64 element count followed by that many f64.
struct Checkpoint {
  std::uint64_t config_hash = 0;
  es::WorkerState state;

  friend bool operator==(const Checkpoint& a, const Checkpoint& b) {
    return a.config_hash == b.config_hash && a.state.theta == b.state.theta &&
           a.state.adam == b.state.adam && a.state.generation == b.state.generation;
  }
};

inline constexpr std::uint16_t kCheckpointVersion = 1;

std::vector<unsigned char> encode_checkpoint(const Checkpoint& checkpoint);
/// Throws CheckpointError on bad magic, unsupported version or truncation.
Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes);

/// Written to a temporary file and renamed into place.
void write_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(const std::string& path);

}  // namespace pizero::cli
