#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace pizero::es {

/// One allgather contribution. On the wire (little-endian):
///
///   "PZES" | version u16 | generation u64 | rank u32 | count u32 |
///   count x f64 | crc32 u32
///
/// The CRC covers every preceding byte.
struct WireMessage {
  std::uint64_t generation = 0;
  std::uint32_t rank = 0;
  std::vector<double> values;

  friend bool operator==(const WireMessage&, const WireMessage&) = default;
};

inline constexpr std::uint16_t kWireVersion = 1;
inline constexpr std::size_t kWireHeaderBytes = 4 + 2 + 8 + 4 + 4;
inline constexpr std::size_t kWireTrailerBytes = 4;

std::vector<std::byte> encode_message(const WireMessage& message);
/// Throws ProtocolError on bad magic, version, length or checksum.
WireMessage decode_message(std::span<const std::byte> bytes);

std::uint32_t crc32(std::span<const std::byte> bytes);

}  // namespace pizero::es
