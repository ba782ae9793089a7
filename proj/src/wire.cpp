#include "pizero/wire.hpp"

#include <bit>
#include <cstring>
#include <string>

#include <zlib.h>

#include "pizero/error.hpp"

namespace pizero::es {

namespace {

constexpr char kMagic[4] = {'P', 'Z', 'E', 'S'};

template <typename T>
void put_le(std::vector<std::byte>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::byte>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
  }
}

template <typename T>
T get_le(std::span<const std::byte> bytes, std::size_t& pos) {
  std::uint64_t value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<std::uint64_t>(bytes[pos + i]) << (8 * i);
  }
  pos += sizeof(T);
  return static_cast<T>(value);
}

}  // namespace

std::uint32_t crc32(std::span<const std::byte> bytes) {
  const auto* data = reinterpret_cast<const Bytef*>(bytes.data());
  return static_cast<std::uint32_t>(::crc32(::crc32(0L, Z_NULL, 0), data,
                                            static_cast<uInt>(bytes.size())));
}

std::vector<std::byte> encode_message(const WireMessage& message) {
  std::vector<std::byte> out;
  out.reserve(kWireHeaderBytes + 8 * message.values.size() + kWireTrailerBytes);
  for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
  put_le<std::uint16_t>(out, kWireVersion);
  put_le<std::uint64_t>(out, message.generation);
  put_le<std::uint32_t>(out, message.rank);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(message.values.size()));
  for (double v : message.values) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  put_le<std::uint32_t>(out, crc32(out));
  return out;
}

WireMessage decode_message(std::span<const std::byte> bytes) {
  if (bytes.size() < kWireHeaderBytes + kWireTrailerBytes) {
    throw ProtocolError("wire message truncated (" + std::to_string(bytes.size()) + " bytes)");
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw ProtocolError("wire message: bad magic");
  std::size_t pos = 4;
  const auto version = get_le<std::uint16_t>(bytes, pos);
  if (version != kWireVersion) {
    throw ProtocolError("wire message: unsupported version " + std::to_string(version));
  }
  WireMessage message;
  message.generation = get_le<std::uint64_t>(bytes, pos);
  message.rank = get_le<std::uint32_t>(bytes, pos);
  const auto count = get_le<std::uint32_t>(bytes, pos);
  if (bytes.size() != kWireHeaderBytes + 8ull * count + kWireTrailerBytes) {
    throw ProtocolError("wire message: length does not match count " + std::to_string(count));
  }
  message.values.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    message.values.push_back(std::bit_cast<double>(get_le<std::uint64_t>(bytes, pos)));
  }
  const std::uint32_t expected = crc32(bytes.first(pos));
  const auto actual = get_le<std::uint32_t>(bytes, pos);
  if (actual != expected) throw ProtocolError("wire message: CRC mismatch");
  return message;
}

}  // namespace pizero::es
