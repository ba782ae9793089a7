#include "pizero/rng.hpp"

#include <cmath>
#include <numbers>

namespace pizero {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

inline std::array<std::uint32_t, 4> philox_round(const std::array<std::uint32_t, 4>& ctr,
                                                 const std::array<std::uint32_t, 2>& key) {
  std::uint32_t hi0, lo0, hi1, lo1;
  mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
  mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
  return {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

inline std::array<std::uint32_t, 2> split(std::uint64_t v) {
  return {static_cast<std::uint32_t>(v), static_cast<std::uint32_t>(v >> 32)};
}

// 53-bit uniform in (0, 1]; never zero so the logarithm below is finite.
inline double open_unit(std::uint32_t lo, std::uint32_t hi) {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return static_cast<double>(bits + 1) * 0x1.0p-53;
}

inline double closed_unit(std::uint32_t lo, std::uint32_t hi) {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return static_cast<double>(bits) * 0x1.0p-53;
}

// One Philox block yields one Box-Muller pair.
inline void gaussian_pair(std::uint64_t seed, std::uint64_t stream, std::uint64_t block,
                          double& first, double& second) {
  const auto b = split(block);
  const auto s = split(stream);
  const auto bits = philox4x32({b[0], b[1], s[0], s[1]}, split(seed));
  const double radius = std::sqrt(-2.0 * std::log(open_unit(bits[0], bits[1])));
  const double angle = 2.0 * std::numbers::pi * closed_unit(bits[2], bits[3]);
  first = radius * std::cos(angle);
  second = radius * std::sin(angle);
}

constexpr std::uint64_t kSequentialStreamTag = 0x53455155454e5449ull;

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) {
  counter = philox_round(counter, key);
  for (int round = 1; round < 10; ++round) {
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
    counter = philox_round(counter, key);
  }
  return counter;
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9E3779B97F4A7C15ull * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

void fill_gaussian(std::uint64_t seed, std::uint64_t stream, std::size_t offset,
                   std::span<double> out) {
  std::size_t i = 0;
  std::size_t index = offset;
  double first, second;
  if (index % 2 == 1 && i < out.size()) {
    gaussian_pair(seed, stream, index / 2, first, second);
    out[i++] = second;
    ++index;
  }
  for (; i + 1 < out.size(); i += 2, index += 2) {
    gaussian_pair(seed, stream, index / 2, first, second);
    out[i] = first;
    out[i + 1] = second;
  }
  if (i < out.size()) {
    gaussian_pair(seed, stream, index / 2, first, second);
    out[i] = first;
  }
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : key_(split(seed)), stream_(mix_seed(stream, kSequentialStreamTag)) {}

void Rng::refill() {
  const auto b = split(block_++);
  const auto s = split(stream_);
  buffer_ = philox4x32({b[0], b[1], s[0], s[1]}, key_);
  used_ = 0;
}

std::uint64_t Rng::next_u64() {
  if (used_ > 2) refill();
  const std::uint64_t lo = buffer_[used_];
  const std::uint64_t hi = buffer_[used_ + 1];
  used_ += 2;
  return (hi << 32) | lo;
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::size_t Rng::below(std::size_t n) {
  const std::uint64_t bound = n;
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t x = next_u64();
    if (x >= threshold) return static_cast<std::size_t>(x % bound);
  }
}

double Rng::normal() {
  if (has_spare_normal_) {
    has_spare_normal_ = false;
    return spare_normal_;
  }
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_normal_ = radius * std::sin(angle);
  has_spare_normal_ = true;
  return radius * std::cos(angle);
}

}  // namespace pizero
