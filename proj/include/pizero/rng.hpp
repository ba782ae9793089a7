#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

namespace pizero {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
/// Maps (counter, key) to 128 pseudorandom bits with no hidden state, so any
/// block of any stream can be produced independently on any worker.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// SplitMix64-style combination of two 64-bit words. Used to derive stream
/// ids and child seeds (episode seeds, per-trial seeds, component streams).
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

/// Writes standard-normal variates number [offset, offset + out.size()) of
/// the (seed, stream) sequence into `out`. Variate j depends only on
/// (seed, stream, j), which lets callers split one stream across threads.
void fill_gaussian(std::uint64_t seed, std::uint64_t stream, std::size_t offset,
                   std::span<double> out);

/// Sequential generator on top of Philox, for environments and sampling.
/// Distribution code is hand-written so draws are identical across standard
/// library implementations.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, n). Requires n >= 1.
  std::size_t below(std::size_t n);
  double normal();

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace pizero
