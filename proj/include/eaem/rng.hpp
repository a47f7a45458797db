#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace eaem::rng {

/// SplitMix64 generator. Used only to expand a (seed, stream) pair into the
/// 256-bit state of a Xoshiro256ss stream.
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t state) : state_(state) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

private:
  std::uint64_t state_;
};

/// Stateless SplitMix64 output function applied to a single word.
std::uint64_t mix64(std::uint64_t x);

/// xoshiro256** 1.0. Satisfies UniformRandomBitGenerator.
class Xoshiro256ss {
public:
  using result_type = std::uint64_t;

  explicit Xoshiro256ss(const std::array<std::uint64_t, 4>& state) : s_(state) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform double on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform double on (0, 1]; safe as a logarithm argument.
  double uniform_positive() { return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53; }

  /// Standard normal variate, Box-Muller cosine branch (two uniforms per call).
  double normal();

  const std::array<std::uint64_t, 4>& state() const { return s_; }

private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::array<std::uint64_t, 4> s_;
};

/// Work-unit stream: SplitMix64 seeded with seed ^ mix64(stream_index) fills
/// the four state words in order.
Xoshiro256ss make_stream(std::uint64_t seed, std::uint64_t stream_index);

/// Stream domains keep independent consumers (pixels of the entangled run,
/// pixels of the conventional run, atom configurations, ...) disjoint under a
/// shared seed. The domain occupies the top 16 bits of the stream index.
enum class Domain : std::uint64_t {
  generic = 0,
  atom_configuration = 1,
  protocol_block = 2,
  entangled_pixel = 3,
  conventional_pixel = 4,
  angle_sampling = 5,
};

inline std::uint64_t stream_index(Domain domain, std::uint64_t index) {
  return (static_cast<std::uint64_t>(domain) << 48) | (index & ((1ULL << 48) - 1));
}

inline Xoshiro256ss make_stream(std::uint64_t seed, Domain domain, std::uint64_t index) {
  return make_stream(seed, stream_index(domain, index));
}

/// Seed derived from the wall clock and a random device, for runs without --seed.
std::uint64_t generate_seed();

} // namespace eaem::rng
