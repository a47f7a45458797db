#include "eaem/rng.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

namespace eaem::rng {

std::uint64_t mix64(std::uint64_t x) {
  SplitMix64 sm(x);
  return sm.next();
}

double Xoshiro256ss::normal() {
  const double u1 = uniform_positive();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Xoshiro256ss make_stream(std::uint64_t seed, std::uint64_t stream_index) {
  SplitMix64 sm(seed ^ mix64(stream_index));
  std::array<std::uint64_t, 4> state{};
  for (auto& word : state)
    word = sm.next();
  return Xoshiro256ss(state);
}

std::uint64_t generate_seed() {
  std::random_device device;
  const auto ticks = static_cast<std::uint64_t>(
      std::chrono::high_resolution_clock::now().time_since_epoch().count());
  const std::uint64_t entropy = (static_cast<std::uint64_t>(device()) << 32) ^ device();
  return mix64(ticks ^ entropy);
}

} // namespace eaem::rng
