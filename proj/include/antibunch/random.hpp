#pragma once
#include <cmath>
#include <cstdint>
#include <random>

namespace antibunch {

using Engine = std::mt19937_64;

/// Independent substream tags. Each consumer of randomness derives its own
/// engine from (root seed, tag, index) so results do not depend on call order.
enum class StreamTag : std::uint64_t {
  emission = 1,
  detection = 2,
  background = 3,
  scan = 4,
  trials = 5,
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index = 0);
inline std::uint64_t derive_seed(std::uint64_t seed, StreamTag tag, std::uint64_t index = 0) {
  return derive_seed(seed, static_cast<std::uint64_t>(tag), index);
}

/// Uniform in [0, 1) from the top 53 bits of one engine draw.
inline double uniform01(Engine& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

/// Exponential waiting time with the given rate; one engine draw.
inline double exponential(Engine& eng, double rate) {
  return -std::log1p(-uniform01(eng)) / rate;
}

}  // namespace antibunch
