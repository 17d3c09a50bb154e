#pragma once

#include <cstdint>
#include <random>

namespace smdt {

/// Engine used everywhere. mt19937_64 output is fully specified by the
/// standard; distributions come from Boost.Random, whose algorithms are fixed
/// across platforms (unlike the std:: distributions).
using Rng = std::mt19937_64;

/// SplitMix64 finalizer (Steele, Lea & Flood). Used to decorrelate seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent sub-streams of one scenario seed.
enum class Stream : std::uint64_t {
  kSpawn = 1,
  kVehicleClass = 2,
  kOriginDestination = 3,
  kEventPlacement = 4,
  kSsmsDelivery = 5,
  kInfoDelivery = 6,
  kServiceLatency = 7,
  kMonteCarlo = 8,
};

constexpr std::uint64_t derive_seed(std::uint64_t base, Stream stream) {
  return splitmix64(base ^ splitmix64(static_cast<std::uint64_t>(stream)));
}

inline Rng make_rng(std::uint64_t base, Stream stream) { return Rng(derive_seed(base, stream)); }

/// Seed of sweep point `point`, replicate `replicate`:
/// seed_base XOR splitmix64((point << 32) | replicate).
constexpr std::uint64_t sweep_seed(std::uint64_t seed_base, std::uint32_t point, std::uint32_t replicate) {
  return seed_base ^ splitmix64((static_cast<std::uint64_t>(point) << 32) | replicate);
}

}  // namespace smdt
