#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <initializer_list>

namespace cca {

/// SplitMix64 finalizer. Used for every seed derivation so that streams are
/// reproducible across platforms and standard library implementations.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Order-sensitive combination of a base seed with any number of indices.
constexpr std::uint64_t mix_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) noexcept {
  std::uint64_t h = splitmix64(base);
  for (std::uint64_t p : parts) h = splitmix64(h ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

/// Maps 64 random bits to the open interval (0, 1) with 53-bit resolution.
constexpr double to_open_unit(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Counter-based stream: the n-th draw depends only on (key, n).
class SeedStream {
 public:
  constexpr explicit SeedStream(std::uint64_t key) noexcept : key_(key) {}

  constexpr std::uint64_t bits(std::uint64_t n) const noexcept { return splitmix64(key_ ^ splitmix64(n)); }
  constexpr double unit(std::uint64_t n) const noexcept { return to_open_unit(bits(n)); }

 private:
  std::uint64_t key_;
};

inline std::uint64_t hash_doubles(const double* data, std::size_t n) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) h = splitmix64(h ^ std::bit_cast<std::uint64_t>(data[i]));
  return h;
}

}  // namespace cca
