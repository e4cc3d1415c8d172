#pragma once

#include <cstdint>

namespace lob {

// Counter-based generator: every draw is a pure function of
// (key, counter, tag), so two books can consume bit-identical arrival
// streams without sharing generator state.

namespace detail {

constexpr std::uint64_t splitmix_finalize(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Field tags keep the draws for different purposes independent.
enum class StreamTag : std::uint64_t {
  side = 1,
  price = 2,
  time = 3,
  coupling_choice = 4,
  coupling_side = 5,
  coupling_price = 6,
  coupling_accept = 7,
};

class CounterRng {
 public:
  constexpr explicit CounterRng(std::uint64_t seed) noexcept
      : key_(detail::splitmix_finalize(seed + 0x9e3779b97f4a7c15ull)) {}

  /// 64 random bits for (counter, tag).
  constexpr std::uint64_t bits(std::uint64_t counter, std::uint64_t tag) const noexcept {
    std::uint64_t z = key_ ^ detail::splitmix_finalize(tag * 0xd1b54a32d192ed03ull + 0x8cb92ba72f3d8dd7ull);
    z = detail::splitmix_finalize(z + counter * 0x9e3779b97f4a7c15ull);
    return detail::splitmix_finalize(z ^ (counter >> 32) ^ 0xa0761d6478bd642full);
  }

  constexpr std::uint64_t bits(std::uint64_t counter, StreamTag tag) const noexcept {
    return bits(counter, static_cast<std::uint64_t>(tag));
  }

  /// Uniform on the open interval (0,1): values are (k + 1/2) * 2^-52, so
  /// 0 and 1 are never returned and 1 - u is exact.
  constexpr double uniform(std::uint64_t counter, StreamTag tag) const noexcept {
    return (static_cast<double>(bits(counter, tag) >> 12) + 0.5) * 0x1p-52;
  }

  /// Independent child generator, e.g. one per replica or per sub-experiment.
  constexpr CounterRng split(std::uint64_t key) const noexcept {
    CounterRng child(0);
    child.key_ = detail::splitmix_finalize(key_ ^ detail::splitmix_finalize(key + 0x632be59bd9b4e019ull));
    return child;
  }

  constexpr std::uint64_t key() const noexcept { return key_; }

 private:
  std::uint64_t key_;
};

}  // namespace lob
