#ifndef AUGSGD_RNG_HPP
#define AUGSGD_RNG_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace augsgd {

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Sequential generator produced by CounterRng for a single counter value.
/// Satisfies UniformRandomBitGenerator, but the library only uses its own
/// uniform()/normal() so draws are identical across standard libraries.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit constexpr RandomStream(std::uint64_t key) noexcept : state_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return detail::splitmix64(state_);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double uniform(double low, double high) noexcept { return low + (high - low) * uniform(); }

  /// Standard normal via Box-Muller; the second variate is discarded so the
  /// stream position never depends on call history.
  double normal() noexcept {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t below(std::uint64_t n) noexcept { return n == 0 ? 0 : (*this)() % n; }

 private:
  std::uint64_t state_;
};

/// Counter-based generator: draw k of channel c under seed s is a pure
/// function of (s, c, k), so any step of a run can be replayed in isolation.
class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t seed, std::uint64_t channel = 0) noexcept
      : seed_(seed), channel_(channel) {}

  constexpr std::uint64_t seed() const noexcept { return seed_; }
  constexpr std::uint64_t channel() const noexcept { return channel_; }

  RandomStream at(std::uint64_t counter) const noexcept {
    std::uint64_t key = detail::splitmix64(seed_ ^ 0x6a09e667f3bcc909ULL);
    key = detail::splitmix64(key ^ (channel_ * 0xd1342543de82ef95ULL));
    key = detail::splitmix64(key ^ counter);
    return RandomStream(key);
  }

  CounterRng with_channel(std::uint64_t channel) const noexcept { return CounterRng(seed_, channel); }

 private:
  std::uint64_t seed_;
  std::uint64_t channel_;
};

// Channels used by the harness; kept distinct so trials are independent.
namespace channel {
inline constexpr std::uint64_t samples = 0;
inline constexpr std::uint64_t init = 1;
inline constexpr std::uint64_t phi = 2;
inline constexpr std::uint64_t monte_carlo = 3;
inline constexpr std::uint64_t teacher = 4;
inline constexpr std::uint64_t lipschitz = 5;
inline constexpr std::uint64_t corpus = 6;
}  // namespace channel

}  // namespace augsgd

#endif  // AUGSGD_RNG_HPP
