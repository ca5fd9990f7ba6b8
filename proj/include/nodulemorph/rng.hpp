#pragma once

#include <cstdint>
#include <string_view>

namespace nodulemorph {

/// splitmix64 finalizer; used to mix seeds into independent substreams.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives a named substream seed, e.g. derive_seed(master, "smote", fold).
/// The result depends only on its arguments, so any component can be
/// replayed in isolation from the master seed.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view stream,
                          std::uint64_t index = 0) noexcept;

/// xoshiro256** generator. Distributions are implemented here rather than
/// through <random> so that sequences are identical across standard
/// libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform double in [0, 1).
  double uniform() noexcept;
  /// Uniform double in [0, 1] (both ends reachable).
  double uniform_closed() noexcept;
  /// Uniform integer in [0, bound), bound > 0, rejection-sampled.
  std::uint64_t below(std::uint64_t bound) noexcept;
  /// Standard normal via Box-Muller (no cached second value).
  double normal() noexcept;

 private:
  std::uint64_t s_[4];
};

template <typename It>
void shuffle(It first, It last, Rng& rng) {
  auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    auto j = rng.below(i);
    using std::swap;
    swap(first[i - 1], first[j]);
  }
}

}  // namespace nodulemorph
