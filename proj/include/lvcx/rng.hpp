#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>

namespace lvcx {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
/// A pure function of (counter, key): any block can be produced in O(1),
/// which is what lets every path own an independent stream.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) noexcept;
};

/// Independent sub-streams consumed by one simulated path.
enum class Substream : std::uint32_t {
  brownian = 0,  // B, drives the log-price
  auxiliary = 1, // Z, drives the regularised running variance
  branch = 2,    // regime draw / mixing-model sampling
};

/// Standard-normal and uniform variates for one (seed, path, substream)
/// triple. The 256-bit xoshiro256++ state is two Philox blocks keyed by the
/// seed at counters (path, substream, 0|1), so the stream of a path does not
/// depend on which other paths were simulated or on which thread.
class PathRng {
 public:
  PathRng(std::uint64_t seed, std::uint64_t path, Substream sub) noexcept;

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Marsaglia polar method; both outputs of an accepted pair are used.
  double normal() noexcept {
    if (has_cached_) {
      has_cached_ = false;
      return cached_normal_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    cached_normal_ = v * f;
    has_cached_ = true;
    return u * f;
  }

 private:
  // xoshiro256++ (Blackman & Vigna)
  std::uint64_t next() noexcept {
    const std::uint64_t result = std::rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = std::rotl(state_[3], 45);
    return result;
  }

  std::array<std::uint64_t, 4> state_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace lvcx
