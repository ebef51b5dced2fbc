#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string_view>

namespace lvcx {

inline double norm_cdf(double x) noexcept {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

inline double norm_pdf(double x) noexcept {
  constexpr double inv_sqrt_2pi = 0.3989422804014326779399460599343818684759;
  return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

/// Pairwise (cascade) summation; the association order depends only on the
/// length, so results are identical no matter how the input was produced.
double pairwise_sum(std::span<const double> values) noexcept;

/// 64-bit FNV-1a, used for model/config fingerprints in output headers.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// Shortest decimal text that parses back to the same double.
std::string_view format_double(double v, char (&buf)[32]) noexcept;

}  // namespace lvcx
