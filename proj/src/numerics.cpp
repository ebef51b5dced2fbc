#include "lvcx/numerics.hpp"

#include <charconv>

namespace lvcx {

double pairwise_sum(std::span<const double> values) noexcept {
  constexpr std::size_t kLeaf = 32;
  if (values.size() <= kLeaf) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string_view format_double(double v, char (&buf)[32]) noexcept {
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, static_cast<std::size_t>(res.ptr - buf)};
}

}  // namespace lvcx
