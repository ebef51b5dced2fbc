#include <doctest.h>

#include <cmath>
#include <set>

#include "lvcx/rng.hpp"

using namespace lvcx;

TEST_CASE("philox known-answer vectors") {
  // Reference vectors published with the Random123 library.
  auto zero = Philox4x32::generate({0, 0, 0, 0}, {0, 0});
  CHECK(zero == Philox4x32::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});

  auto pi = Philox4x32::generate({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                 {0xa4093822u, 0x299f31d0u});
  CHECK(pi == Philox4x32::Counter{0xd16cfe09u, 0x94fdcceb, 0x5001e420u, 0x24126ea1u});

  auto ones = Philox4x32::generate({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                   {0xffffffffu, 0xffffffffu});
  CHECK(ones == Philox4x32::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
}

TEST_CASE("path streams are deterministic and distinct") {
  PathRng a(7, 123, Substream::brownian);
  PathRng b(7, 123, Substream::brownian);
  for (int i = 0; i < 100; ++i) CHECK(a.normal() == b.normal());

  std::set<double> firsts;
  firsts.insert(PathRng(7, 123, Substream::brownian).uniform());
  firsts.insert(PathRng(7, 123, Substream::auxiliary).uniform());
  firsts.insert(PathRng(7, 123, Substream::branch).uniform());
  firsts.insert(PathRng(7, 124, Substream::brownian).uniform());
  firsts.insert(PathRng(8, 123, Substream::brownian).uniform());
  firsts.insert(PathRng(7, 123ull + (1ull << 32), Substream::brownian).uniform());
  CHECK(firsts.size() == 6);
}

TEST_CASE("uniform and normal moments") {
  PathRng r(42, 0, Substream::brownian);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    su += u;
  }
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    sn += z;
    sn2 += z * z;
  }
  CHECK(std::abs(su / n - 0.5) < 4 * std::sqrt(1.0 / 12 / n));
  CHECK(std::abs(sn / n) < 4 / std::sqrt(double(n)));
  CHECK(std::abs(sn2 / n - 1.0) < 4 * std::sqrt(2.0 / n));
}
