#include <doctest.h>

#include <cmath>
#include <string>

#include "lvcx/error.hpp"
#include "lvcx/localvol.hpp"

using namespace lvcx;

namespace {

// Independent extended-precision evaluation for the toy model.
long double toy_sigma_loc_ld(long double t, long double x) {
  auto sig = [](long double t, int branch) {
    const long double r[2][3] = {{2, 3, 1}, {2, 1, 3}};
    long double s = 0;
    for (int k = 0; k < 3; ++k) {
      const long double lo = k, hi = k + 1;
      if (t > lo) s += r[branch][k] * (std::min(t, hi) - lo);
    }
    return s;
  };
  auto rate = [](long double t, int branch) {
    const long double r[2][3] = {{2, 3, 1}, {2, 1, 3}};
    const int k = t <= 1 ? 0 : (t <= 2 ? 1 : 2);
    return r[branch][k];
  };
  long double num = 0, den = 0;
  for (int b = 0; b < 2; ++b) {
    const long double s = sig(t, b);
    const long double phi = std::exp(-(x + s / 2) * (x + s / 2) / (2 * s)) / std::sqrt(s);
    num += rate(t, b) * phi;
    den += phi;
  }
  return num / den;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode{};
}

}  // namespace

TEST_CASE("local variance: frozen high-precision values") {
  const LocalVolSurface s(MixtureSpec::toy3());
  CHECK(sigma_loc_sq(s, 2.0, 0.0) == doctest::Approx(1.75253896724016192).epsilon(1e-14));
  CHECK(sigma_loc_sq(s, 1.5, 0.5) == doctest::Approx(1.86142223451733326).epsilon(1e-14));
  CHECK(sigma_loc_sq(s, 2.5, -1.0) == doctest::Approx(2.10220850642032416).epsilon(1e-14));
}

TEST_CASE("local variance against an extended-precision oracle") {
  const LocalVolSurface s(MixtureSpec::toy3());
  double worst = 0;
  for (double t = 0.05; t <= 3.0; t += 0.05)
    for (double x = -8; x <= 14; x += 0.25) {
      const double want = static_cast<double>(toy_sigma_loc_ld(t, x));
      worst = std::max(worst, std::abs(s(t, x) - want) / want);
    }
  CHECK(worst < 1e-12);
}

TEST_CASE("local variance limits and flat regions") {
  const LocalVolSurface s(MixtureSpec::toy3());
  CHECK(sigma_loc_sq(s, 0.5, 7.0) == 2.0);
  CHECK(sigma_loc_sq(s, 0.0, -3.0) == 2.0);
  CHECK(sigma_loc_sq(s, 1.0, 5.0) == 2.0);
  CHECK(std::abs(sigma_loc_sq(s, 1.5, 50.0) - 3.0) < 1e-6);
  // Both tails are dominated by the branch with the larger cumulative variance.
  CHECK(std::abs(sigma_loc_sq(s, 1.5, -50.0) - 3.0) < 1e-6);
  CHECK(std::abs(sigma_loc_sq(s, 2.5, 50.0) - 1.0) < 1e-6);
  for (double x : {-5.0, 0.0, 3.0, 9.0}) CHECK(std::abs(s(1.0 + 1e-6, x) - 2.0) < 1e-4);
  // Right limit at t = 1: next-interval rates, but still equal cumulative variances.
  CHECK(s(1.0, 9.0, TimeSide::after) == 2.0);
  CHECK(s(2.0, 9.0, TimeSide::after) != s(2.0, 9.0, TimeSide::at));
  // Bounded by the branch rates everywhere.
  for (double t = 1.01; t < 3.0; t += 0.13)
    for (double x = -40; x < 40; x += 0.7) {
      const double v = s(t, x);
      REQUIRE(v >= 1.0);
      REQUIRE(v <= 3.0);
    }
  CHECK(code_of([&] { sigma_loc_sq(s, 3.01, 0.0); }) == ErrorCode::domain);
  CHECK(std::isfinite(s(2.5, 1e4)));
  CHECK(std::isfinite(s(2.5, -1e4)));
}

TEST_CASE("call prices") {
  const auto toy = MixtureSpec::toy3();
  CHECK(call_price_mixture(toy, 1.0, 1e-12).price == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(call_price_mixture(toy, 1e-12, 2.0).price < 1e-15);
  CHECK(call_price_mixture(toy, 0.0, 2.0).price == 0.0);
  CHECK(call_price_mixture(toy, 0.0, 0.5).price == 0.5);
  CHECK(call_price_mixture(toy, 3.0, 1.0).price ==
        doctest::Approx(0.779328638080153207).epsilon(1e-14));
  CHECK(black_scholes_call(6.0, 1.0) == doctest::Approx(0.779328638080153207).epsilon(1e-14));
  CHECK(code_of([&] { call_price_mixture(toy, 1.0, 0.0); }) == ErrorCode::domain);
  CHECK(code_of([&] { call_price_mixture(toy, 1.0, -1.0); }) == ErrorCode::domain);
}

TEST_CASE("finite-difference Dupire matches the closed form") {
  const auto toy = MixtureSpec::toy3();
  const LocalVolSurface s(toy);
  CHECK(std::abs(dupire_sigma_sq(toy, 0.5, 1.0) - 2.0) < 1e-4);
  const double a = dupire_sigma_sq(toy, 1.5, std::exp(0.5));
  CHECK(std::abs(a / s(1.5, 0.5) - 1.0) < 1e-3);
  const double b = dupire_sigma_sq(toy, 2.5, std::exp(-1.0));
  CHECK(std::abs(b / s(2.5, -1.0) - 1.0) < 1e-3);
  // Stencil straddling a breakpoint, and a vanishing convexity far out of the money.
  CHECK(code_of([&] { dupire_sigma_sq(toy, 1.0, 1.0); }) == ErrorCode::domain);
  CHECK(code_of([&] { dupire_sigma_sq(toy, 0.3, std::exp(40.0)); }) ==
        ErrorCode::ill_conditioned);
}

TEST_CASE("surface grid") {
  const LocalVolSurface s(MixtureSpec::toy3());
  const auto flat = surface_grid(s, {0.0, 1.0, 11}, {-2.0, 12.0, 15});
  CHECK(flat.size() == 165);
  for (const auto& p : flat) CHECK(p.sigma2 == 2.0);

  const auto pts = surface_grid(s, {0.0, 3.0, 300}, {-2.0, 12.0, 400}, 3);
  CHECK(pts.size() == 120000);
  CHECK(pts.front().t == 0.0);
  CHECK(pts.back().t == 3.0);
  CHECK(pts.back().x == 12.0);
  CHECK(surface_grid(s, {0.0, 3.0, 300}, {-2.0, 12.0, 400}, 1).at(4321).sigma2 ==
        pts.at(4321).sigma2);

  const auto csv = surface_csv(std::span(flat).first(2));
  CHECK(csv.rfind("t,x,sigma2_loc\n", 0) == 0);
  CHECK(code_of([&] { surface_grid(s, {0.0, 1.0, 0}, {0.0, 1.0, 3}); }) == ErrorCode::domain);
  CHECK(code_of([&] { surface_grid(s, {1.0, 0.0, 3}, {0.0, 1.0, 3}); }) == ErrorCode::domain);
  CHECK(code_of([&] { surface_grid(s, {0.0, 4.0, 3}, {0.0, 1.0, 3}); }) == ErrorCode::domain);
}

TEST_CASE("empirical Lipschitz constant in x") {
  // The surface is smooth in x for t > 1 and flat on [0, 1]; measure the slope on a window.
  const LocalVolSurface s(MixtureSpec::toy3());
  double lip = 0;
  const double h = 1e-3;
  for (double t = 1.001; t <= 3.0; t += 0.0125)
    for (double x = -10; x < 10; x += h) lip = std::max(lip, std::abs(s(t, x + h) - s(t, x)) / h);
  MESSAGE("max |d sigma2_loc / dx| on t in (1, 3], |x| <= 10: " << lip);
  CHECK(std::isfinite(lip));
  CHECK(lip > 0.0);
  CHECK(lip < 10.0);
}
