#include <doctest.h>

#include <cmath>
#include <numbers>

#include "lvcx/dlocalvol.hpp"
#include "lvcx/error.hpp"

using namespace lvcx;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode{};
}

}  // namespace

TEST_CASE("double local variance: identical branches") {
  const DoubleLocalSurface s(MixtureSpec::toy3(), 1e-5);
  for (double x : {-3.0, 0.0, 4.0})
    for (double a : {0.0, 1.0, 7.0}) CHECK(sigma_dloc_sq(s, 0.5, x, a) == 2.0);
  // Without regularisation the branches are still indistinguishable on [0, 1].
  const DoubleLocalSurface s0(MixtureSpec::toy3(), 0.0);
  CHECK(sigma_dloc_sq(s0, 0.5, 1.0, 1.0) == 2.0);
  CHECK(code_of([&] { sigma_dloc_sq(s0, 1.5, 0.0, 3.0); }) == ErrorCode::degenerate);
  CHECK(code_of([] { DoubleLocalSurface(MixtureSpec::toy3(), -1.0); }) == ErrorCode::domain);
}

TEST_CASE("running variance reveals the branch as epsilon shrinks") {
  const DoubleLocalSurface s(MixtureSpec::toy3(), 1e-6);
  // Sigma_+(2.5) = 5.5 with rate 1, Sigma_-(2.5) = 4.5 with rate 3.
  CHECK(std::abs(sigma_dloc_sq(s, 2.5, 0.0, 5.5) - 1.0) < 1e-3);
  CHECK(std::abs(sigma_dloc_sq(s, 2.5, 0.3, 4.5) - 3.0) < 1e-3);
  CHECK(std::abs(sigma_dloc_sq(s, 1.5, -1.0, 3.5) - 3.0) < 1e-3);
  CHECK(std::abs(sigma_dloc_sq(s, 1.5, -1.0, 2.5) - 1.0) < 1e-3);
}

TEST_CASE("equal Gaussian products average the rates") {
  const double eps = 0.01, t = 1.5, sp = 3.5, sm = 2.5, x = 0.7;
  auto log_phi = [&](double s) { return -0.5 * std::log(s) - (x + s / 2) * (x + s / 2) / (2 * s); };
  const double d = log_phi(sp) - log_phi(sm);
  const double a = 0.5 * (sp + sm) - eps * t * d / (sp - sm);
  const DoubleLocalSurface s(MixtureSpec::toy3(), eps);
  CHECK(sigma_dloc_sq(s, t, x, a) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("bound constant") {
  CHECK(bound_constant(0.0, 3.0) == 0.0);
  CHECK(bound_constant(1e-5, 3.0) == doctest::Approx(0.00655529058355247442).epsilon(1e-14));
  CHECK(bound_constant(2 * std::numbers::pi / 3.0, 3.0) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(code_of([] { bound_constant(-1e-5, 3.0); }) == ErrorCode::domain);
  CHECK(code_of([] { bound_constant(1e-5, -3.0); }) == ErrorCode::domain);

  // E[(N(6, eps T) - 6)+] = sqrt(eps T / 2 pi) and E|N(0, eps T)| = 2 sqrt(eps T / 2 pi).
  const double sd = std::sqrt(1e-5 * 3.0);
  double plus = 0, absval = 0;
  const int n = 200000;
  const double h = 16 * sd / n;
  for (int i = 0; i <= n; ++i) {
    const double z = -8 * sd + i * h;
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    const double dens = std::exp(-z * z / (2 * sd * sd)) / (sd * std::sqrt(2 * std::numbers::pi));
    plus += w * std::max(z, 0.0) * dens * h;
    absval += w * std::abs(z) * dens * h;
  }
  CHECK(plus == doctest::Approx(0.00218509686118415814).epsilon(1e-9));
  CHECK(absval == doctest::Approx(2 * 0.00218509686118415814).epsilon(1e-9));
  CHECK(bound_constant(1e-5, 3.0) == doctest::Approx(plus + absval).epsilon(1e-9));
}

TEST_CASE("mixing-state sampler") {
  const auto toy = MixtureSpec::toy3();
  const auto a = sample_mixing_state(toy, 2.0, 1e-4, {5, 1}, 1000);
  const auto b = sample_mixing_state(toy, 2.0, 1e-4, {5, 4}, 1000);
  REQUIRE(a.size() == 1000);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].x == b[i].x);
    CHECK(a[i].a == b[i].a);
    CHECK((a[i].rate == 3.0 || a[i].rate == 1.0));
  }
  CHECK(code_of([&] { sample_mixing_state(toy, 0.0, 1e-4, {5, 1}, 10); }) == ErrorCode::domain);
}

TEST_CASE("binned regression check") {
  const auto toy = MixtureSpec::toy3();
  SUBCASE("flat slice is estimated exactly") {
    const DoubleLocalSurface s(toy, 1e-4);
    const auto samples = sample_mixing_state(toy, 0.5, 1e-4, {11, 1}, 100000);
    const auto rows = regression_check_dloc(s, 0.5, samples, {});
    int populated = 0;
    for (const auto& r : rows)
      if (r.populated) {
        ++populated;
        CHECK(r.estimate == 2.0);
        CHECK(r.analytic == 2.0);
      }
    CHECK(populated > 0);
  }
  SUBCASE("agreement within three binomial standard errors") {
    const DoubleLocalSurface s(toy, 1e-4);
    const auto samples = sample_mixing_state(toy, 2.5, 1e-4, {12, 1}, 1000000);
    const auto rows = regression_check_dloc(s, 2.5, samples, {});
    int populated = 0, ok = 0;
    for (const auto& r : rows)
      if (r.populated) {
        ++populated;
        ok += std::abs(r.estimate - r.analytic) <= 3 * r.std_error + 1e-12;
      }
    REQUIRE(populated > 20);
    CHECK(double(ok) / populated >= 0.95);
  }
  SUBCASE("symmetric bin at t = 1.5") {
    // With a wide a-noise the bin around (x, a) = (-1.5, 3) mixes both branches evenly.
    const double eps = 0.05;
    const DoubleLocalSurface s(toy, eps);
    const auto samples = sample_mixing_state(toy, 1.5, eps, {13, 1}, 400000);
    DlocBins bins;
    bins.x_bins = 1;
    bins.a_bins = 1;
    bins.x_range = {-1.6, -1.4};
    bins.a_range = {2.9, 3.1};
    const auto rows = regression_check_dloc(s, 1.5, samples, bins);
    REQUIRE(rows.size() == 1);
    REQUIRE(rows[0].populated);
    CHECK(std::abs(rows[0].estimate - 2.0) <= 3 * rows[0].std_error + 0.05);
    CHECK(std::abs(rows[0].estimate - rows[0].analytic) <= 3 * rows[0].std_error);
  }
  SUBCASE("errors") {
    const DoubleLocalSurface s(toy, 1e-4);
    const auto samples = sample_mixing_state(toy, 2.5, 1e-4, {14, 1}, 500);
    DlocBins bins;
    bins.min_count = 10000;
    CHECK(code_of([&] { regression_check_dloc(s, 2.5, samples, bins); }) ==
          ErrorCode::insufficient_data);
    DlocBins coarse;
    coarse.x_bins = 2;
    coarse.a_bins = 2;
    const auto csv = dloc_check_csv(regression_check_dloc(s, 2.5, samples, coarse));
    CHECK(csv.rfind("x_lo,x_hi,a_lo,a_hi,n,estimate,analytic,stderr\n", 0) == 0);
  }
}
