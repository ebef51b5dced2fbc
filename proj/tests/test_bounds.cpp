#include <doctest.h>

#include <cmath>
#include <limits>

#include "lvcx/bounds.hpp"
#include "lvcx/error.hpp"

using namespace lvcx;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode{};
}

}  // namespace

TEST_CASE("corridor lower bound") {
  const LocalVolSurface s(MixtureSpec::toy3());
  const auto excursion = corridor_lower_bound(s, CorridorSpec::paper_corridor());
  CHECK(excursion.value > 6.4);
  CHECK(excursion.value < 6.9);
  const auto fine = corridor_lower_bound(s, CorridorSpec::paper_corridor(), {2000, 2000});
  CHECK(std::abs(fine.value - excursion.value) < 1e-2);
  CHECK(excursion.segments.size() == 4);

  const auto open = corridor_lower_bound(s, CorridorSpec());
  CHECK(open.value >= 4.0);
  CHECK(open.value < 6.0);

  CHECK(code_of([&] { corridor_lower_bound(s, CorridorSpec::paper_corridor(), {100, 1000}); }) ==
        ErrorCode::invalid_argument);
  CHECK(code_of([&] {
          corridor_lower_bound(s, CorridorSpec({{2.0, 3.5, -1, 1, false}}));
        }) == ErrorCode::domain);
}

TEST_CASE("bound along a single pinned path equals its quadrature") {
  const LocalVolSurface s(MixtureSpec::toy3());
  const CorridorSpec pinned({{0.0, 1.0, 0.0, 0.0, false},
                             {1.0, 2.0, 0.0, 0.0, true},
                             {2.0, 3.0, 0.0, 0.0, true}});
  const double bound = corridor_lower_bound(s, pinned).value;
  // Composite Simpson on each regime interval.
  double quad = 0;
  for (int k = 0; k < 3; ++k) {
    const int n = 2000;
    const double a = k, h = 1.0 / n;
    double acc = 0;
    for (int i = 0; i <= n; ++i) {
      const double t = std::clamp(a + i * h, a + 1e-12, a + 1.0);
      const double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
      acc += w * s(t, 0.0);
    }
    quad += acc * h / 3;
  }
  CHECK(bound == doctest::Approx(quad).epsilon(1e-6));
}

TEST_CASE("corridor specification") {
  CHECK(CorridorSpec::preset("none").constraints().empty());
  CHECK(CorridorSpec::preset("paper_corridor").constraints().size() == 2);
  CHECK(code_of([] { CorridorSpec::preset("tube"); }) == ErrorCode::config);
  CHECK(code_of([] { CorridorSpec({{0, 1, 0, 1}, {0.5, 2, 0, 1}}); }) ==
        ErrorCode::invalid_argument);
  CHECK(code_of([] { CorridorSpec({{1, 0.5, 0, 1}}); }) == ErrorCode::invalid_argument);
  CorridorConstraint c{1, 2, 0, 1, true};
  CHECK_FALSE(c.contains_time(1.0));
  CHECK(c.contains_time(2.0));
}

TEST_CASE("corridor hits") {
  const auto toy = MixtureSpec::toy3();
  const LocalVolSurface s(toy);
  const auto grid = build_grid(toy, 100);
  SimOptions opt;
  opt.rng = {31, 2};
  opt.store_paths = true;
  const auto batch = simulate_localvol(s, grid, 2000, opt);

  const auto all = corridor_hit_probability(batch, CorridorSpec({{0, 3, -kInf, kInf}}));
  CHECK(all.hits == 2000);
  CHECK(all.estimate.mean == 1.0);

  const auto none = corridor_hit_probability(batch, CorridorSpec({{0, 0.01, 8, 10}}));
  CHECK(none.hits == 0);
  CHECK(none.estimate.mean == 0.0);
  CHECK(none.estimate.ci_hi > 0.0);
  CHECK(none.estimate.ci_hi == doctest::Approx(1 - std::pow(0.01, 1.0 / 2000)));

  const auto excursion = corridor_hit_probability(batch, CorridorSpec::paper_corridor());
  CHECK(excursion.hits == 0);

  // A loose corridor that some paths do satisfy.
  const auto some = corridor_hit_probability(batch, CorridorSpec({{2, 3, -1, 1, true}}));
  CHECK(some.hits > 0);
  CHECK(some.hits < 2000);
  CHECK(some.hit_realized_variance.size() == some.hits);

  const auto scan = corridor_hit_scan(s, grid, CorridorSpec({{2, 3, -1, 1, true}}), 2000, {31, 2},
                                      300);
  CHECK(scan.hits == some.hits);
  CHECK(scan.hit_paths == some.hit_paths);

  CHECK(code_of([&] { corridor_hit_probability(batch, CorridorSpec({{0, 0.0137, 8, 10}})); }) ==
        ErrorCode::config);
  opt.store_paths = false;
  const auto bare = simulate_localvol(s, grid, 10, opt);
  CHECK(code_of([&] { corridor_hit_probability(bare, CorridorSpec::paper_corridor()); }) ==
        ErrorCode::config);
}

TEST_CASE("guided corridor scan") {
  const LocalVolSurface s(MixtureSpec::toy3());
  const auto grid = build_grid(MixtureSpec::toy3(), 100);
  const auto g = corridor_guided_scan(s, grid, CorridorSpec::paper_corridor(), 500, {4, 1});
  CHECK(g.n == 500);
  CHECK(g.hits > 0);
  CHECK(g.log10_probability < -20);
  CHECK(g.min_hit_variance > 6.4);
}
