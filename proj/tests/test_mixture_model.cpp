#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "lvcx/error.hpp"
#include "lvcx/mixture_model.hpp"
#include "lvcx/numerics.hpp"
#include "lvcx/sde.hpp"

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

TEST_CASE("cumulative variance of the toy model") {
  const auto toy = MixtureSpec::toy3();
  CHECK(cum_variance(toy, 0, 3.0) == 6.0);
  CHECK(cum_variance(toy, 1, 3.0) == 6.0);
  CHECK(cum_variance(toy, 1, 0.0) == 0.0);
  CHECK(cum_variance(toy, 0, 1.5) == doctest::Approx(3.5).epsilon(1e-15));
  CHECK(cum_variance(toy, 1, 1.5) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(cum_variance(toy, 0, 2.5) == doctest::Approx(5.5).epsilon(1e-15));
  CHECK(code_of([&] { cum_variance(toy, 0, 3.5); }) == ErrorCode::domain);
  CHECK(code_of([&] { cum_variance(toy, 0, -0.1); }) == ErrorCode::domain);
  CHECK(code_of([&] { cum_variance(toy, 2, 1.0); }) == ErrorCode::invalid_argument);
}

TEST_CASE("marginal cdf of X_t") {
  const auto toy = MixtureSpec::toy3();
  CHECK(marginal_cdf_x(toy, 3.0, std::numeric_limits<double>::infinity()) == 1.0);
  CHECK(marginal_cdf_x(toy, 3.0, 1e6) == 1.0);
  CHECK(marginal_cdf_x(toy, 3.0, -3.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(marginal_cdf_x(toy, 0.5, -0.5) == doctest::Approx(0.5).epsilon(1e-15));
  // Two-component check at t = 1.5 against a direct evaluation.
  const double x = 0.3;
  const double want = 0.5 * norm_cdf((x + 1.75) / std::sqrt(3.5)) +
                      0.5 * norm_cdf((x + 1.25) / std::sqrt(2.5));
  CHECK(marginal_cdf_x(toy, 1.5, x) == doctest::Approx(want).epsilon(1e-14));
  CHECK(code_of([&] { marginal_cdf_x(toy, 0.0, 0.0); }) == ErrorCode::degenerate);
}

TEST_CASE("piecewise-constant rate conventions") {
  PiecewiseConstRate r({0, 1, 2, 3}, {2, 3, 1});
  CHECK(r.value_at(0.0) == 2);
  CHECK(r.value_at(1.0) == 2);
  CHECK(r.value_after(1.0) == 3);
  CHECK(r.value_at(2.0) == 3);
  CHECK(r.value_after(2.0) == 1);
  CHECK(r.value_at(3.0) == 1);
  CHECK(r.integral(3.0) == 6.0);
  CHECK(r.min_value() == 1);
  CHECK(r.max_value() == 3);
  CHECK_THROWS_AS(PiecewiseConstRate({0, 1}, {-1}), Error);
  CHECK_THROWS_AS(PiecewiseConstRate({0.5, 1}, {1}), Error);
}

TEST_CASE("model text format") {
  const auto toy = MixtureSpec::toy3();
  const auto again = MixtureSpec::parse(toy.to_text());
  CHECK(again.fingerprint() == toy.fingerprint());
  CHECK(again.to_text() == toy.to_text());
  CHECK(MixtureSpec::preset("toy3").fingerprint() == toy.fingerprint());

  const char* text =
      "# two regimes\n"
      "breakpoints = 0, 1, 2, 3\n"
      "branches = 2\n"
      "branch.0.weight = 0.5\n"
      "branch.0.rates = 2, 3, 1\n"
      "branch.1.weight = 0.5\n"
      "branch.1.rates = 2, 1, 3\n";
  CHECK(MixtureSpec::parse(text).fingerprint() == toy.fingerprint());

  CHECK(code_of([] { MixtureSpec::preset("nope"); }) == ErrorCode::config);
  CHECK(code_of([&] { MixtureSpec::parse(std::string(text) + "colour = red\n"); }) ==
        ErrorCode::config);
  CHECK(code_of([&] { MixtureSpec::parse(std::string(text) + "branches = 2\n"); }) ==
        ErrorCode::config);
  CHECK(code_of([] {
          MixtureSpec::parse(
              "breakpoints = 0, 1\nbranches = 2\nbranch.0.weight = 0.6\nbranch.0.rates = 1\n"
              "branch.1.weight = 0.6\nbranch.1.rates = 2\n");
        }) == ErrorCode::invalid_model);
  CHECK(code_of([] { MixtureSpec::load("/nonexistent/model.txt"); }) == ErrorCode::io);

  const auto path = std::filesystem::temp_directory_path() / "lvcx_test_model.txt";
  std::ofstream(path) << text;
  CHECK(MixtureSpec::load(path).fingerprint() == toy.fingerprint());
  std::filesystem::remove(path);
}

TEST_CASE("mixing-model paths") {
  const auto toy = MixtureSpec::toy3();
  const auto grid = build_grid(toy, 4);
  const std::size_t n = 100000;
  const auto batch = sample_mixing_paths(toy, grid, {2024, 1}, n);
  REQUIRE(batch.path_count() == n);

  std::size_t plus = 0;
  for (auto b : batch.branch) plus += (b == 0);
  CHECK(std::abs(double(plus) / n - 0.5) <= 3 * std::sqrt(0.25 / n));

  for (double v : batch.realized_variance) REQUIRE(v == 6.0);

  const auto x3 = batch.column(3.0);
  double m = 0, s2 = 0;
  for (double x : x3) m += x;
  m /= n;
  for (double x : x3) s2 += (x - m) * (x - m);
  s2 /= (n - 1);
  CHECK(std::abs(m + 3.0) <= 3 * std::sqrt(6.0 / n));
  CHECK(std::abs(s2 - 6.0) <= 3 * 6.0 * std::sqrt(2.0 / n));
}

TEST_CASE("conditional median of the half-time price") {
  CHECK(conditional_median(1.0) == 1.0);
  CHECK(conditional_median(4.0) == 2.0);
  CHECK_THROWS_AS(conditional_median(0.0), Error);
}

TEST_CASE("adapted-sign variant") {
  const auto toy = MixtureSpec::toy3();
  const auto grid = build_grid(toy, 20);
  const std::size_t n = 100000;
  const auto batch = adapted_sign_simulate(toy, grid, {99, 1}, n);
  std::size_t plus = 0;
  for (auto b : batch.branch) plus += (b == 0);
  CHECK(std::abs(double(plus) / n - 0.5) <= 3 * std::sqrt(0.25 / n));
  for (double v : batch.realized_variance) REQUIRE(v == 6.0);

  MixtureSpec skew({{0.5, PiecewiseConstRate({0, 1, 2, 3}, {2, 3, 1})},
                    {0.5, PiecewiseConstRate({0, 1, 2, 3}, {1, 1, 3})}});
  CHECK(code_of([&] { adapted_sign_simulate(skew, grid, {1, 1}, 10); }) ==
        ErrorCode::invalid_model);
}
