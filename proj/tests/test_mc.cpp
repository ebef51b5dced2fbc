#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "lvcx/error.hpp"
#include "lvcx/mc.hpp"
#include "lvcx/numerics.hpp"
#include "lvcx/rng.hpp"

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

std::vector<double> normals(std::uint64_t seed, std::size_t n) {
  PathRng r(seed, 0, Substream::brownian);
  std::vector<double> out(n);
  for (auto& z : out) z = r.normal();
  return out;
}

}  // namespace

TEST_CASE("payoffs") {
  CHECK(Payoff::variance_swap()(6.5) == 6.5);
  CHECK(Payoff::variance_call(6)(6.5) == 0.5);
  CHECK(Payoff::variance_call(6)(5.5) == 0.0);
  CHECK(Payoff::vol_swap()(4.0) == 2.0);
  CHECK(code_of([] { Payoff::vol_swap()(-1e-9); }) == ErrorCode::domain);
  CHECK(code_of([] { Payoff::variance_call(-1); }) == ErrorCode::invalid_argument);
  CHECK(Payoff::parse("varcall", 6).name() == "varcall");
  CHECK(code_of([] { Payoff::parse("digital", 6); }) == ErrorCode::config);

  const auto tab = Payoff::tabulated({0, 6, 12}, {0, 0, 6});
  CHECK(tab(9) == 3);
  CHECK(tab(14) == 8);
  CHECK(code_of([] { Payoff::tabulated({0, 6, 12}, {0, 6, 6}); }) == ErrorCode::invalid_argument);
}

TEST_CASE("estimates") {
  const std::vector<double> six(1000, 6.0);
  const auto call = estimate_payoff(six, Payoff::variance_call(6.0));
  CHECK(call.mean == 0.0);
  CHECK(call.std_error == 0.0);
  CHECK(call.ci_lo == 0.0);
  CHECK(call.ci_hi == 0.0);
  CHECK(estimate_payoff(six, Payoff::variance_swap()).mean == 6.0);

  const std::vector<double> v{1, 2, 3, 4};
  const auto e = estimate_mean(v);
  CHECK(e.mean == 2.5);
  CHECK(e.std_error == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  CHECK(e.ci_hi - e.mean == doctest::Approx(kZ99 * e.std_error));
  CHECK(code_of([] { estimate_mean(std::vector<double>{1}); }) == ErrorCode::insufficient_data);
  CHECK(estimate_record(Payoff::variance_call(6), call).rfind("payoff=varcall strike=6 mean=0", 0) ==
        0);
}

TEST_CASE("KS distance between N(0,1) and N(1,1)") {
  const auto z = normals(1, 400000);
  const auto ks = ks_statistic(z, [](double x) { return norm_cdf(x - 1.0); });
  CHECK(std::abs(ks.statistic - 0.382924922548026207) < 5e-3);
  CHECK_FALSE(ks.passes_1pct());
}

TEST_CASE("KS null distribution") {
  int pass = 0;
  const int seeds = 200;
  for (int s = 0; s < seeds; ++s) {
    const auto z = normals(1000 + s, 10000);
    pass += ks_statistic(z, norm_cdf).passes_5pct();
  }
  CHECK(pass >= 0.94 * seeds);
}

TEST_CASE("KS against the empirical cdf of the sample") {
  auto z = normals(3, 500);
  auto sorted = z;
  std::sort(sorted.begin(), sorted.end());
  const auto ecdf = [&](double x) {
    return double(std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin()) /
           double(sorted.size());
  };
  CHECK(ks_statistic(z, ecdf).statistic <= 1.0 / 500 + 1e-15);
  const auto ks = ks_statistic(z, norm_cdf);
  CHECK(ks.critical_1pct == doctest::Approx(1.63 / std::sqrt(500.0)));
  CHECK(ks.critical_5pct == doctest::Approx(1.36 / std::sqrt(500.0)));

  z[7] = std::numeric_limits<double>::quiet_NaN();
  CHECK(code_of([&] { ks_statistic(z, norm_cdf); }) == ErrorCode::data);
  CHECK(code_of([&] { ks_statistic(std::vector<double>(50, 0.0), norm_cdf); }) ==
        ErrorCode::insufficient_data);
}

TEST_CASE("histograms") {
  const std::vector<double> six(500, 6.0);
  const auto h = histogram(six, 12, 0.0, 12.0);
  std::size_t nonzero = 0;
  for (const auto& b : h.bins)
    if (b.count) {
      ++nonzero;
      CHECK(b.frequency == 1.0);
      CHECK(b.lo <= 6.0);
      CHECK(b.hi > 6.0);
    }
  CHECK(nonzero == 1);

  const auto z = normals(8, 10000);
  const auto g = histogram(z, 17, -2.0, 2.5);
  std::size_t total = g.underflow + g.overflow;
  for (const auto& b : g.bins) total += b.count;
  CHECK(total == z.size());
  CHECK(g.total == z.size());
  CHECK(code_of([&] { histogram(z, 10, 1.0, -1.0); }) == ErrorCode::domain);
  CHECK(histogram_csv(g).find("-inf") != std::string::npos);
}
