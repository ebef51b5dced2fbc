#include <doctest.h>

#include <cmath>
#include <cstring>

#include "lvcx/error.hpp"
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

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("local-vol simulation") {
  const auto toy = MixtureSpec::toy3();
  const LocalVolSurface surface(toy);
  const auto grid = build_grid(toy, 50);
  SimOptions opt;
  opt.rng = {77, 1};
  opt.record_times = {1.0, 2.0, 3.0};
  const auto batch = simulate_localvol(surface, grid, 4000, opt);
  REQUIRE(batch.path_count() == 4000);
  CHECK(batch.kind == ModelKind::localvol);
  CHECK(batch.model_fingerprint == toy.fingerprint());
  CHECK(batch.grid.size() == grid.size());
  CHECK_FALSE(batch.has_paths());

  double mean = 0;
  for (double v : batch.realized_variance) {
    REQUIRE(v >= 3.0);
    REQUIRE(v <= 9.0);
    mean += v;
  }
  mean /= 4000;
  CHECK(std::abs(mean - 6.0) < 0.05);
  CHECK(same_bits(batch.recorded(3.0), batch.terminal_x));
  // Running variance is exactly 2 t on [0, 1].
  for (double v : batch.recorded(1.0, false)) CHECK(std::isfinite(v));
  CHECK(code_of([&] { batch.recorded(1.5); }) == ErrorCode::invalid_argument);
}

TEST_CASE("simulation is bit-identical across worker counts and path offsets") {
  const auto toy = MixtureSpec::toy3();
  const LocalVolSurface lv(toy);
  const DoubleLocalSurface dlv(toy, 1e-5);
  const auto grid = build_grid(toy, 20);
  SimOptions one;
  one.rng = {5, 1};
  auto a = simulate_localvol(lv, grid, 300, one);
  auto da = simulate_double_localvol(dlv, grid, 300, one);
  for (unsigned w : {4u, 16u}) {
    SimOptions many = one;
    many.rng.workers = w;
    const auto b = simulate_localvol(lv, grid, 300, many);
    CHECK(same_bits(a.terminal_x, b.terminal_x));
    CHECK(same_bits(a.realized_variance, b.realized_variance));
    const auto db = simulate_double_localvol(dlv, grid, 300, many);
    CHECK(same_bits(da.terminal_x, db.terminal_x));
    CHECK(same_bits(da.terminal_a, db.terminal_a));
    CHECK(same_bits(da.realized_variance, db.realized_variance));
  }
  SimOptions tail = one;
  tail.first_path = 200;
  const auto t = simulate_localvol(lv, grid, 100, tail);
  CHECK(std::memcmp(t.terminal_x.data(), a.terminal_x.data() + 200, 100 * sizeof(double)) == 0);
}

TEST_CASE("stored paths") {
  const auto toy = MixtureSpec::toy3();
  const auto grid = build_grid(toy, 10);
  SimOptions opt;
  opt.rng = {3, 2};
  opt.store_paths = true;
  const auto b = simulate_localvol(LocalVolSurface(toy), grid, 50, opt);
  REQUIRE(b.has_paths());
  for (std::size_t p = 0; p < 50; ++p) {
    CHECK(b.path_x(p, 0) == 0.0);
    CHECK(b.path_x(p, grid.size() - 1) == b.terminal_x[p]);
  }
}

TEST_CASE("mixing simulation has deterministic variance") {
  const auto toy = MixtureSpec::toy3();
  SimOptions opt;
  opt.rng = {9, 3};
  const auto b = simulate_mixing(toy, build_grid(toy, 30), 5000, opt);
  for (double v : b.realized_variance) REQUIRE(v == 6.0);
}

TEST_CASE("double local-vol simulation") {
  const auto toy = MixtureSpec::toy3();
  SimOptions opt;
  opt.rng = {21, 1};
  const auto b = simulate_double_localvol(DoubleLocalSurface(toy, 1e-5), build_grid(toy, 50),
                                          4000, opt);
  CHECK(b.kind == ModelKind::dlocalvol);
  CHECK(b.epsilon == 1e-5);
  double mean = 0;
  for (double v : b.realized_variance) mean += v;
  CHECK(std::abs(mean / 4000 - 6.0) < 0.01);
  for (std::size_t p = 0; p < 4000; ++p)
    CHECK(std::abs(b.terminal_a[p] - b.realized_variance[p]) < 0.05);
}

TEST_CASE("batch records round-trip") {
  const auto toy = MixtureSpec::toy3();
  SimOptions opt;
  opt.rng = {4, 1};
  opt.first_path = 10;
  const auto b = simulate_double_localvol(DoubleLocalSurface(toy, 1e-3), build_grid(toy, 10),
                                          25, opt);
  const auto text = batch_records(b);
  CHECK(text.rfind("# lvcx sim-batch kind=dlocalvol seed=4 first_path=10", 0) == 0);
  const auto recs = parse_batch_records(text);
  REQUIRE(recs.size() == 25);
  for (std::size_t p = 0; p < 25; ++p) {
    CHECK(recs[p].path_index == 10 + p);
    CHECK(recs[p].x_t == b.terminal_x[p]);
    CHECK(recs[p].v_t == b.realized_variance[p]);
    REQUIRE(recs[p].a_t.has_value());
    CHECK(*recs[p].a_t == b.terminal_a[p]);
  }
  CHECK(code_of([] { parse_batch_records("1,2,3\n"); }) == ErrorCode::data);
}

TEST_CASE("configuration errors") {
  const auto toy = MixtureSpec::toy3();
  CHECK(parse_model_kind("localvol") == ModelKind::localvol);
  CHECK(to_string(ModelKind::mixing) == "mixing");
  CHECK(code_of([] { parse_model_kind("heston"); }) == ErrorCode::config);
  SimOptions opt;
  opt.record_times = {1.234};
  CHECK(code_of([&] {
          simulate_localvol(LocalVolSurface(toy), build_grid(toy, 10), 10, opt);
        }) == ErrorCode::config);
  CHECK(code_of([&] {
          simulate_localvol(LocalVolSurface(toy), TimeGrid::uniform(2.0, 10), 10, {});
        }) == ErrorCode::config);
}
