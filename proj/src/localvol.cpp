#include "lvcx/localvol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lvcx/error.hpp"
#include "lvcx/numerics.hpp"
#include "lvcx/parallel.hpp"

namespace lvcx {

LocalVolSlice::LocalVolSlice(const MixtureSpec& spec, double t, TimeSide side) {
  require(t >= 0.0 && t <= spec.horizon(), ErrorCode::domain, "time outside [0, T]");
  const std::size_t n = spec.branch_count();
  bool same_rate = true;
  bool same_var = true;
  double mean_rate = 0.0;
  terms_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = spec.component(i);
    const double rate = side == TimeSide::at ? c.rate.value_at(t) : c.rate.value_after(t);
    const double var = c.rate.integral(t);
    mean_rate += c.weight * rate;
    if (i > 0) {
      same_rate = same_rate && rate == terms_.front().rate;
      same_var = same_var && var == spec.component(0).rate.integral(t);
    }
    terms_.push_back({rate, var > 0.0 ? 0.5 / var : 0.0, -0.5 * var,
                      std::log(c.weight) - 0.5 * std::log(var)});
  }
  // Identical densities (including the t = 0 point mass) leave the prior mean.
  if (same_rate || same_var) {
    flat_ = true;
    flat_value_ = same_rate ? terms_.front().rate : mean_rate;
  }
}

double LocalVolSlice::operator()(double x) const noexcept {
  if (flat_) return flat_value_;
  if (terms_.size() == 2) {
    // r0 + (r1 - r0) * P(branch 1 | x); one exponential, saturates cleanly
    const auto& a = terms_[0];
    const auto& b = terms_[1];
    const double da = x - a.mean;
    const double db = x - b.mean;
    const double gap = (a.log_prefactor - da * da * a.half_inv_var) -
                       (b.log_prefactor - db * db * b.half_inv_var);
    return a.rate + (b.rate - a.rate) / (1.0 + std::exp(gap));
  }
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& term : terms_) {
    const double d = x - term.mean;
    top = std::max(top, term.log_prefactor - d * d * term.half_inv_var);
  }
  double num = 0.0;
  double den = 0.0;
  for (const auto& term : terms_) {
    const double d = x - term.mean;
    const double w = std::exp(term.log_prefactor - d * d * term.half_inv_var - top);
    num += w * term.rate;
    den += w;
  }
  return num / den;
}

double LocalVolSurface::operator()(double t, double x, TimeSide side) const {
  return LocalVolSlice(spec_, t, side)(x);
}

LocalVolSlice LocalVolSurface::slice(double t, TimeSide side) const {
  return LocalVolSlice(spec_, t, side);
}

double sigma_loc_sq(const LocalVolSurface& surface, double t, double x) {
  return surface(t, x);
}

double black_scholes_call(double total_var, double strike) {
  require(strike > 0.0, ErrorCode::domain, "strike must be positive");
  require(total_var >= 0.0, ErrorCode::domain, "total variance must be non-negative");
  if (total_var == 0.0) return std::max(1.0 - strike, 0.0);
  const double sd = std::sqrt(total_var);
  const double d1 = (-std::log(strike) + 0.5 * total_var) / sd;
  return norm_cdf(d1) - strike * norm_cdf(d1 - sd);
}

CallPrice call_price_mixture(const MixtureSpec& spec, double maturity, double strike) {
  require(strike > 0.0, ErrorCode::domain, "strike must be positive");
  require(maturity >= 0.0 && maturity <= spec.horizon(), ErrorCode::domain,
          "maturity outside [0, T]");
  double price = 0.0;
  for (std::size_t i = 0; i < spec.branch_count(); ++i)
    price += spec.component(i).weight *
             black_scholes_call(cum_variance(spec, i, maturity), strike);
  return {maturity, strike, price};
}

double dupire_sigma_sq(const MixtureSpec& spec, double maturity, double strike,
                       const DupireSteps& steps, double curvature_floor) {
  const double ht = steps.time;
  const double hk = steps.rel_strike * strike;
  require(ht > 0.0 && steps.rel_strike > 0.0 && steps.rel_strike < 0.5, ErrorCode::invalid_argument,
          "finite-difference steps must be positive (relative strike step < 0.5)");
  require(strike > 0.0, ErrorCode::domain, "strike must be positive");
  require(maturity - ht > 0.0 && maturity + ht <= spec.horizon(), ErrorCode::domain,
          "time stencil leaves (0, T]");
  for (double b : spec.breakpoints())
    require(!(b > maturity - ht && b < maturity + ht), ErrorCode::domain,
            "time stencil straddles a regime breakpoint");

  auto c = [&](double t, double k) { return call_price_mixture(spec, t, k).price; };
  const double c0 = c(maturity, strike);
  const double dc_dt = (c(maturity + ht, strike) - c(maturity - ht, strike)) / (2.0 * ht);
  const double d2c_dk2 = (c(maturity, strike + hk) - 2.0 * c0 + c(maturity, strike - hk)) / (hk * hk);
  require(d2c_dk2 >= curvature_floor, ErrorCode::ill_conditioned,
          "d2C/dK2 below the curvature floor; Dupire ratio is ill-conditioned here");
  return 2.0 * dc_dt / (strike * strike * d2c_dk2);
}

namespace {

void check_range(const Range& r, const char* name) {
  require(r.count >= 1, ErrorCode::domain, std::string(name) + " range is empty");
  require(std::isfinite(r.lo) && std::isfinite(r.hi) && r.hi >= r.lo, ErrorCode::domain,
          std::string(name) + " range is inverted or non-finite");
}

double range_at(const Range& r, std::size_t k) {
  if (r.count == 1) return r.lo;
  if (k + 1 == r.count) return r.hi;
  return r.lo + (r.hi - r.lo) * static_cast<double>(k) / static_cast<double>(r.count - 1);
}

}  // namespace

std::vector<SurfacePoint> surface_grid(const LocalVolSurface& surface, const Range& t_range,
                                       const Range& x_range, unsigned workers) {
  check_range(t_range, "t");
  check_range(x_range, "x");
  require(t_range.lo >= 0.0 && t_range.hi <= surface.spec().horizon(), ErrorCode::domain,
          "t range must lie within [0, T]");
  std::vector<SurfacePoint> out(t_range.count * x_range.count);
  parallel_for_ranges(t_range.count, workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const double t = range_at(t_range, i);
      const auto slice = surface.slice(t);
      for (std::size_t j = 0; j < x_range.count; ++j) {
        const double x = range_at(x_range, j);
        out[i * x_range.count + j] = {t, x, slice(x)};
      }
    }
  });
  return out;
}

std::string surface_csv(std::span<const SurfacePoint> points) {
  std::string out = "t,x,sigma2_loc\n";
  out.reserve(points.size() * 40);
  char buf[32];
  for (const auto& p : points) {
    out += format_double(p.t, buf);
    out += ',';
    out += format_double(p.x, buf);
    out += ',';
    out += format_double(p.sigma2, buf);
    out += '\n';
  }
  return out;
}

}  // namespace lvcx
