#pragma once

#include <span>
#include <string>
#include <vector>

#include "lvcx/mixture_model.hpp"

namespace lvcx {

/// Which one-sided value to use at a regime breakpoint.
enum class TimeSide {
  at,     // interval convention of PiecewiseConstRate::value_at
  after,  // right limit; what an Euler step starting at t sees
};

/// sigma_loc^2 frozen at one time: the branch rates, total variances and
/// log prefactors needed to evaluate the Gaussian-weighted ratio in x.
class LocalVolSlice {
 public:
  LocalVolSlice(const MixtureSpec& spec, double t, TimeSide side);

  double operator()(double x) const noexcept;
  /// True when the value does not depend on x.
  bool flat() const noexcept { return flat_; }

 private:
  struct Term {
    double rate;
    double half_inv_var;  // 1 / (2 Sigma_i)
    double mean;          // -Sigma_i / 2
    double log_prefactor; // log w_i - log(Sigma_i) / 2
  };
  std::vector<Term> terms_;
  bool flat_ = false;
  double flat_value_ = 0.0;
};

/// sigma_loc^2(t, x) = E[sigma^2(t) | X_t = x] for a MixtureSpec:
///
///   sum_i w_i sigma_i^2(t) phi_i(x) / sum_i w_i phi_i(x),
///   phi_i = density of N(-Sigma_i(t)/2, Sigma_i(t)).
///
/// The weights are normalised in log space, so the ratio stays finite for
/// any |x| (far in the tails it tends to the rate of the widest branch).
class LocalVolSurface {
 public:
  explicit LocalVolSurface(MixtureSpec spec) : spec_(std::move(spec)) {}

  const MixtureSpec& spec() const noexcept { return spec_; }

  double operator()(double t, double x, TimeSide side = TimeSide::at) const;
  LocalVolSlice slice(double t, TimeSide side = TimeSide::at) const;

 private:
  MixtureSpec spec_;
};

double sigma_loc_sq(const LocalVolSurface& surface, double t, double x);

/// Price of a European call at time 0.
struct CallPrice {
  double maturity;
  double strike;
  double price;
};

/// Black-Scholes call on S_0 = 1 with zero rates and total variance `total_var`.
double black_scholes_call(double total_var, double strike);

/// Weight-averaged log-normal call prices of the mixture model.
CallPrice call_price_mixture(const MixtureSpec& spec, double maturity, double strike);

struct DupireSteps {
  double time = 1e-4;
  double rel_strike = 1e-4;  // strike step is rel_strike * K
};

/// Local variance recovered from mixture call prices by central differences:
/// 2 dC/dT / (K^2 d2C/dK2). Throws ErrorCode::ill_conditioned when d2C/dK2
/// falls below `curvature_floor`, and ErrorCode::domain when the time stencil
/// straddles a regime breakpoint.
double dupire_sigma_sq(const MixtureSpec& spec, double maturity, double strike,
                       const DupireSteps& steps = {}, double curvature_floor = 1e-12);

struct SurfacePoint {
  double t;
  double x;
  double sigma2;
};

/// Inclusive linear range; count = 1 means the single point `lo`.
struct Range {
  double lo;
  double hi;
  std::size_t count;
};

/// Row-major (t outer, x inner) table of sigma_loc^2.
std::vector<SurfacePoint> surface_grid(const LocalVolSurface& surface, const Range& t_range,
                                       const Range& x_range, unsigned workers = 1);

/// CSV with header "t,x,sigma2_loc", shortest round-trip number formatting.
std::string surface_csv(std::span<const SurfacePoint> points);

}  // namespace lvcx
