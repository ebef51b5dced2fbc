#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lvcx/rng.hpp"
#include "lvcx/time_grid.hpp"

namespace lvcx {

/// Worker count and seed for any sampling routine. Results depend on the seed
/// only; `workers` changes wall time.
struct RngConfig {
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

/// Piecewise-constant variance rate on [0, T].
///
/// Interval k is [b_0, b_1] for k = 0 and (b_k, b_{k+1}] afterwards, so the
/// value at an interior breakpoint belongs to the interval that ends there.
class PiecewiseConstRate {
 public:
  PiecewiseConstRate(std::vector<double> breakpoints, std::vector<double> values);

  std::span<const double> breakpoints() const noexcept { return breakpoints_; }
  std::span<const double> values() const noexcept { return values_; }
  double horizon() const noexcept { return breakpoints_.back(); }

  /// Rate at t using the interval convention above.
  double value_at(double t) const;
  /// Rate governing (t, t + dt) for small dt > 0: the right limit.
  double value_after(double t) const;
  /// Exact integral over [0, t].
  double integral(double t) const;

  double min_value() const noexcept;
  double max_value() const noexcept;

 private:
  std::vector<double> breakpoints_;
  std::vector<double> values_;
  std::vector<double> cumulative_;  // integral up to each breakpoint
};

struct MixtureComponent {
  double weight;
  PiecewiseConstRate rate;
};

/// Regime-mixing Black-Scholes model: at time 0 a branch is drawn with the
/// given weights and the log-price then follows
///   dX = sigma_i(t) dB - sigma_i(t)^2 / 2 dt,  X_0 = 0  (S_0 = 1).
class MixtureSpec {
 public:
  explicit MixtureSpec(std::vector<MixtureComponent> components);

  /// The two-regime model on [0, 3]: rates (2, 3, 1) or (2, 1, 3), fair coin.
  static MixtureSpec toy3();
  /// Named built-in model ("toy3").
  static MixtureSpec preset(std::string_view name);
  /// Key-value text; see README for the schema.
  static MixtureSpec parse(std::string_view text);
  static MixtureSpec load(const std::filesystem::path& path);

  std::size_t branch_count() const noexcept { return components_.size(); }
  const MixtureComponent& component(std::size_t i) const { return components_.at(i); }
  std::span<const double> breakpoints() const noexcept { return components_.front().rate.breakpoints(); }
  double horizon() const noexcept { return components_.front().rate.horizon(); }

  double min_rate() const noexcept;
  double max_rate() const noexcept;
  double min_rate_at(double t) const;
  double max_rate_at(double t) const;

  /// Canonical text (parse(to_text()) reproduces the model bit-exactly).
  std::string to_text() const;
  std::uint64_t fingerprint() const;

 private:
  std::vector<MixtureComponent> components_;
};

/// Sigma_i(t) = integral of the branch-i rate over [0, t].
double cum_variance(const MixtureSpec& spec, std::size_t branch, double t);

/// P(X_t <= x) for the mixture of N(-Sigma_i(t)/2, Sigma_i(t)) laws. Throws
/// ErrorCode::degenerate at t = 0 (point mass at the origin).
double marginal_cdf_x(const MixtureSpec& spec, double t, double x);

/// Exactly sampled mixing-model paths recorded on a time grid.
struct BranchPathBatch {
  std::vector<double> times;
  std::vector<std::uint32_t> branch;       // per path
  std::vector<double> log_price;           // row-major, paths x times
  std::vector<double> realized_variance;   // per path, over [0, T]

  std::size_t path_count() const noexcept { return branch.size(); }
  double x(std::size_t path, std::size_t k) const { return log_price[path * times.size() + k]; }
  /// Log-price at every path for grid time t (which must be on the grid).
  std::vector<double> column(double t) const;
};

BranchPathBatch sample_mixing_paths(const MixtureSpec& spec, const TimeGrid& grid,
                                    const RngConfig& rng, std::size_t n_paths);

/// Median of S_{t/2} given S_t = s under a constant-rate log-normal; for the
/// bridge of a Brownian motion with linear drift this is sqrt(s).
double conditional_median(double s);

/// Adapted-filtration variant of a two-branch, fair-coin model whose branches
/// agree on the first interval [0, b_1]. The branch is chosen at b_1 by the
/// path itself: branch 0 iff S_{b_1/2} > m(S_{b_1}), ties go to branch 1.
/// The reported batch labels each path with that chosen branch.
BranchPathBatch adapted_sign_simulate(const MixtureSpec& spec, const TimeGrid& grid,
                                      const RngConfig& rng, std::size_t n_paths);

}  // namespace lvcx
