#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lvcx/localvol.hpp"
#include "lvcx/mixture_model.hpp"

namespace lvcx {

/// sigma_dloc^2 frozen at one time.
class DoubleLocalSlice {
 public:
  DoubleLocalSlice(const MixtureSpec& spec, double epsilon, double t, TimeSide side);

  double operator()(double x, double a) const noexcept;
  /// Branch posterior P(branch i | X_t = x, a_t = a); `out` has one entry per branch.
  void posteriors(double x, double a, std::span<double> out) const noexcept;
  std::span<const double> rates() const noexcept { return rates_; }

 private:
  double log_weight(std::size_t i, double x, double a) const noexcept;

  std::vector<double> rates_;
  std::vector<double> log_prefactor_;
  std::vector<double> x_mean_;
  std::vector<double> x_half_inv_var_;
  std::vector<double> a_mean_;
  double a_half_inv_var_ = 0.0;
  std::vector<double> prior_;
  bool flat_ = false;
  double flat_value_ = 0.0;
};

/// E[sigma^2(t) | X_t = x, a_t = a] for the regularised pair
///   dX = sigma dB - sigma^2/2 dt,  da = sigma^2 dt + sqrt(epsilon) dZ.
///
/// Given the branch, X_t ~ N(-Sigma_i/2, Sigma_i) and a_t ~ N(Sigma_i, epsilon t)
/// are independent (Z is independent of B and of the branch draw), so
///
///   sigma_dloc^2 = sum_i w_i r_i phi_i(x) psi_i(a) / sum_i w_i phi_i(x) psi_i(a).
///
/// With epsilon = 0 the running variance reveals the branch; that case is
/// rejected (ErrorCode::degenerate) wherever the Sigma_i(t) differ.
class DoubleLocalSurface {
 public:
  DoubleLocalSurface(MixtureSpec spec, double epsilon);

  const MixtureSpec& spec() const noexcept { return spec_; }
  double epsilon() const noexcept { return epsilon_; }

  double operator()(double t, double x, double a, TimeSide side = TimeSide::at) const;
  DoubleLocalSlice slice(double t, TimeSide side = TimeSide::at) const;

 private:
  MixtureSpec spec_;
  double epsilon_;
};

double sigma_dloc_sq(const DoubleLocalSurface& surface, double t, double x, double a);

/// 3 sqrt(epsilon T / 2 pi): E[(a_T - V)^+] + E|sqrt(epsilon) Z_T| with
/// a_T ~ N(V, epsilon T).
double bound_constant(double epsilon, double horizon);

/// One draw of the mixing model's state at a fixed time.
struct MixingState {
  double x;     // X_t
  double a;     // a_t = V_t + sqrt(epsilon) Z_t
  double rate;  // sigma^2(t) on the drawn branch
};

std::vector<MixingState> sample_mixing_state(const MixtureSpec& spec, double t, double epsilon,
                                             const RngConfig& rng, std::size_t n);

struct DlocBins {
  std::size_t x_bins = 20;
  std::size_t a_bins = 20;
  std::size_t min_count = 100;
  // Bin ranges; default to the sample extremes.
  std::optional<std::pair<double, double>> x_range;
  std::optional<std::pair<double, double>> a_range;
};

struct DlocBinRow {
  double x_lo, x_hi, a_lo, a_hi;
  std::size_t n;
  bool populated;        // n >= min_count; other fields are NaN otherwise
  double estimate;       // mean of sampled sigma^2 in the bin
  double analytic;       // mean of sigma_dloc^2 over the bin's samples
  double analytic_center;// sigma_dloc^2 at the bin centre
  double std_error;      // binomial standard error of `estimate` under the closed form
};

/// Binned check of the closed form against its defining conditional
/// expectation. By the tower property the bin mean of sampled sigma^2 and the
/// bin mean of sigma_dloc^2 agree exactly in expectation, whatever the bin
/// size. Throws ErrorCode::insufficient_data when no bin reaches min_count.
std::vector<DlocBinRow> regression_check_dloc(const DoubleLocalSurface& surface, double t,
                                              std::span<const MixingState> samples,
                                              const DlocBins& bins);

/// CSV "x_lo,x_hi,a_lo,a_hi,n,estimate,analytic,stderr"; unpopulated bins
/// leave the last three fields empty.
std::string dloc_check_csv(std::span<const DlocBinRow> rows);

}  // namespace lvcx
