#include "lvcx/dlocalvol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "lvcx/error.hpp"
#include "lvcx/numerics.hpp"
#include "lvcx/parallel.hpp"

namespace lvcx {

DoubleLocalSlice::DoubleLocalSlice(const MixtureSpec& spec, double epsilon, double t,
                                   TimeSide side) {
  require(t >= 0.0 && t <= spec.horizon(), ErrorCode::domain, "time outside [0, T]");
  require(epsilon >= 0.0 && std::isfinite(epsilon), ErrorCode::domain,
          "epsilon must be non-negative");
  const std::size_t n = spec.branch_count();
  bool same_rate = true;
  bool same_var = true;
  double mean_rate = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = spec.component(i);
    const double rate = side == TimeSide::at ? c.rate.value_at(t) : c.rate.value_after(t);
    const double var = c.rate.integral(t);
    rates_.push_back(rate);
    prior_.push_back(c.weight);
    mean_rate += c.weight * rate;
    same_rate = same_rate && rate == rates_.front();
    same_var = same_var && var == spec.component(0).rate.integral(t);
    x_mean_.push_back(-0.5 * var);
    x_half_inv_var_.push_back(var > 0.0 ? 0.5 / var : 0.0);
    a_mean_.push_back(var);
    log_prefactor_.push_back(std::log(c.weight) - 0.5 * std::log(var));
  }
  if (same_rate || same_var) {
    flat_ = true;
    flat_value_ = same_rate ? rates_.front() : mean_rate;
    return;
  }
  const double a_var = epsilon * t;
  require(a_var > 0.0, ErrorCode::degenerate,
          "epsilon = 0: running variance reveals the branch, conditioning is degenerate");
  a_half_inv_var_ = 0.5 / a_var;
}

double DoubleLocalSlice::log_weight(std::size_t i, double x, double a) const noexcept {
  const double dx = x - x_mean_[i];
  const double da = a - a_mean_[i];
  return log_prefactor_[i] - dx * dx * x_half_inv_var_[i] - da * da * a_half_inv_var_;
}

double DoubleLocalSlice::operator()(double x, double a) const noexcept {
  if (flat_) return flat_value_;
  const std::size_t n = rates_.size();
  if (n == 2) {
    const double gap = log_weight(0, x, a) - log_weight(1, x, a);
    return rates_[0] + (rates_[1] - rates_[0]) / (1.0 + std::exp(gap));
  }
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) top = std::max(top, log_weight(i, x, a));
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = std::exp(log_weight(i, x, a) - top);
    num += w * rates_[i];
    den += w;
  }
  return num / den;
}

void DoubleLocalSlice::posteriors(double x, double a, std::span<double> out) const noexcept {
  const std::size_t n = rates_.size();
  if (flat_) {
    // the state carries no information about the branch
    for (std::size_t i = 0; i < n; ++i) out[i] = prior_[i];
    return;
  }
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) top = std::max(top, log_weight(i, x, a));
  double den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(log_weight(i, x, a) - top);
    den += out[i];
  }
  for (std::size_t i = 0; i < n; ++i) out[i] /= den;
}

DoubleLocalSurface::DoubleLocalSurface(MixtureSpec spec, double epsilon)
    : spec_(std::move(spec)), epsilon_(epsilon) {
  require(epsilon >= 0.0 && std::isfinite(epsilon), ErrorCode::domain,
          "epsilon must be non-negative");
}

double DoubleLocalSurface::operator()(double t, double x, double a, TimeSide side) const {
  return DoubleLocalSlice(spec_, epsilon_, t, side)(x, a);
}

DoubleLocalSlice DoubleLocalSurface::slice(double t, TimeSide side) const {
  return DoubleLocalSlice(spec_, epsilon_, t, side);
}

double sigma_dloc_sq(const DoubleLocalSurface& surface, double t, double x, double a) {
  return surface(t, x, a);
}

double bound_constant(double epsilon, double horizon) {
  require(epsilon >= 0.0 && horizon > 0.0, ErrorCode::domain,
          "bound needs epsilon >= 0 and T > 0");
  return 3.0 * std::sqrt(epsilon * horizon / (2.0 * std::numbers::pi));
}

std::vector<MixingState> sample_mixing_state(const MixtureSpec& spec, double t, double epsilon,
                                             const RngConfig& rng, std::size_t n) {
  require(t > 0.0 && t <= spec.horizon(), ErrorCode::domain, "time outside (0, T]");
  require(epsilon >= 0.0, ErrorCode::domain, "epsilon must be non-negative");
  const std::size_t nb = spec.branch_count();
  std::vector<double> var(nb), rate(nb), cdf(nb);
  double acc = 0.0;
  for (std::size_t i = 0; i < nb; ++i) {
    var[i] = cum_variance(spec, i, t);
    rate[i] = spec.component(i).rate.value_at(t);
    acc += spec.component(i).weight;
    cdf[i] = acc;
  }
  const double a_sd = std::sqrt(epsilon * t);
  std::vector<MixingState> out(n);
  parallel_for_ranges(n, rng.workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      PathRng pick(rng.seed, p, Substream::branch);
      PathRng b(rng.seed, p, Substream::brownian);
      PathRng z(rng.seed, p, Substream::auxiliary);
      const double u = pick.uniform();
      std::size_t i = 0;
      while (i + 1 < nb && u >= cdf[i]) ++i;
      out[p] = {-0.5 * var[i] + std::sqrt(var[i]) * b.normal(), var[i] + a_sd * z.normal(),
                rate[i]};
    }
  });
  return out;
}

std::vector<DlocBinRow> regression_check_dloc(const DoubleLocalSurface& surface, double t,
                                              std::span<const MixingState> samples,
                                              const DlocBins& bins) {
  require(bins.x_bins >= 1 && bins.a_bins >= 1, ErrorCode::invalid_argument,
          "need at least one bin per axis");
  require(!samples.empty(), ErrorCode::insufficient_data, "no samples");
  auto extent = [&](auto member) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& s : samples) {
      lo = std::min(lo, s.*member);
      hi = std::max(hi, s.*member);
    }
    if (hi == lo) hi = lo + 1.0;
    // widen by one ulp-ish margin so the maximum falls inside the last bin
    return std::pair{lo, hi + 1e-12 * std::max(1.0, std::abs(hi))};
  };
  const auto [x_lo, x_hi] = bins.x_range.value_or(extent(&MixingState::x));
  const auto [a_lo, a_hi] = bins.a_range.value_or(extent(&MixingState::a));
  require(x_hi > x_lo && a_hi > a_lo, ErrorCode::domain, "bin ranges are inverted");

  const auto slice = surface.slice(t);
  const std::size_t nb = surface.spec().branch_count();
  const std::size_t cells = bins.x_bins * bins.a_bins;
  std::vector<std::size_t> count(cells, 0);
  std::vector<double> sum_rate(cells, 0.0), sum_model(cells, 0.0), sum_var(cells, 0.0);
  std::vector<double> post(nb);
  const double dx = (x_hi - x_lo) / static_cast<double>(bins.x_bins);
  const double da = (a_hi - a_lo) / static_cast<double>(bins.a_bins);
  const auto rates = slice.rates();

  for (const auto& s : samples) {
    if (s.x < x_lo || s.x >= x_hi || s.a < a_lo || s.a >= a_hi) continue;
    const auto ix = std::min(static_cast<std::size_t>((s.x - x_lo) / dx), bins.x_bins - 1);
    const auto ia = std::min(static_cast<std::size_t>((s.a - a_lo) / da), bins.a_bins - 1);
    const std::size_t c = ix * bins.a_bins + ia;
    slice.posteriors(s.x, s.a, post);
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < nb; ++i) {
      m1 += post[i] * rates[i];
      m2 += post[i] * rates[i] * rates[i];
    }
    ++count[c];
    sum_rate[c] += s.rate;
    sum_model[c] += m1;
    sum_var[c] += std::max(m2 - m1 * m1, 0.0);
  }

  std::vector<DlocBinRow> rows;
  rows.reserve(cells);
  bool any = false;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t ix = 0; ix < bins.x_bins; ++ix) {
    for (std::size_t ia = 0; ia < bins.a_bins; ++ia) {
      const std::size_t c = ix * bins.a_bins + ia;
      DlocBinRow row{x_lo + dx * static_cast<double>(ix), x_lo + dx * static_cast<double>(ix + 1),
                     a_lo + da * static_cast<double>(ia), a_lo + da * static_cast<double>(ia + 1),
                     count[c], count[c] >= bins.min_count, nan, nan, nan, nan};
      if (row.populated) {
        any = true;
        const double n = static_cast<double>(count[c]);
        row.estimate = sum_rate[c] / n;
        row.analytic = sum_model[c] / n;
        row.analytic_center = slice(0.5 * (row.x_lo + row.x_hi), 0.5 * (row.a_lo + row.a_hi));
        row.std_error = std::sqrt(sum_var[c]) / n;
      }
      rows.push_back(row);
    }
  }
  require(any, ErrorCode::insufficient_data, "no bin reaches the minimum sample count");
  return rows;
}

std::string dloc_check_csv(std::span<const DlocBinRow> rows) {
  std::string out = "x_lo,x_hi,a_lo,a_hi,n,estimate,analytic,stderr\n";
  char buf[32];
  for (const auto& r : rows) {
    for (double v : {r.x_lo, r.x_hi, r.a_lo, r.a_hi}) {
      out += format_double(v, buf);
      out += ',';
    }
    out += std::to_string(r.n);
    if (r.populated) {
      for (double v : {r.estimate, r.analytic, r.std_error}) {
        out += ',';
        out += format_double(v, buf);
      }
    } else {
      out += ",,,";
    }
    out += '\n';
  }
  return out;
}

}  // namespace lvcx
