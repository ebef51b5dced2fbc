#include "lvcx/mc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lvcx/error.hpp"
#include "lvcx/numerics.hpp"

namespace lvcx {

Payoff Payoff::variance_call(double strike) {
  require(strike >= 0.0 && std::isfinite(strike), ErrorCode::invalid_argument,
          "variance strike must be non-negative");
  Payoff p(Kind::variance_call);
  p.strike_ = strike;
  return p;
}

Payoff Payoff::tabulated(std::vector<double> knots, std::vector<double> values) {
  require(knots.size() >= 2 && knots.size() == values.size(), ErrorCode::invalid_argument,
          "tabulated payoff needs matching knots and values (at least two)");
  for (std::size_t k = 1; k < knots.size(); ++k)
    require(knots[k] > knots[k - 1], ErrorCode::invalid_argument,
            "tabulated payoff knots must be strictly increasing");
  for (std::size_t k = 2; k < knots.size(); ++k) {
    const double s0 = (values[k - 1] - values[k - 2]) / (knots[k - 1] - knots[k - 2]);
    const double s1 = (values[k] - values[k - 1]) / (knots[k] - knots[k - 1]);
    require(s1 >= s0 - 1e-12 * std::max(1.0, std::abs(s0)), ErrorCode::invalid_argument,
            "tabulated payoff must be convex");
  }
  Payoff p(Kind::tabulated);
  p.knots_ = std::move(knots);
  p.values_ = std::move(values);
  return p;
}

Payoff Payoff::parse(std::string_view name, double strike) {
  if (name == "varswap") return variance_swap();
  if (name == "varcall") return variance_call(strike);
  if (name == "volswap") return vol_swap();
  fail(ErrorCode::config, "unknown payoff '" + std::string(name) + "'");
}

std::string_view Payoff::name() const noexcept {
  switch (kind_) {
    case Kind::variance_swap: return "varswap";
    case Kind::variance_call: return "varcall";
    case Kind::vol_swap: return "volswap";
    case Kind::tabulated: return "tabulated";
  }
  return "?";
}

double Payoff::operator()(double v) const {
  switch (kind_) {
    case Kind::variance_swap: return v;
    case Kind::variance_call: return std::max(v - strike_, 0.0);
    case Kind::vol_swap:
      require(v >= 0.0, ErrorCode::domain, "negative realized variance passed to a vol swap");
      return std::sqrt(v);
    case Kind::tabulated: {
      auto it = std::upper_bound(knots_.begin(), knots_.end(), v);
      std::size_t k = static_cast<std::size_t>(it - knots_.begin());
      k = std::clamp<std::size_t>(k, 1, knots_.size() - 1);
      const double s = (values_[k] - values_[k - 1]) / (knots_[k] - knots_[k - 1]);
      return values_[k - 1] + s * (v - knots_[k - 1]);
    }
  }
  return 0.0;
}

McEstimate estimate_mean(std::span<const double> values) {
  require(values.size() >= 2, ErrorCode::insufficient_data, "need at least two samples");
  const double n = static_cast<double>(values.size());
  const double mean = pairwise_sum(values) / n;
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - mean;
    sq[i] = d * d;
  }
  const double var = pairwise_sum(sq) / (n - 1.0);
  McEstimate est;
  est.mean = mean;
  est.std_error = std::sqrt(var / n);
  est.n = values.size();
  est.ci_lo = mean - kZ99 * est.std_error;
  est.ci_hi = mean + kZ99 * est.std_error;
  return est;
}

McEstimate estimate_payoff(std::span<const double> realized_variance, const Payoff& payoff) {
  std::vector<double> f(realized_variance.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = payoff(realized_variance[i]);
  return estimate_mean(f);
}

std::string estimate_record(const Payoff& payoff, const McEstimate& est) {
  char buf[32];
  std::string out = "payoff=" + std::string(payoff.name());
  out += " strike=";
  out += format_double(payoff.strike(), buf);
  out += " mean=";
  out += format_double(est.mean, buf);
  out += " stderr=";
  out += format_double(est.std_error, buf);
  out += " n=" + std::to_string(est.n);
  out += " ci99_lo=";
  out += format_double(est.ci_lo, buf);
  out += " ci99_hi=";
  out += format_double(est.ci_hi, buf);
  return out;
}

KsResult ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf) {
  require(samples.size() >= 100, ErrorCode::insufficient_data,
          "KS asymptotic critical values need n >= 100");
  std::vector<double> sorted(samples.begin(), samples.end());
  for (double v : sorted) require(std::isfinite(v), ErrorCode::data, "non-finite sample");
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return {d, sorted.size(), 1.63 / std::sqrt(n), 1.36 / std::sqrt(n)};
}

Histogram histogram(std::span<const double> samples, std::size_t n_bins, double lo, double hi) {
  require(n_bins >= 1, ErrorCode::invalid_argument, "need at least one bin");
  require(std::isfinite(lo) && std::isfinite(hi) && hi > lo, ErrorCode::domain,
          "histogram range is inverted or empty");
  Histogram h;
  h.total = samples.size();
  std::vector<std::size_t> counts(n_bins, 0);
  const double width = (hi - lo) / static_cast<double>(n_bins);
  for (double v : samples) {
    if (v < lo || std::isnan(v)) {
      ++h.underflow;
    } else if (v > hi) {
      ++h.overflow;
    } else {
      auto k = static_cast<std::size_t>((v - lo) / width);
      ++counts[std::min(k, n_bins - 1)];
    }
  }
  const double n = std::max<double>(1.0, static_cast<double>(h.total));
  for (std::size_t k = 0; k < n_bins; ++k) {
    const double b_lo = lo + width * static_cast<double>(k);
    const double b_hi = k + 1 == n_bins ? hi : lo + width * static_cast<double>(k + 1);
    h.bins.push_back({b_lo, b_hi, counts[k], static_cast<double>(counts[k]) / n});
  }
  return h;
}

std::string histogram_csv(const Histogram& h) {
  char buf[32];
  const double n = std::max<double>(1.0, static_cast<double>(h.total));
  std::string out = "bin_lo,bin_hi,count,frequency\n";
  auto row = [&](double lo, double hi, std::size_t c) {
    out += std::isinf(lo) ? std::string("-inf") : std::string(format_double(lo, buf));
    out += ',';
    out += std::isinf(hi) ? std::string("inf") : std::string(format_double(hi, buf));
    out += ',' + std::to_string(c) + ',';
    out += format_double(static_cast<double>(c) / n, buf);
    out += '\n';
  };
  const double inf = std::numeric_limits<double>::infinity();
  row(-inf, h.bins.front().lo, h.underflow);
  for (const auto& b : h.bins) row(b.lo, b.hi, b.count);
  row(h.bins.back().hi, inf, h.overflow);
  return out;
}

}  // namespace lvcx
