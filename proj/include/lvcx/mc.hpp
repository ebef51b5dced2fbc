#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lvcx {

/// f(V) for a payoff written on realized variance V.
class Payoff {
 public:
  enum class Kind { variance_swap, variance_call, vol_swap, tabulated };

  static Payoff variance_swap() { return Payoff(Kind::variance_swap); }
  static Payoff variance_call(double strike);
  static Payoff vol_swap() { return Payoff(Kind::vol_swap); }
  /// Piecewise-linear convex function through (knots[k], values[k]), extended
  /// linearly beyond the end knots.
  static Payoff tabulated(std::vector<double> knots, std::vector<double> values);
  static Payoff parse(std::string_view name, double strike);

  Kind kind() const noexcept { return kind_; }
  double strike() const noexcept { return strike_; }
  std::string_view name() const noexcept;

  double operator()(double v) const;

 private:
  explicit Payoff(Kind k) : kind_(k) {}

  Kind kind_;
  double strike_ = 0.0;
  std::vector<double> knots_;
  std::vector<double> values_;
};

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
  double ci_lo = 0.0;  // 99% normal interval
  double ci_hi = 0.0;
};

inline constexpr double kZ99 = 2.576;

/// Mean and standard error of a sample; summation is pairwise so the result
/// depends only on the sample order.
McEstimate estimate_mean(std::span<const double> values);

McEstimate estimate_payoff(std::span<const double> realized_variance, const Payoff& payoff);

/// "payoff=<kind> strike=<K> mean=.. stderr=.. n=.. ci99_lo=.. ci99_hi=.."
std::string estimate_record(const Payoff& payoff, const McEstimate& est);

struct KsResult {
  double statistic = 0.0;
  std::size_t n = 0;
  double critical_1pct = 0.0;  // 1.63 / sqrt(n)
  double critical_5pct = 0.0;  // 1.36 / sqrt(n)

  bool passes_1pct() const noexcept { return statistic < critical_1pct; }
  bool passes_5pct() const noexcept { return statistic < critical_5pct; }
};

/// One-sample Kolmogorov-Smirnov distance sup |F_n - F| with asymptotic
/// critical values. Needs n >= 100 finite samples.
KsResult ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf);

struct Histogram {
  struct Bin {
    double lo;
    double hi;
    std::size_t count;
    double frequency;
  };
  std::vector<Bin> bins;
  std::size_t underflow = 0;
  std::size_t overflow = 0;
  std::size_t total = 0;
};

/// Equal-width bins on [lo, hi] (the last bin is closed); samples outside
/// land in the underflow/overflow counts so frequencies still sum to 1.
Histogram histogram(std::span<const double> samples, std::size_t n_bins, double lo, double hi);

/// CSV "bin_lo,bin_hi,count,frequency"; under/overflow rows use -inf/inf edges.
std::string histogram_csv(const Histogram& h);

}  // namespace lvcx
