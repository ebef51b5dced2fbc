#include "lvcx/selftest.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <map>

#include "lvcx/bounds.hpp"
#include "lvcx/dlocalvol.hpp"
#include "lvcx/localvol.hpp"
#include "lvcx/mc.hpp"
#include "lvcx/mixture_model.hpp"
#include "lvcx/sde.hpp"

namespace lvcx {

namespace {

// Settings each criterion is specified at.
constexpr std::size_t kMixPaths = 100'000;
constexpr std::size_t kLvPaths = 200'000;
constexpr std::size_t kStepsPerUnit = 200;
constexpr std::size_t kVolSwapPaths = 3'000'000;
constexpr std::size_t kVolSwapStepsPerUnit = 100;
constexpr std::size_t kCorridorPaths = 1'000'000;
constexpr std::size_t kGuidedPaths = 10'000;
constexpr std::size_t kDlocSamples = 1'000'000;
constexpr std::size_t kAdaptedPaths = 100'000;
constexpr double kEpsilon = 1e-5;
constexpr double kVarianceStrike = 6.0;

const std::vector<CriterionInfo> kCriteria = {
    {1, "mixing-deterministic-variance",
     "mixing model: every path has realized variance exactly 6, variance call at 6 is exactly 0, < 1 s"},
    {2, "localvol-variance-call",
     "local vol, 2e5 paths, 200 steps/unit: E[(V-6)+] in [0.016, 0.036] and > 0 by >= 5 stderr, < 60 s"},
    {3, "localvol-variance-swap", "local vol: E[V] within 3 stderr of 6"},
    {4, "localvol-vol-swap", "local vol: E[sqrt(V)] < sqrt(6) by >= 3 stderr"},
    {5, "dupire-oracle",
     "finite-difference Dupire vs closed-form surface, max relative deviation <= 1e-3, < 10 s"},
    {6, "corridor-bound", "corridor lower bound in [6.4, 6.9], > 6, stable within 1e-2 under doubling"},
    {7, "corridor-hit", "1e6 stored local-vol paths: >= 1 corridor hit, every hit has V >= 6.4"},
    {8, "dlocalvol-marginals", "double local vol, eps = 1e-5: KS of X_t vs mixture CDF at t = 1, 2, 3 below 1% critical value"},
    {9, "dlocalvol-separation",
     "E[(V_eps-6)+] <= 3 sqrt(eps T / 2 pi) + 3 stderr, and below the local-vol value minus 3 stderr"},
    {10, "dloc-closed-form",
     "binned conditional expectations from 1e6 mixing samples match the closed form within 3 stderr in >= 95% of bins, t = 1.5, 2.5"},
    {11, "adapted-sign", "adapted-sign variant: KS at t = 1.5, 2, 3 below 1% critical value, V == 6 per path"},
    {12, "reproducibility", "criteria 2, 8, 9 bit-identical for 1, 4 and 16 workers"},
};

using Clock = std::chrono::steady_clock;

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

class Runner {
 public:
  explicit Runner(const SelftestOptions& opt)
      : opt_(opt), spec_(MixtureSpec::toy3()), lv_(spec_), dlv_(spec_, kEpsilon),
        grid_(build_grid(spec_, kStepsPerUnit)) {}

  std::size_t n(std::size_t specified) const { return opt_.paths.value_or(specified); }

  std::string hint(std::size_t specified) const {
    if (opt_.paths && *opt_.paths < specified)
      return fmt("insufficient n: ran %zu, criterion is specified at %zu", *opt_.paths, specified);
    return {};
  }

  RngConfig rng(unsigned workers) const { return {opt_.seed, workers}; }

  const SimBatch& lv_batch(unsigned workers) {
    auto& slot = lv_cache_[workers];
    if (!slot) {
      SimOptions o;
      o.rng = rng(workers);
      slot = simulate_localvol(lv_, grid_, n(kLvPaths), o);
    }
    return *slot;
  }

  const SimBatch& dlv_batch(unsigned workers) {
    auto& slot = dlv_cache_[workers];
    if (!slot) {
      SimOptions o;
      o.rng = rng(workers);
      o.record_times = {1.0, 2.0, 3.0};
      slot = simulate_double_localvol(dlv_, grid_, n(kLvPaths), o);
    }
    return *slot;
  }

  CriterionResult c1() {
    CriterionResult r;
    const auto t0 = Clock::now();
    SimOptions o;
    o.rng = rng(opt_.workers);
    const auto batch = simulate_mixing(spec_, build_grid(spec_, 1), n(kMixPaths), o);
    const bool all_six = std::all_of(batch.realized_variance.begin(), batch.realized_variance.end(),
                                     [](double v) { return v == 6.0; });
    const auto est = estimate_payoff(batch.realized_variance, Payoff::variance_call(kVarianceStrike));
    r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    r.passed = all_six && est.mean == 0.0 && est.std_error == 0.0 && r.seconds < 1.0;
    r.observed = fmt("all V == 6: %s, E[(V-6)+] = %g, stderr = %g, %.3f s", all_six ? "yes" : "no",
                     est.mean, est.std_error, r.seconds);
    r.tolerance = "exact; runtime < 1 s";
    return r;
  }

  CriterionResult c2() {
    CriterionResult r;
    const auto t0 = Clock::now();
    const auto& batch = lv_batch(opt_.workers);
    const auto est = estimate_payoff(batch.realized_variance, Payoff::variance_call(kVarianceStrike));
    r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    const double z = est.std_error > 0.0 ? est.mean / est.std_error : 0.0;
    r.passed = est.mean >= 0.016 && est.mean <= 0.036 && z >= 5.0 && r.seconds < 60.0;
    r.observed = fmt("E[(V-6)+] = %.6f, stderr = %.6f (%.1f stderr above 0), n = %zu, %.1f s",
                     est.mean, est.std_error, z, est.n, r.seconds);
    r.tolerance = "[0.016, 0.036], >= 5 stderr, < 60 s";
    r.hint = hint(kLvPaths);
    lv_call_ = est;
    return r;
  }

  CriterionResult c3() {
    CriterionResult r;
    const auto est = estimate_payoff(lv_batch(opt_.workers).realized_variance, Payoff::variance_swap());
    const double dev = std::abs(est.mean - 6.0);
    r.passed = dev <= 3.0 * est.std_error;
    r.observed = fmt("E[V] = %.6f, stderr = %.6f, |E[V] - 6| = %.2f stderr", est.mean, est.std_error,
                     est.std_error > 0 ? dev / est.std_error : 0.0);
    r.tolerance = "<= 3 stderr";
    r.hint = hint(kLvPaths);
    return r;
  }

  CriterionResult c4() {
    CriterionResult r;
    SimOptions o;
    o.rng = rng(opt_.workers);
    const auto batch = simulate_localvol(lv_, build_grid(spec_, kVolSwapStepsPerUnit),
                                         n(kVolSwapPaths), o);
    const auto est = estimate_payoff(batch.realized_variance, Payoff::vol_swap());
    const double gap = std::sqrt(6.0) - est.mean;
    const double z = est.std_error > 0 ? gap / est.std_error : 0.0;
    r.passed = z >= 3.0;
    r.observed = fmt("sqrt(6) - E[sqrt(V)] = %.3g, stderr = %.3g (%.2f stderr), n = %zu, %zu steps/unit",
                     gap, est.std_error, z, est.n, kVolSwapStepsPerUnit);
    r.tolerance = ">= 3 stderr";
    r.hint = hint(kVolSwapPaths);
    return r;
  }

  CriterionResult c5() {
    CriterionResult r;
    const auto t0 = Clock::now();
    double worst = 0.0, worst_t = 0.0, worst_x = 0.0;
    for (double t : {0.3, 0.7, 1.3, 1.7, 2.3, 2.7}) {
      for (int j = 0; j <= 80; ++j) {
        const double x = -2.0 + 4.0 * j / 80.0;
        const double closed = lv_(t, x);
        const double fd = dupire_sigma_sq(spec_, t, std::exp(x));
        const double rel = std::abs(fd - closed) / closed;
        if (rel > worst) {
          worst = rel;
          worst_t = t;
          worst_x = x;
        }
      }
    }
    r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    r.passed = worst <= 1e-3 && r.seconds < 10.0;
    r.observed = fmt("max relative deviation %.3g at T = %g, log K = %g; %.2f s", worst, worst_t,
                     worst_x, r.seconds);
    r.tolerance = "<= 1e-3, < 10 s";
    return r;
  }

  CriterionResult c6() {
    CriterionResult r;
    const auto corridor = CorridorSpec::paper_corridor();
    const double base = corridor_lower_bound(lv_, corridor, {1000, 1000}).value;
    const double fine = corridor_lower_bound(lv_, corridor, {2000, 2000}).value;
    r.passed = base >= 6.4 && base <= 6.9 && base > 6.0 && std::abs(fine - base) <= 1e-2;
    r.observed = fmt("bound = %.6f (doubled resolution %.6f, change %.2g)", base, fine,
                     std::abs(fine - base));
    r.tolerance = "[6.4, 6.9], > 6, change <= 1e-2";
    return r;
  }

  std::vector<CriterionResult> c7() {
    CriterionResult r;
    const auto corridor = CorridorSpec::paper_corridor();
    const auto hits = corridor_hit_scan(lv_, grid_, corridor, n(kCorridorPaths), rng(opt_.workers));
    const double min_v = hits.hits ? *std::min_element(hits.hit_realized_variance.begin(),
                                                       hits.hit_realized_variance.end())
                                   : std::nan("");
    r.passed = hits.hits >= 1 && min_v >= 6.4;
    r.observed = fmt("%zu hits in %zu paths (99%% upper bound on hit probability %.3g)%s", hits.hits,
                     hits.n, hits.estimate.ci_hi,
                     hits.hits ? fmt(", min hit V = %.4f", min_v).c_str() : "");
    r.tolerance = ">= 1 hit, every hit V >= 6.4";
    r.hint = hint(kCorridorPaths);

    CriterionResult s;
    s.supplementary = true;
    const auto guided = corridor_guided_scan(lv_, grid_, corridor, n(kGuidedPaths), rng(opt_.workers));
    s.passed = guided.hits > 0 && guided.min_hit_variance >= 6.4;
    s.observed = fmt("importance sampling: %zu of %zu steered paths hit, P(hit) ~ 10^%.1f "
                     "(rel. error %.2f), min hit V = %.4f",
                     guided.hits, guided.n, guided.log10_probability, guided.relative_error,
                     guided.min_hit_variance);
    s.tolerance = "hit probability > 0, every hit V >= 6.4";
    if (r.passed == false && guided.hits > 0)
      r.hint = fmt("the corridor has probability ~10^%.0f, far beyond reach of %zu plain paths",
                   guided.log10_probability, hits.n);
    return {r, s};
  }

  CriterionResult c8() {
    CriterionResult r;
    const auto& batch = dlv_batch(opt_.workers);
    r.passed = true;
    std::string obs;
    for (double t : {1.0, 2.0, 3.0}) {
      const auto ks = ks_statistic(batch.recorded(t), [&](double x) { return marginal_cdf_x(spec_, t, x); });
      r.passed = r.passed && ks.passes_1pct();
      obs += fmt("%st=%g: D=%.5f (crit %.5f)", obs.empty() ? "" : ", ", t, ks.statistic, ks.critical_1pct);
    }
    r.observed = obs;
    r.tolerance = "D < 1.63/sqrt(n) at every t";
    r.hint = hint(kLvPaths);
    return r;
  }

  CriterionResult c9() {
    CriterionResult r;
    const auto est = estimate_payoff(dlv_batch(opt_.workers).realized_variance,
                                     Payoff::variance_call(kVarianceStrike));
    if (!lv_call_)
      lv_call_ = estimate_payoff(lv_batch(opt_.workers).realized_variance,
                                 Payoff::variance_call(kVarianceStrike));
    const double bound = bound_constant(kEpsilon, spec_.horizon());
    const double lv_floor = lv_call_->mean - 3.0 * lv_call_->std_error;
    const bool under_bound = est.mean <= bound + 3.0 * est.std_error;
    const bool separated = est.mean + 3.0 * est.std_error < lv_floor && bound < lv_floor;
    r.passed = under_bound && separated;
    r.observed = fmt("E[(V_eps-6)+] = %.6f, stderr = %.2g; bound = %.6f; local vol %.6f - 3 stderr = %.6f",
                     est.mean, est.std_error, bound, lv_call_->mean, lv_floor);
    r.tolerance = "<= bound + 3 stderr; mean + 3 stderr and bound < local-vol floor";
    r.hint = hint(kLvPaths);
    return r;
  }

  CriterionResult c10() {
    CriterionResult r;
    r.passed = true;
    std::string obs;
    for (double eps : {kEpsilon, 0.05}) {
      const DoubleLocalSurface surface(spec_, eps);
      for (double t : {1.5, 2.5}) {
        const auto samples = sample_mixing_state(spec_, t, eps, rng(opt_.workers), n(kDlocSamples));
        const auto rows = regression_check_dloc(surface, t, samples, DlocBins{});
        std::size_t populated = 0, ok = 0;
        for (const auto& row : rows) {
          if (!row.populated) continue;
          ++populated;
          if (std::abs(row.estimate - row.analytic) <= 3.0 * row.std_error + 1e-12) ++ok;
        }
        const double frac = static_cast<double>(ok) / static_cast<double>(populated);
        r.passed = r.passed && frac >= 0.95;
        obs += fmt("%seps=%g t=%g: %zu/%zu bins", obs.empty() ? "" : ", ", eps, t, ok, populated);
      }
    }
    r.observed = obs;
    r.tolerance = ">= 95% of populated bins within 3 stderr";
    r.hint = hint(kDlocSamples);
    return r;
  }

  CriterionResult c11() {
    CriterionResult r;
    const auto batch = adapted_sign_simulate(spec_, build_grid(spec_, 2), rng(opt_.workers), n(kAdaptedPaths));
    const bool all_six = std::all_of(batch.realized_variance.begin(), batch.realized_variance.end(),
                                     [](double v) { return v == 6.0; });
    r.passed = all_six;
    std::string obs = fmt("all V == 6: %s", all_six ? "yes" : "no");
    for (double t : {1.5, 2.0, 3.0}) {
      const auto ks = ks_statistic(batch.column(t), [&](double x) { return marginal_cdf_x(spec_, t, x); });
      r.passed = r.passed && ks.passes_1pct();
      obs += fmt(", t=%g: D=%.5f (crit %.5f)", t, ks.statistic, ks.critical_1pct);
    }
    r.observed = obs;
    r.tolerance = "exact V; D < 1.63/sqrt(n)";
    r.hint = hint(kAdaptedPaths);
    return r;
  }

  CriterionResult c12() {
    CriterionResult r;
    const auto call = Payoff::variance_call(kVarianceStrike);
    const auto& lv_ref = lv_batch(1);
    const auto& dlv_ref = dlv_batch(1);
    const auto lv_est = estimate_payoff(lv_ref.realized_variance, call);
    const auto dlv_est = estimate_payoff(dlv_ref.realized_variance, call);
    bool same = true;
    for (unsigned w : {4u, 16u}) {
      const auto& lv = lv_batch(w);
      const auto& dlv = dlv_batch(w);
      const auto e1 = estimate_payoff(lv.realized_variance, call);
      const auto e2 = estimate_payoff(dlv.realized_variance, call);
      same = same && same_bits(lv.realized_variance, lv_ref.realized_variance) &&
             same_bits(lv.terminal_x, lv_ref.terminal_x) && same_bits(e1.mean, lv_est.mean) &&
             same_bits(e1.std_error, lv_est.std_error) &&
             same_bits(dlv.realized_variance, dlv_ref.realized_variance) &&
             same_bits(dlv.recorded_x, dlv_ref.recorded_x) &&
             same_bits(dlv.terminal_a, dlv_ref.terminal_a) && same_bits(e2.mean, dlv_est.mean) &&
             same_bits(e2.std_error, dlv_est.std_error);
    }
    r.passed = same;
    r.observed = fmt("workers 1/4/16 %s (local vol %.17g, double local vol %.17g)",
                     same ? "bit-identical" : "DIFFER", lv_est.mean, dlv_est.mean);
    r.tolerance = "bit-identical";
    return r;
  }

 private:
  SelftestOptions opt_;
  MixtureSpec spec_;
  LocalVolSurface lv_;
  DoubleLocalSurface dlv_;
  TimeGrid grid_;
  std::optional<McEstimate> lv_call_;
  std::map<unsigned, std::optional<SimBatch>> lv_cache_;
  std::map<unsigned, std::optional<SimBatch>> dlv_cache_;
};

}  // namespace

const std::vector<CriterionInfo>& selftest_criteria() { return kCriteria; }

std::vector<CriterionResult> run_selftest(
    const SelftestOptions& options, const std::function<void(const CriterionResult&)>& on_result) {
  Runner runner(options);
  std::vector<CriterionResult> results;
  auto emit = [&](CriterionResult r, const CriterionInfo& info) {
    r.id = info.id;
    if (r.name.empty()) r.name = r.supplementary ? info.name + "-importance-sampling" : info.name;
    if (on_result) on_result(r);
    results.push_back(std::move(r));
  };
  for (const auto& info : kCriteria) {
    if (!options.only.empty() &&
        std::find(options.only.begin(), options.only.end(), info.id) == options.only.end())
      continue;
    const auto t0 = Clock::now();
    std::vector<CriterionResult> out;
    try {
      switch (info.id) {
        case 1: out = {runner.c1()}; break;
        case 2: out = {runner.c2()}; break;
        case 3: out = {runner.c3()}; break;
        case 4: out = {runner.c4()}; break;
        case 5: out = {runner.c5()}; break;
        case 6: out = {runner.c6()}; break;
        case 7: out = runner.c7(); break;
        case 8: out = {runner.c8()}; break;
        case 9: out = {runner.c9()}; break;
        case 10: out = {runner.c10()}; break;
        case 11: out = {runner.c11()}; break;
        case 12: out = {runner.c12()}; break;
      }
    } catch (const std::exception& e) {
      CriterionResult r;
      r.passed = false;
      r.observed = std::string("error: ") + e.what();
      r.hint = runner.hint(1'000'000);
      out = {r};
    }
    const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
    for (auto& r : out) {
      if (r.seconds == 0.0) r.seconds = elapsed;
      emit(std::move(r), info);
    }
  }
  return results;
}

std::string format_result(const CriterionResult& r) {
  std::string out = r.supplementary ? (r.passed ? "INFO" : "WARN") : (r.passed ? "PASS" : "FAIL");
  out += fmt("  [%2d] %s: %s (tolerance: %s)", r.id, r.name.c_str(), r.observed.c_str(),
             r.tolerance.c_str());
  if (!r.hint.empty()) out += " -- " + r.hint;
  return out;
}

}  // namespace lvcx
