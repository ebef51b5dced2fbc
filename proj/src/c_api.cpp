#include "lvcx/lvcx.h"

#include <cmath>
#include <exception>
#include <memory>
#include <new>
#include <string>
#include <utility>

#include "lvcx/bounds.hpp"
#include "lvcx/dlocalvol.hpp"
#include "lvcx/error.hpp"
#include "lvcx/localvol.hpp"
#include "lvcx/mc.hpp"
#include "lvcx/mixture_model.hpp"
#include "lvcx/sde.hpp"
#include "lvcx/selftest.hpp"

struct lvcx_model {
  lvcx::MixtureSpec spec;
};

struct lvcx_batch {
  lvcx::SimBatch batch;
};

struct lvcx_text {
  std::string value;
};

namespace {

thread_local std::string g_last_error;

lvcx_status set_error(lvcx_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <class F>
lvcx_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return LVCX_OK;
  } catch (const lvcx::Error& e) {
    return set_error(static_cast<lvcx_status>(static_cast<int>(e.code())), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(LVCX_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(LVCX_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(LVCX_ERR_INTERNAL, "unknown exception");
  }
}

#define LVCX_REQUIRE_ARG(p)                                                  \
  do {                                                                       \
    if (!(p)) return set_error(LVCX_ERR_NULL_ARGUMENT, "null argument: " #p); \
  } while (0)

lvcx_text* make_text(std::string s) { return new lvcx_text{std::move(s)}; }

lvcx::Payoff to_payoff(lvcx_payoff_kind kind, double strike) {
  switch (kind) {
    case LVCX_PAYOFF_VARSWAP: return lvcx::Payoff::variance_swap();
    case LVCX_PAYOFF_VARCALL: return lvcx::Payoff::variance_call(strike);
    case LVCX_PAYOFF_VOLSWAP: return lvcx::Payoff::vol_swap();
  }
  lvcx::fail(lvcx::ErrorCode::invalid_argument, "unknown payoff kind");
}

lvcx_status view(const std::vector<double>& v, const double** data, size_t* n) {
  *data = v.data();
  *n = v.size();
  return LVCX_OK;
}

}  // namespace

extern "C" {

const char* lvcx_version(void) { return LVCX_VERSION; }

const char* lvcx_last_error(void) { return g_last_error.c_str(); }

const char* lvcx_status_name(lvcx_status status) {
  switch (status) {
    case LVCX_OK: return "ok";
    case LVCX_ERR_DOMAIN: return "domain";
    case LVCX_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case LVCX_ERR_INVALID_MODEL: return "invalid_model";
    case LVCX_ERR_CONFIG: return "config";
    case LVCX_ERR_DATA: return "data";
    case LVCX_ERR_DEGENERATE: return "degenerate";
    case LVCX_ERR_ILL_CONDITIONED: return "ill_conditioned";
    case LVCX_ERR_INSUFFICIENT_DATA: return "insufficient_data";
    case LVCX_ERR_IO: return "io";
    case LVCX_ERR_NULL_ARGUMENT: return "null_argument";
    case LVCX_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* lvcx_text_data(const lvcx_text* text) { return text ? text->value.c_str() : ""; }
size_t lvcx_text_size(const lvcx_text* text) { return text ? text->value.size() : 0; }
void lvcx_text_free(lvcx_text* text) { delete text; }

lvcx_status lvcx_model_preset(const char* name, lvcx_model** out) {
  LVCX_REQUIRE_ARG(name);
  LVCX_REQUIRE_ARG(out);
  return guarded([&] { *out = new lvcx_model{lvcx::MixtureSpec::preset(name)}; });
}

lvcx_status lvcx_model_parse(const char* text, lvcx_model** out) {
  LVCX_REQUIRE_ARG(text);
  LVCX_REQUIRE_ARG(out);
  return guarded([&] { *out = new lvcx_model{lvcx::MixtureSpec::parse(text)}; });
}

lvcx_status lvcx_model_load(const char* path, lvcx_model** out) {
  LVCX_REQUIRE_ARG(path);
  LVCX_REQUIRE_ARG(out);
  return guarded([&] { *out = new lvcx_model{lvcx::MixtureSpec::load(path)}; });
}

void lvcx_model_free(lvcx_model* model) { delete model; }

lvcx_status lvcx_model_text(const lvcx_model* model, lvcx_text** out) {
  LVCX_REQUIRE_ARG(model);
  LVCX_REQUIRE_ARG(out);
  return guarded([&] { *out = make_text(model->spec.to_text()); });
}

uint64_t lvcx_model_fingerprint(const lvcx_model* model) {
  return model ? model->spec.fingerprint() : 0;
}

double lvcx_model_horizon(const lvcx_model* model) { return model ? model->spec.horizon() : 0.0; }

size_t lvcx_model_branch_count(const lvcx_model* model) {
  return model ? model->spec.branch_count() : 0;
}

lvcx_status lvcx_cum_variance(const lvcx_model* model, size_t branch, double t, double* out) {
  LVCX_REQUIRE_ARG(model);
  LVCX_REQUIRE_ARG(out);
  return guarded([&] {
    lvcx::require(branch < model->spec.branch_count(), lvcx::ErrorCode::invalid_argument,
                  "branch index out of range");
    *out = lvcx::cum_variance(model->spec, branch, t);
  });
}

lvcx_status lvcx_marginal_cdf(const lvcx_model* model, double t, double x, double* out) {
  LVCX_REQUIRE_ARG(model);
  LVCX_REQUIRE_ARG(out);
  return guarded([&] { *out = lvcx::marginal_cdf_x(model->spec, t, x); });
}

lvcx_status lvcx_sigma_loc_sq(const lvcx_model* model, double t, double x, double* out) {
  LVCX_REQUIRE_ARG(model);
  LVCX_REQUIRE_ARG(out);
  return guarded([&] { *out = lvcx::sigma_loc_sq(lvcx::LocalVolSurface(model->spec), t, x); });
}

lvcx_status lvcx_sigma_dloc_sq(const lvcx_model* model, double epsilon, double t, double x,
                               double a, double* out) {
  LVCX_REQUIRE_ARG(model);
  LVCX_REQUIRE_ARG(out);
  return guarded([&] {
    *out = lvcx::sigma_dloc_sq(lvcx::DoubleLocalSurface(model->spec, epsilon), t, x, a);
  });
}

lvcx_status lvcx_call_price(const lvcx_model* model, double maturity, double strike, double* out) {
  LVCX_REQUIRE_ARG(model);
  LVCX_REQUIRE_ARG(out);
  return guarded([&] { *out = lvcx::call_price_mixture(model->spec, maturity, strike).price; });
}

lvcx_status lvcx_dupire_sigma_sq(const lvcx_model* model, double maturity, double strike,
                                 double h_t, double rel_h_k, double* out) {
  LVCX_REQUIRE_ARG(model);
  LVCX_REQUIRE_ARG(out);
  return guarded([&] {
    lvcx::DupireSteps steps;
    if (h_t > 0) steps.time = h_t;
    if (rel_h_k > 0) steps.rel_strike = rel_h_k;
    *out = lvcx::dupire_sigma_sq(model->spec, maturity, strike, steps);
  });
}

lvcx_status lvcx_bound_constant(double epsilon, double horizon, double* out) {
  LVCX_REQUIRE_ARG(out);
  return guarded([&] { *out = lvcx::bound_constant(epsilon, horizon); });
}

lvcx_status lvcx_surface_csv(const lvcx_model* model, const lvcx_range* t, const lvcx_range* x,
                             unsigned workers, lvcx_text** out) {
  LVCX_REQUIRE_ARG(model);
  LVCX_REQUIRE_ARG(t);
  LVCX_REQUIRE_ARG(x);
  LVCX_REQUIRE_ARG(out);
  return guarded([&] {
    auto points = lvcx::surface_grid(lvcx::LocalVolSurface(model->spec), {t->lo, t->hi, t->count},
                                     {x->lo, x->hi, x->count}, workers == 0 ? 1 : workers);
    *out = make_text(lvcx::surface_csv(points));
  });
}

lvcx_status lvcx_simulate(const lvcx_model* model, const lvcx_sim_config* config,
                          lvcx_batch** out) {
  LVCX_REQUIRE_ARG(model);
  LVCX_REQUIRE_ARG(config);
  LVCX_REQUIRE_ARG(out);
  return guarded([&] {
    lvcx::require(config->steps_per_unit > 0, lvcx::ErrorCode::invalid_argument,
                  "steps_per_unit must be positive");
    lvcx::require(config->n_paths > 0, lvcx::ErrorCode::invalid_argument,
                  "n_paths must be positive");
    const auto grid = lvcx::build_grid(model->spec, config->steps_per_unit);
    lvcx::SimOptions opts;
    opts.rng = {config->seed, config->workers == 0 ? 1u : config->workers};
    auto result = std::make_unique<lvcx_batch>();
    switch (config->kind) {
      case LVCX_MODEL_MIXING:
        result->batch = lvcx::simulate_mixing(model->spec, grid, config->n_paths, opts);
        break;
      case LVCX_MODEL_LOCALVOL:
        result->batch = lvcx::simulate_localvol(lvcx::LocalVolSurface(model->spec), grid,
                                                config->n_paths, opts);
        break;
      case LVCX_MODEL_DLOCALVOL:
        result->batch = lvcx::simulate_double_localvol(
            lvcx::DoubleLocalSurface(model->spec, config->epsilon), grid, config->n_paths, opts);
        break;
      default:
        lvcx::fail(lvcx::ErrorCode::invalid_argument, "unknown model kind");
    }
    *out = result.release();
  });
}

void lvcx_batch_free(lvcx_batch* batch) { delete batch; }

size_t lvcx_batch_size(const lvcx_batch* batch) { return batch ? batch->batch.path_count() : 0; }

lvcx_status lvcx_batch_realized_variance(const lvcx_batch* batch, const double** data, size_t* n) {
  LVCX_REQUIRE_ARG(batch);
  LVCX_REQUIRE_ARG(data);
  LVCX_REQUIRE_ARG(n);
  return view(batch->batch.realized_variance, data, n);
}

lvcx_status lvcx_batch_terminal_x(const lvcx_batch* batch, const double** data, size_t* n) {
  LVCX_REQUIRE_ARG(batch);
  LVCX_REQUIRE_ARG(data);
  LVCX_REQUIRE_ARG(n);
  return view(batch->batch.terminal_x, data, n);
}

lvcx_status lvcx_batch_terminal_a(const lvcx_batch* batch, const double** data, size_t* n) {
  LVCX_REQUIRE_ARG(batch);
  LVCX_REQUIRE_ARG(data);
  LVCX_REQUIRE_ARG(n);
  if (batch->batch.kind != lvcx::ModelKind::dlocalvol)
    return set_error(LVCX_ERR_INVALID_ARGUMENT, "batch has no auxiliary variable");
  return view(batch->batch.terminal_a, data, n);
}

lvcx_status lvcx_batch_records(const lvcx_batch* batch, lvcx_text** out) {
  LVCX_REQUIRE_ARG(batch);
  LVCX_REQUIRE_ARG(out);
  return guarded([&] { *out = make_text(lvcx::batch_records(batch->batch)); });
}

lvcx_status lvcx_estimate_payoff(const double* samples, size_t n, lvcx_payoff_kind payoff,
                                 double strike, lvcx_estimate* out) {
  LVCX_REQUIRE_ARG(samples);
  LVCX_REQUIRE_ARG(out);
  return guarded([&] {
    const auto e = lvcx::estimate_payoff({samples, n}, to_payoff(payoff, strike));
    *out = {e.mean, e.std_error, e.n, e.ci_lo, e.ci_hi};
  });
}

lvcx_status lvcx_estimate_record(lvcx_payoff_kind payoff, double strike,
                                 const lvcx_estimate* estimate, lvcx_text** out) {
  LVCX_REQUIRE_ARG(estimate);
  LVCX_REQUIRE_ARG(out);
  return guarded([&] {
    lvcx::McEstimate e{estimate->mean, estimate->std_error, estimate->n, estimate->ci_lo,
                       estimate->ci_hi};
    *out = make_text(lvcx::estimate_record(to_payoff(payoff, strike), e));
  });
}

lvcx_status lvcx_histogram_csv(const double* samples, size_t n, size_t n_bins, double lo,
                               double hi, lvcx_text** out) {
  LVCX_REQUIRE_ARG(samples);
  LVCX_REQUIRE_ARG(out);
  return guarded(
      [&] { *out = make_text(lvcx::histogram_csv(lvcx::histogram({samples, n}, n_bins, lo, hi))); });
}

lvcx_status lvcx_ks_marginal(const lvcx_model* model, double t, const double* samples, size_t n,
                             double* statistic, double* critical_1pct) {
  LVCX_REQUIRE_ARG(model);
  LVCX_REQUIRE_ARG(samples);
  LVCX_REQUIRE_ARG(statistic);
  return guarded([&] {
    const auto& spec = model->spec;
    const auto ks = lvcx::ks_statistic({samples, n},
                                       [&](double x) { return lvcx::marginal_cdf_x(spec, t, x); });
    *statistic = ks.statistic;
    if (critical_1pct) *critical_1pct = ks.critical_1pct;
  });
}

lvcx_status lvcx_corridor_bound(const lvcx_model* model, const char* corridor, double t_per_unit,
                                double x_per_unit, double* value, lvcx_text** report) {
  LVCX_REQUIRE_ARG(model);
  LVCX_REQUIRE_ARG(corridor);
  LVCX_REQUIRE_ARG(value);
  return guarded([&] {
    const auto spec = lvcx::CorridorSpec::preset(corridor);
    const auto r = lvcx::corridor_lower_bound(lvcx::LocalVolSurface(model->spec), spec,
                                              {t_per_unit, x_per_unit});
    *value = r.value;
    if (report) *report = make_text(lvcx::bound_report_text(spec, r));
  });
}

lvcx_status lvcx_dloc_check(const lvcx_model* model, const lvcx_dloc_check_config* config,
                            lvcx_text** csv, size_t* populated, size_t* within_3se) {
  LVCX_REQUIRE_ARG(model);
  LVCX_REQUIRE_ARG(config);
  return guarded([&] {
    lvcx::DoubleLocalSurface surface(model->spec, config->epsilon);
    const auto samples = lvcx::sample_mixing_state(
        model->spec, config->t, config->epsilon,
        {config->seed, config->workers == 0 ? 1u : config->workers}, config->n_samples);
    lvcx::DlocBins bins;
    if (config->x_bins) bins.x_bins = config->x_bins;
    if (config->a_bins) bins.a_bins = config->a_bins;
    if (config->min_count) bins.min_count = config->min_count;
    const auto rows = lvcx::regression_check_dloc(surface, config->t, samples, bins);
    size_t pop = 0, ok = 0;
    for (const auto& r : rows) {
      if (!r.populated) continue;
      ++pop;
      if (std::abs(r.estimate - r.analytic) <= 3.0 * r.std_error + 1e-12) ++ok;
    }
    if (populated) *populated = pop;
    if (within_3se) *within_3se = ok;
    if (csv) *csv = make_text(lvcx::dloc_check_csv(rows));
  });
}

size_t lvcx_selftest_count(void) { return lvcx::selftest_criteria().size(); }

lvcx_status lvcx_selftest_info(size_t index, int* id, const char** name, const char** summary) {
  const auto& all = lvcx::selftest_criteria();
  if (index >= all.size()) return set_error(LVCX_ERR_INVALID_ARGUMENT, "criterion index out of range");
  if (id) *id = all[index].id;
  if (name) *name = all[index].name.c_str();
  if (summary) *summary = all[index].summary.c_str();
  return LVCX_OK;
}

lvcx_status lvcx_selftest_run(const lvcx_selftest_config* config, lvcx_selftest_callback callback,
                              void* user, int* all_passed) {
  LVCX_REQUIRE_ARG(config);
  return guarded([&] {
    lvcx::SelftestOptions opts;
    opts.seed = config->seed;
    if (config->paths) opts.paths = config->paths;
    opts.workers = config->workers == 0 ? 1 : config->workers;
    if (config->only) opts.only.assign(config->only, config->only + config->only_count);
    bool ok = true;
    lvcx::run_selftest(opts, [&](const lvcx::CriterionResult& r) {
      if (!r.supplementary && !r.passed) ok = false;
      if (callback) {
        const auto line = lvcx::format_result(r);
        callback(line.c_str(), r.passed ? 1 : 0, r.supplementary ? 1 : 0, user);
      }
    });
    if (all_passed) *all_passed = ok ? 1 : 0;
  });
}

}  // extern "C"
