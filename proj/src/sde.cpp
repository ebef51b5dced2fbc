#include "lvcx/sde.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "lvcx/error.hpp"
#include "lvcx/numerics.hpp"
#include "lvcx/parallel.hpp"

namespace lvcx {

TimeGrid build_grid(const MixtureSpec& spec, std::size_t steps_per_unit) {
  return TimeGrid::uniform(spec.horizon(), steps_per_unit, spec.breakpoints());
}

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::mixing: return "mixing";
    case ModelKind::localvol: return "localvol";
    case ModelKind::dlocalvol: return "dlocalvol";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "mixing") return ModelKind::mixing;
  if (name == "localvol") return ModelKind::localvol;
  if (name == "dlocalvol") return ModelKind::dlocalvol;
  fail(ErrorCode::config, "unknown model kind '" + std::string(name) + "'");
}

std::vector<double> SimBatch::recorded(double t, bool running_variance) const {
  std::size_t j = 0;
  while (j < record_times.size() && std::abs(record_times[j] - t) > 1e-12) ++j;
  require(j < record_times.size(), ErrorCode::invalid_argument, "time was not recorded");
  const auto& src = running_variance ? recorded_a : recorded_x;
  require(!src.empty(), ErrorCode::invalid_argument, "running variance not available");
  const std::size_t r = record_times.size();
  std::vector<double> out(path_count());
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = src[p * r + j];
  return out;
}

namespace {

constexpr std::size_t kNoSlot = static_cast<std::size_t>(-1);

/// Shared bookkeeping: output arrays and the grid index -> record slot map.
struct Layout {
  std::size_t m = 0;  // grid points
  std::size_t r = 0;  // record times
  std::vector<std::size_t> slot;
};

Layout prepare(SimBatch& batch, ModelKind kind, const TimeGrid& grid, std::size_t n,
               const SimOptions& opt, bool two_d) {
  Layout lay;
  lay.m = grid.size();
  lay.r = opt.record_times.size();
  lay.slot.assign(lay.m, kNoSlot);
  for (std::size_t j = 0; j < lay.r; ++j) {
    const auto k = grid.index_of(opt.record_times[j]);
    require(k.has_value(), ErrorCode::config, "record time is not on the simulation grid");
    lay.slot[*k] = j;
  }
  batch.kind = kind;
  batch.seed = opt.rng.seed;
  batch.first_path = opt.first_path;
  batch.grid.assign(grid.times().begin(), grid.times().end());
  batch.terminal_x.resize(n);
  batch.realized_variance.resize(n);
  batch.record_times = opt.record_times;
  batch.recorded_x.resize(n * lay.r);
  if (two_d) {
    batch.terminal_a.resize(n);
    batch.recorded_a.resize(n * lay.r);
  }
  if (opt.store_paths) batch.paths.resize(n * lay.m);
  return lay;
}

template <class Slice>
std::vector<Slice> step_slices(const TimeGrid& grid, auto&& make) {
  std::vector<Slice> out;
  out.reserve(grid.steps());
  for (std::size_t k = 0; k < grid.steps(); ++k) out.push_back(make(grid[k]));
  return out;
}

void check_horizon(const MixtureSpec& spec, const TimeGrid& grid) {
  require(std::abs(grid.horizon() - spec.horizon()) <= 1e-12, ErrorCode::config,
          "grid horizon differs from the model horizon");
}

}  // namespace

SimBatch simulate_localvol(const LocalVolSurface& surface, const TimeGrid& grid,
                           std::size_t n_paths, const SimOptions& opt) {
  check_horizon(surface.spec(), grid);
  SimBatch batch;
  const Layout lay = prepare(batch, ModelKind::localvol, grid, n_paths, opt, false);
  batch.model_fingerprint = surface.spec().fingerprint();
  const auto slices = step_slices<LocalVolSlice>(
      grid, [&](double t) { return surface.slice(t, TimeSide::after); });
  const auto times = grid.times();

  parallel_for_ranges(n_paths, opt.rng.workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      PathRng rng(opt.rng.seed, opt.first_path + p, Substream::brownian);
      double* stored = opt.store_paths ? &batch.paths[p * lay.m] : nullptr;
      double x = 0.0;
      double v_acc = 0.0;
      auto record = [&](std::size_t k) {
        if (stored) stored[k] = x;
        if (lay.slot[k] != kNoSlot) batch.recorded_x[p * lay.r + lay.slot[k]] = x;
      };
      record(0);
      for (std::size_t k = 0; k + 1 < lay.m; ++k) {
        const double dt = times[k + 1] - times[k];
        const double v = slices[k](x);
        v_acc += v * dt;
        x += std::sqrt(v * dt) * rng.normal() - 0.5 * v * dt;
        record(k + 1);
      }
      batch.terminal_x[p] = x;
      batch.realized_variance[p] = v_acc;
    }
  });
  return batch;
}

SimBatch simulate_double_localvol(const DoubleLocalSurface& surface, const TimeGrid& grid,
                                  std::size_t n_paths, const SimOptions& opt) {
  check_horizon(surface.spec(), grid);
  SimBatch batch;
  const Layout lay = prepare(batch, ModelKind::dlocalvol, grid, n_paths, opt, true);
  batch.model_fingerprint = surface.spec().fingerprint();
  batch.epsilon = surface.epsilon();
  const auto slices = step_slices<DoubleLocalSlice>(
      grid, [&](double t) { return surface.slice(t, TimeSide::after); });
  const auto times = grid.times();
  const double sqrt_eps = std::sqrt(surface.epsilon());

  parallel_for_ranges(n_paths, opt.rng.workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      PathRng b(opt.rng.seed, opt.first_path + p, Substream::brownian);
      PathRng z(opt.rng.seed, opt.first_path + p, Substream::auxiliary);
      double* stored = opt.store_paths ? &batch.paths[p * lay.m] : nullptr;
      double x = 0.0;
      double a = 0.0;
      double v_acc = 0.0;
      auto record = [&](std::size_t k) {
        if (stored) stored[k] = x;
        if (lay.slot[k] != kNoSlot) {
          batch.recorded_x[p * lay.r + lay.slot[k]] = x;
          batch.recorded_a[p * lay.r + lay.slot[k]] = a;
        }
      };
      record(0);
      for (std::size_t k = 0; k + 1 < lay.m; ++k) {
        const double dt = times[k + 1] - times[k];
        const double v = slices[k](x, a);
        v_acc += v * dt;
        x += std::sqrt(v * dt) * b.normal() - 0.5 * v * dt;
        a += v * dt + sqrt_eps * std::sqrt(dt) * z.normal();
        record(k + 1);
      }
      batch.terminal_x[p] = x;
      batch.terminal_a[p] = a;
      batch.realized_variance[p] = v_acc;
    }
  });
  return batch;
}

SimBatch simulate_mixing(const MixtureSpec& spec, const TimeGrid& grid, std::size_t n_paths,
                         const SimOptions& opt) {
  check_horizon(spec, grid);
  SimBatch batch;
  const Layout lay = prepare(batch, ModelKind::mixing, grid, n_paths, opt, false);
  batch.model_fingerprint = spec.fingerprint();
  const std::size_t nb = spec.branch_count();
  std::vector<double> cum(nb * lay.m);
  std::vector<double> cdf(nb);
  double acc = 0.0;
  for (std::size_t i = 0; i < nb; ++i) {
    acc += spec.component(i).weight;
    cdf[i] = acc;
    for (std::size_t k = 0; k < lay.m; ++k) cum[i * lay.m + k] = cum_variance(spec, i, grid[k]);
  }

  parallel_for_ranges(n_paths, opt.rng.workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      // same streams and draw order as sample_mixing_paths
      PathRng pick(opt.rng.seed, opt.first_path + p, Substream::branch);
      PathRng noise(opt.rng.seed, opt.first_path + p, Substream::brownian);
      const double u = pick.uniform();
      std::size_t i = 0;
      while (i + 1 < nb && u >= cdf[i]) ++i;
      const double* c = &cum[i * lay.m];
      double* stored = opt.store_paths ? &batch.paths[p * lay.m] : nullptr;
      double x = 0.0;
      auto record = [&](std::size_t k) {
        if (stored) stored[k] = x;
        if (lay.slot[k] != kNoSlot) batch.recorded_x[p * lay.r + lay.slot[k]] = x;
      };
      record(0);
      for (std::size_t k = 1; k < lay.m; ++k) {
        const double var = c[k] - c[k - 1];
        x += std::sqrt(var) * noise.normal() - 0.5 * var;
        record(k);
      }
      batch.terminal_x[p] = x;
      batch.realized_variance[p] = c[lay.m - 1];
    }
  });
  return batch;
}

std::string batch_records(const SimBatch& batch) {
  char buf[32];
  std::string out;
  char head[256];
  std::snprintf(head, sizeof(head),
                "# lvcx sim-batch kind=%s seed=%llu first_path=%llu model=%016llx steps=%zu\n",
                std::string(to_string(batch.kind)).c_str(),
                static_cast<unsigned long long>(batch.seed),
                static_cast<unsigned long long>(batch.first_path),
                static_cast<unsigned long long>(batch.model_fingerprint),
                batch.grid.empty() ? std::size_t{0} : batch.grid.size() - 1);
  out += head;
  const bool two_d = !batch.terminal_a.empty();
  if (two_d) out += "# epsilon=" + std::string(format_double(batch.epsilon, buf)) + "\n";
  out += two_d ? "path_index,X_T,V_T,a_T\n" : "path_index,X_T,V_T\n";
  for (std::size_t p = 0; p < batch.path_count(); ++p) {
    out += std::to_string(batch.first_path + p);
    out += ',';
    out += format_double(batch.terminal_x[p], buf);
    out += ',';
    out += format_double(batch.realized_variance[p], buf);
    if (two_d) {
      out += ',';
      out += format_double(batch.terminal_a[p], buf);
    }
    out += '\n';
  }
  return out;
}

std::vector<PathRecord> parse_batch_records(std::string_view text) {
  std::vector<PathRecord> out;
  bool seen_columns = false;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (line.empty() || line.front() == '#') continue;
    if (!seen_columns) {
      require(line.starts_with("path_index,"), ErrorCode::data, "missing column line");
      seen_columns = true;
      continue;
    }
    double fields[4];
    std::size_t nf = 0;
    std::uint64_t index = 0;
    const char* p = line.data();
    const char* e = line.data() + line.size();
    auto r = std::from_chars(p, e, index);
    require(r.ec == std::errc() && r.ptr != e && *r.ptr == ',', ErrorCode::data, "bad record");
    p = r.ptr + 1;
    while (p < e && nf < 4) {
      auto rr = std::from_chars(p, e, fields[nf]);
      require(rr.ec == std::errc(), ErrorCode::data, "bad record");
      ++nf;
      p = rr.ptr;
      if (p < e) {
        require(*p == ',', ErrorCode::data, "bad record");
        ++p;
      }
    }
    require(p == e && (nf == 2 || nf == 3), ErrorCode::data, "bad record");
    out.push_back({index, fields[0], fields[1],
                   nf == 3 ? std::optional<double>(fields[2]) : std::nullopt});
  }
  return out;
}

}  // namespace lvcx
