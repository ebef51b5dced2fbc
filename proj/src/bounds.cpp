#include "lvcx/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lvcx/error.hpp"
#include "lvcx/numerics.hpp"
#include "lvcx/parallel.hpp"

namespace lvcx {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kBracket = 30.0;
constexpr double kMinResolution = 1000.0;
constexpr double kGridTol = 1e-12;

}  // namespace

CorridorSpec::CorridorSpec(std::vector<CorridorConstraint> constraints)
    : constraints_(std::move(constraints)) {
  std::sort(constraints_.begin(), constraints_.end(),
            [](const auto& a, const auto& b) { return a.start < b.start; });
  for (std::size_t k = 0; k < constraints_.size(); ++k) {
    const auto& c = constraints_[k];
    require(std::isfinite(c.start) && std::isfinite(c.end) && c.start < c.end,
            ErrorCode::invalid_argument, "corridor time interval must have start < end");
    require(!std::isnan(c.x_lo) && !std::isnan(c.x_hi) && c.x_lo <= c.x_hi,
            ErrorCode::invalid_argument, "corridor x interval is inverted");
    if (k > 0)
      require(constraints_[k - 1].end <= c.start, ErrorCode::invalid_argument,
              "corridor time intervals overlap");
  }
}

CorridorSpec CorridorSpec::paper_corridor() {
  return CorridorSpec({{1.0, 1.9, 8.0, 10.0, true}, {2.0, 3.0, -1.0, 1.0, true}});
}

CorridorSpec CorridorSpec::preset(std::string_view name) {
  if (name == "paper_corridor") return paper_corridor();
  if (name == "none") return CorridorSpec();
  fail(ErrorCode::config, "unknown corridor preset '" + std::string(name) + "'");
}

std::string CorridorSpec::describe() const {
  char buf[32];
  std::string out;
  for (const auto& c : constraints_) {
    if (!out.empty()) out += ';';
    out += c.left_open ? '(' : '[';
    out += format_double(c.start, buf);
    out += ',';
    out += format_double(c.end, buf);
    out += "]:[";
    out += format_double(c.x_lo, buf);
    out += ',';
    out += format_double(c.x_hi, buf);
    out += ']';
  }
  return out.empty() ? "none" : out;
}

namespace {

/// Limit of sigma_loc^2(t, x) as |x| -> inf: the widest branch (or the
/// weighted mean of the rates of all branches tied for widest) dominates.
double tail_limit(const MixtureSpec& spec, double t) {
  double widest = -kInf;
  for (std::size_t i = 0; i < spec.branch_count(); ++i)
    widest = std::max(widest, cum_variance(spec, i, t));
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < spec.branch_count(); ++i) {
    if (cum_variance(spec, i, t) != widest) continue;
    num += spec.component(i).weight * spec.component(i).rate.value_at(t);
    den += spec.component(i).weight;
  }
  return num / den;
}

double infimum_over(const LocalVolSurface& surface, double t, double x_lo, double x_hi,
                    double x_per_unit) {
  const auto slice = surface.slice(t);
  if (slice.flat()) return slice(0.0);
  double best = kInf;
  if (x_lo == -kInf || x_hi == kInf) best = tail_limit(surface.spec(), t);
  const double lo = std::max(x_lo, -kBracket);
  const double hi = std::min(x_hi, kBracket);
  if (lo > hi) return best;
  if (lo == hi) return std::min(best, slice(lo));
  const auto n = static_cast<std::size_t>(std::ceil((hi - lo) * x_per_unit));
  for (std::size_t j = 0; j <= n; ++j) {
    const double x = j == n ? hi : lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(n);
    best = std::min(best, slice(x));
  }
  return best;
}

}  // namespace

BoundReport corridor_lower_bound(const LocalVolSurface& surface, const CorridorSpec& corridor,
                                 const BoundResolution& resolution) {
  require(resolution.t_per_unit >= kMinResolution && resolution.x_per_unit >= kMinResolution,
          ErrorCode::invalid_argument,
          "bound resolution below 1000 points per unit refused (coarse grids can overstate it)");
  const auto& spec = surface.spec();
  const double horizon = spec.horizon();
  for (const auto& c : corridor.constraints())
    require(c.start >= 0.0 && c.end <= horizon, ErrorCode::domain,
            "corridor time interval outside [0, T]");

  // Constrained intervals and the gaps between them, further cut at regime breakpoints.
  std::vector<BoundSegment> pieces;
  double cursor = 0.0;
  for (const auto& c : corridor.constraints()) {
    if (c.start > cursor) pieces.push_back({cursor, c.start, -kInf, kInf, 0.0});
    pieces.push_back({c.start, c.end, c.x_lo, c.x_hi, 0.0});
    cursor = c.end;
  }
  if (cursor < horizon) pieces.push_back({cursor, horizon, -kInf, kInf, 0.0});

  BoundReport report;
  report.resolution = resolution;
  for (auto seg : pieces) {
    std::vector<double> cuts{seg.start};
    for (double b : spec.breakpoints())
      if (b > seg.start && b < seg.end) cuts.push_back(b);
    cuts.push_back(seg.end);
    double total = 0.0;
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
      const double a = cuts[c];
      const double b = cuts[c + 1];
      const auto n = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::ceil((b - a) * resolution.t_per_unit)));
      const double h = (b - a) / static_cast<double>(n);
      std::vector<double> vals(n);
      for (std::size_t k = 0; k < n; ++k)
        vals[k] = infimum_over(surface, a + (static_cast<double>(k) + 0.5) * h, seg.x_lo, seg.x_hi,
                               resolution.x_per_unit);
      total += h * pairwise_sum(vals);
    }
    seg.contribution = total;
    report.value += total;
    report.segments.push_back(seg);
  }
  return report;
}

std::string bound_report_text(const CorridorSpec& corridor, const BoundReport& report) {
  char buf[32];
  std::string out = "corridor=" + corridor.describe();
  out += " t_per_unit=";
  out += format_double(report.resolution.t_per_unit, buf);
  out += " x_per_unit=";
  out += format_double(report.resolution.x_per_unit, buf);
  out += " bound=";
  out += format_double(report.value, buf);
  out += '\n';
  for (const auto& s : report.segments) {
    out += "segment start=";
    out += format_double(s.start, buf);
    out += " end=";
    out += format_double(s.end, buf);
    out += " x_lo=";
    out += std::isinf(s.x_lo) ? "-inf" : std::string(format_double(s.x_lo, buf));
    out += " x_hi=";
    out += std::isinf(s.x_hi) ? "inf" : std::string(format_double(s.x_hi, buf));
    out += " contribution=";
    out += format_double(s.contribution, buf);
    out += '\n';
  }
  return out;
}

bool path_in_corridor(const CorridorSpec& corridor, std::span<const double> grid,
                      std::span<const double> path) {
  for (const auto& c : corridor.constraints()) {
    auto it = std::lower_bound(grid.begin(), grid.end(), c.start);
    for (auto k = static_cast<std::size_t>(it - grid.begin()); k < grid.size() && grid[k] <= c.end; ++k) {
      if (!c.contains_time(grid[k])) continue;
      if (path[k] < c.x_lo || path[k] > c.x_hi) return false;
    }
  }
  return true;
}

namespace {

void check_grid_covers(const CorridorSpec& corridor, std::span<const double> grid) {
  for (const auto& c : corridor.constraints()) {
    for (double t : {c.start, c.end}) {
      auto it = std::lower_bound(grid.begin(), grid.end(), t - kGridTol);
      require(it != grid.end() && std::abs(*it - t) <= kGridTol, ErrorCode::config,
              "simulation grid does not contain every corridor endpoint");
    }
  }
}

McEstimate binomial_estimate(std::size_t hits, std::size_t n) {
  McEstimate est;
  est.n = n;
  if (n == 0) return est;
  const double p = static_cast<double>(hits) / static_cast<double>(n);
  est.mean = p;
  est.std_error = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
  const double exact = std::pow(0.01, 1.0 / static_cast<double>(n));
  if (hits == 0) {
    est.ci_lo = 0.0;
    est.ci_hi = 1.0 - exact;
  } else if (hits == n) {
    est.ci_lo = exact;
    est.ci_hi = 1.0;
  } else {
    est.ci_lo = std::max(0.0, p - kZ99 * est.std_error);
    est.ci_hi = std::min(1.0, p + kZ99 * est.std_error);
  }
  return est;
}

void collect_hits(const SimBatch& batch, const CorridorSpec& corridor, CorridorHits& out) {
  const std::size_t m = batch.grid.size();
  for (std::size_t p = 0; p < batch.path_count(); ++p) {
    std::span<const double> path(&batch.paths[p * m], m);
    if (path_in_corridor(corridor, batch.grid, path)) {
      ++out.hits;
      out.hit_paths.push_back(batch.first_path + p);
      out.hit_realized_variance.push_back(batch.realized_variance[p]);
    }
  }
  out.n += batch.path_count();
}

}  // namespace

CorridorHits corridor_hit_probability(const SimBatch& batch, const CorridorSpec& corridor) {
  require(batch.has_paths() || batch.path_count() == 0, ErrorCode::config,
          "corridor check needs a batch with stored paths");
  check_grid_covers(corridor, batch.grid);
  CorridorHits out;
  collect_hits(batch, corridor, out);
  out.estimate = binomial_estimate(out.hits, out.n);
  return out;
}

CorridorHits corridor_hit_scan(const LocalVolSurface& surface, const TimeGrid& grid,
                               const CorridorSpec& corridor, std::size_t n_paths,
                               const RngConfig& rng, std::size_t chunk) {
  require(chunk >= 1, ErrorCode::invalid_argument, "chunk size must be positive");
  check_grid_covers(corridor, grid.times());
  CorridorHits out;
  for (std::size_t offset = 0; offset < n_paths; offset += chunk) {
    SimOptions opt;
    opt.rng = rng;
    opt.first_path = offset;
    opt.store_paths = true;
    const auto batch = simulate_localvol(surface, grid, std::min(chunk, n_paths - offset), opt);
    collect_hits(batch, corridor, out);
  }
  out.estimate = binomial_estimate(out.hits, out.n);
  return out;
}

GuidedHits corridor_guided_scan(const LocalVolSurface& surface, const TimeGrid& grid,
                                const CorridorSpec& corridor, std::size_t n_paths,
                                const RngConfig& rng, double pull) {
  require(pull >= 0.0, ErrorCode::invalid_argument, "pull must be non-negative");
  require(n_paths >= 2, ErrorCode::insufficient_data, "need at least two paths");
  check_grid_covers(corridor, grid.times());
  const auto times = grid.times();
  const std::size_t m = times.size();

  // Centre line: piecewise linear through (0, 0) and the middle of every
  // finite corridor band at its endpoints, held flat after the last band.
  std::vector<std::pair<double, double>> knots{{0.0, 0.0}};
  for (const auto& c : corridor.constraints()) {
    double centre;
    if (std::isfinite(c.x_lo) && std::isfinite(c.x_hi)) centre = 0.5 * (c.x_lo + c.x_hi);
    else if (std::isfinite(c.x_lo)) centre = c.x_lo + 1.0;
    else if (std::isfinite(c.x_hi)) centre = c.x_hi - 1.0;
    else continue;
    knots.emplace_back(c.start, centre);
    knots.emplace_back(c.end, centre);
  }
  std::vector<double> target(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double t = times[k];
    std::size_t j = 0;
    while (j + 1 < knots.size() && knots[j + 1].first <= t) ++j;
    if (j + 1 == knots.size() || knots[j + 1].first == knots[j].first) {
      target[k] = knots[j].second;
    } else {
      const auto [t0, y0] = knots[j];
      const auto [t1, y1] = knots[j + 1];
      target[k] = y0 + (y1 - y0) * (t - t0) / (t1 - t0);
    }
  }
  // constraint active at grid index k (or nullptr)
  std::vector<const CorridorConstraint*> active(m, nullptr);
  for (std::size_t k = 0; k < m; ++k)
    for (const auto& c : corridor.constraints())
      if (c.contains_time(times[k])) active[k] = &c;

  std::vector<LocalVolSlice> slices;
  slices.reserve(m - 1);
  for (std::size_t k = 0; k + 1 < m; ++k) slices.push_back(surface.slice(times[k], TimeSide::after));

  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> log_weight(n_paths, nan);  // NaN marks a miss
  std::vector<double> variance(n_paths, nan);
  parallel_for_ranges(n_paths, rng.workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      PathRng noise(rng.seed, p, Substream::brownian);
      double x = 0.0, v_acc = 0.0, log_l = 0.0;
      bool inside = !(active[0] && (x < active[0]->x_lo || x > active[0]->x_hi));
      for (std::size_t k = 0; inside && k + 1 < m; ++k) {
        const double dt = times[k + 1] - times[k];
        const double v = slices[k](x);
        const double sd = std::sqrt(v * dt);
        const double drift_q = (target[k + 1] - target[k]) / dt + pull * (target[k] - x);
        const double shift = (drift_q + 0.5 * v) * dt / sd;  // theta * sqrt(dt)
        const double xi = noise.normal();
        log_l += -shift * xi - 0.5 * shift * shift;
        v_acc += v * dt;
        x += sd * xi + drift_q * dt;
        if (const auto* c = active[k + 1]; c && (x < c->x_lo || x > c->x_hi)) inside = false;
      }
      if (inside) {
        log_weight[p] = log_l;
        variance[p] = v_acc;
      }
    }
  });

  GuidedHits out;
  out.n = n_paths;
  double top = -kInf;
  out.min_hit_variance = kInf;
  for (std::size_t p = 0; p < n_paths; ++p) {
    if (std::isnan(log_weight[p])) continue;
    ++out.hits;
    top = std::max(top, log_weight[p]);
    out.min_hit_variance = std::min(out.min_hit_variance, variance[p]);
  }
  if (out.hits == 0) {
    out.log10_probability = -kInf;
    out.relative_error = nan;
    out.min_hit_variance = nan;
    return out;
  }
  std::vector<double> w1(n_paths, 0.0), w2(n_paths, 0.0);
  for (std::size_t p = 0; p < n_paths; ++p) {
    if (std::isnan(log_weight[p])) continue;
    w1[p] = std::exp(log_weight[p] - top);
    w2[p] = w1[p] * w1[p];
  }
  const double n = static_cast<double>(n_paths);
  const double m1 = pairwise_sum(w1) / n;
  const double m2 = pairwise_sum(w2) / n;
  out.log10_probability = (top + std::log(m1)) / std::log(10.0);
  out.relative_error = std::sqrt(std::max(m2 - m1 * m1, 0.0) / (n - 1.0)) / m1;
  return out;
}

}  // namespace lvcx
