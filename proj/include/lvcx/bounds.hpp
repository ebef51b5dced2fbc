#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lvcx/localvol.hpp"
#include "lvcx/mc.hpp"
#include "lvcx/sde.hpp"

namespace lvcx {

/// X_t in [x_lo, x_hi] for every t in the time interval; infinite x bounds allowed.
struct CorridorConstraint {
  double start;
  double end;
  double x_lo;
  double x_hi;
  bool left_open = false;  // (start, end] instead of [start, end]

  bool contains_time(double t) const noexcept {
    return (left_open ? t > start : t >= start) && t <= end;
  }
};

class CorridorSpec {
 public:
  CorridorSpec() = default;
  explicit CorridorSpec(std::vector<CorridorConstraint> constraints);

  /// Large on (1, 1.9], |X| <= 1 on (2, 3].
  static CorridorSpec paper_corridor();
  static CorridorSpec preset(std::string_view name);

  const std::vector<CorridorConstraint>& constraints() const noexcept { return constraints_; }
  std::string describe() const;

 private:
  std::vector<CorridorConstraint> constraints_;  // sorted by start
};

struct BoundResolution {
  double t_per_unit = 1000.0;
  double x_per_unit = 1000.0;
};

struct BoundSegment {
  double start;
  double end;
  double x_lo;  // -inf/+inf for an unconstrained segment
  double x_hi;
  double contribution;
};

struct BoundReport {
  double value = 0.0;
  BoundResolution resolution;
  std::vector<BoundSegment> segments;
};

/// Lower bound on realized variance over all paths inside the corridor:
/// integral over [0, T] of the infimum of sigma_loc^2(t, .) over the allowed
/// x-set (all of R where unconstrained). Midpoint rule in t, dense grid
/// search in x; R is searched on [-30, 30] plus the analytic tail limit.
/// Resolutions below 1000 points per unit are refused.
BoundReport corridor_lower_bound(const LocalVolSurface& surface, const CorridorSpec& corridor,
                                 const BoundResolution& resolution = {});

std::string bound_report_text(const CorridorSpec& corridor, const BoundReport& report);

struct CorridorHits {
  McEstimate estimate;  // hit fraction with binomial standard error
  std::size_t hits = 0;
  std::size_t n = 0;
  std::vector<std::uint64_t> hit_paths;     // global path indices
  std::vector<double> hit_realized_variance;
};

/// Whether a stored path satisfies every constraint at each grid time in it.
bool path_in_corridor(const CorridorSpec& corridor, std::span<const double> grid,
                      std::span<const double> path);

/// Fraction of stored paths in `batch` that stay in the corridor. Every
/// constraint endpoint must be a grid time. With zero (or all) hits the
/// interval is the exact one-sided 99% Clopper-Pearson bound.
CorridorHits corridor_hit_probability(const SimBatch& batch, const CorridorSpec& corridor);

/// corridor_hit_probability over a local-vol run too large to hold at once:
/// paths are simulated and checked in chunks of stored paths. Identical to a
/// single run with the same seed.
CorridorHits corridor_hit_scan(const LocalVolSurface& surface, const TimeGrid& grid,
                               const CorridorSpec& corridor, std::size_t n_paths,
                               const RngConfig& rng, std::size_t chunk = 4096);

struct GuidedHits {
  std::size_t n = 0;
  std::size_t hits = 0;           // hits among steered paths
  double log10_probability = 0.0; // importance-sampling estimate; -inf with no hits
  double relative_error = 0.0;    // stderr / estimate
  double min_hit_variance = 0.0;  // smallest realized variance among hits
};

/// Importance-sampling estimate of the corridor probability for the Euler
/// chain of the local-vol SDE. Paths are steered towards the corridor centre
/// line by an Ornstein-Uhlenbeck pull of strength `pull`, and each hit is
/// weighted by the exact Gaussian likelihood ratio of its increments. The
/// steered measure is equivalent to the original one, so any hit shows the
/// event has positive probability.
GuidedHits corridor_guided_scan(const LocalVolSurface& surface, const TimeGrid& grid,
                                const CorridorSpec& corridor, std::size_t n_paths,
                                const RngConfig& rng, double pull = 50.0);

}  // namespace lvcx
