#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace lvcx {

/// Ordered simulation times 0 = t_0 < ... < t_N = T.
class TimeGrid {
 public:
  explicit TimeGrid(std::vector<double> times);

  /// Uniform grid with at most 1/steps_per_unit spacing, refined so that every
  /// entry of `knots` inside [0, horizon] appears exactly.
  static TimeGrid uniform(double horizon, std::size_t steps_per_unit,
                          std::span<const double> knots = {});

  std::span<const double> times() const noexcept { return times_; }
  std::size_t size() const noexcept { return times_.size(); }
  std::size_t steps() const noexcept { return times_.size() - 1; }
  double operator[](std::size_t k) const noexcept { return times_[k]; }
  double horizon() const noexcept { return times_.back(); }
  double max_step() const noexcept;

  /// Index of the grid time within `tol` of t, if any.
  std::optional<std::size_t> index_of(double t, double tol = 1e-12) const noexcept;

  /// This grid with additional knots inserted (same snapping rule as uniform()).
  TimeGrid refined(std::span<const double> knots) const;

 private:
  std::vector<double> times_;
};

}  // namespace lvcx
