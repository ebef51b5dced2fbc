#include "lvcx/time_grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lvcx/error.hpp"

namespace lvcx {

namespace {

constexpr double kSnap = 1e-12;

std::vector<double> insert_knots(std::vector<double> times, std::span<const double> knots) {
  const double horizon = times.back();
  for (double b : knots) {
    if (b < 0.0 || b > horizon) continue;
    auto it = std::lower_bound(times.begin(), times.end(), b);
    if (it != times.end() && std::abs(*it - b) <= kSnap * std::max(1.0, horizon)) {
      *it = b;
    } else if (it != times.begin() && std::abs(*(it - 1) - b) <= kSnap * std::max(1.0, horizon)) {
      *(it - 1) = b;
    } else {
      times.insert(it, b);
    }
  }
  return times;
}

}  // namespace

TimeGrid::TimeGrid(std::vector<double> times) : times_(std::move(times)) {
  require(times_.size() >= 2, ErrorCode::invalid_argument, "time grid needs at least two points");
  require(times_.front() == 0.0, ErrorCode::invalid_argument, "time grid must start at 0");
  for (std::size_t k = 1; k < times_.size(); ++k)
    require(times_[k] > times_[k - 1] && std::isfinite(times_[k]), ErrorCode::invalid_argument,
            "time grid must be strictly increasing and finite");
}

TimeGrid TimeGrid::uniform(double horizon, std::size_t steps_per_unit,
                           std::span<const double> knots) {
  require(horizon > 0.0 && std::isfinite(horizon), ErrorCode::invalid_argument,
          "grid horizon must be positive");
  require(steps_per_unit >= 1, ErrorCode::invalid_argument, "steps_per_unit must be >= 1");
  const auto n = static_cast<std::size_t>(
      std::ceil(horizon * static_cast<double>(steps_per_unit) - 1e-9));
  std::vector<double> times(n + 1);
  for (std::size_t k = 0; k <= n; ++k)
    times[k] = static_cast<double>(k) * horizon / static_cast<double>(n);
  times.back() = horizon;
  return TimeGrid(insert_knots(std::move(times), knots));
}

double TimeGrid::max_step() const noexcept {
  double m = 0.0;
  for (std::size_t k = 1; k < times_.size(); ++k) m = std::max(m, times_[k] - times_[k - 1]);
  return m;
}

std::optional<std::size_t> TimeGrid::index_of(double t, double tol) const noexcept {
  auto it = std::lower_bound(times_.begin(), times_.end(), t - tol);
  if (it != times_.end() && std::abs(*it - t) <= tol)
    return static_cast<std::size_t>(it - times_.begin());
  return std::nullopt;
}

TimeGrid TimeGrid::refined(std::span<const double> knots) const {
  return TimeGrid(insert_knots(times_, knots));
}

}  // namespace lvcx
