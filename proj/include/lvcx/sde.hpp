#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lvcx/dlocalvol.hpp"
#include "lvcx/localvol.hpp"
#include "lvcx/mixture_model.hpp"
#include "lvcx/time_grid.hpp"

namespace lvcx {

/// Uniform grid with 1/steps_per_unit spacing that hits every regime breakpoint.
TimeGrid build_grid(const MixtureSpec& spec, std::size_t steps_per_unit);

enum class ModelKind { mixing, localvol, dlocalvol };

std::string_view to_string(ModelKind kind) noexcept;
ModelKind parse_model_kind(std::string_view name);

struct SimOptions {
  RngConfig rng;
  /// Global index of the first path; path p uses the streams of index first_path + p.
  std::uint64_t first_path = 0;
  /// Grid times at which X (and a) are recorded for every path.
  std::vector<double> record_times;
  /// Keep X on every grid time (paths x grid points doubles).
  bool store_paths = false;
};

/// Per-path outputs of one simulation run.
struct SimBatch {
  ModelKind kind = ModelKind::localvol;
  std::uint64_t seed = 0;
  std::uint64_t first_path = 0;
  std::uint64_t model_fingerprint = 0;
  double epsilon = 0.0;
  std::vector<double> grid;

  std::vector<double> terminal_x;
  std::vector<double> realized_variance;
  std::vector<double> terminal_a;  // dlocalvol only

  std::vector<double> record_times;
  std::vector<double> recorded_x;  // paths x record_times
  std::vector<double> recorded_a;  // dlocalvol only

  std::vector<double> paths;  // paths x grid, when stored

  std::size_t path_count() const noexcept { return terminal_x.size(); }
  bool has_paths() const noexcept { return !paths.empty(); }
  double path_x(std::size_t p, std::size_t k) const { return paths[p * grid.size() + k]; }
  /// Recorded X (or a) at one of record_times, across all paths.
  std::vector<double> recorded(double t, bool running_variance = false) const;
};

/// Euler-Maruyama for dX = sigma_loc dB - sigma_loc^2/2 dt from X_0 = 0, with
/// realized variance by left-endpoint quadrature. Coefficients on a step are
/// taken from the right limit at its left endpoint.
SimBatch simulate_localvol(const LocalVolSurface& surface, const TimeGrid& grid,
                           std::size_t n_paths, const SimOptions& options);

/// Joint Euler step for (X, a) under sigma_dloc^2(t, X, a); B and Z come from
/// independent sub-streams of each path.
SimBatch simulate_double_localvol(const DoubleLocalSurface& surface, const TimeGrid& grid,
                                  std::size_t n_paths, const SimOptions& options);

/// The mixing model itself in SimBatch form (exact sampling).
SimBatch simulate_mixing(const MixtureSpec& spec, const TimeGrid& grid, std::size_t n_paths,
                         const SimOptions& options);

/// Line-oriented records: '#' header lines, a column line, then one
/// "path_index,X_T,V_T[,a_T]" record per path.
std::string batch_records(const SimBatch& batch);

struct PathRecord {
  std::uint64_t path_index;
  double x_t;
  double v_t;
  std::optional<double> a_t;
};

std::vector<PathRecord> parse_batch_records(std::string_view text);

}  // namespace lvcx
