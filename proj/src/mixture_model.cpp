#include "lvcx/mixture_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "lvcx/error.hpp"
#include "lvcx/numerics.hpp"
#include "lvcx/parallel.hpp"

namespace lvcx {

// ---------------------------------------------------------------------------
// PiecewiseConstRate

PiecewiseConstRate::PiecewiseConstRate(std::vector<double> breakpoints, std::vector<double> values)
    : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
  require(breakpoints_.size() >= 2, ErrorCode::invalid_model, "need at least two breakpoints");
  require(values_.size() + 1 == breakpoints_.size(), ErrorCode::invalid_model,
          "need exactly one rate per interval");
  require(breakpoints_.front() == 0.0, ErrorCode::invalid_model, "first breakpoint must be 0");
  for (std::size_t k = 1; k < breakpoints_.size(); ++k)
    require(std::isfinite(breakpoints_[k]) && breakpoints_[k] > breakpoints_[k - 1],
            ErrorCode::invalid_model, "breakpoints must be strictly increasing");
  for (double v : values_)
    require(std::isfinite(v) && v > 0.0, ErrorCode::invalid_model,
            "variance rates must be positive and finite");
  cumulative_.resize(breakpoints_.size());
  cumulative_[0] = 0.0;
  for (std::size_t k = 0; k < values_.size(); ++k)
    cumulative_[k + 1] = cumulative_[k] + values_[k] * (breakpoints_[k + 1] - breakpoints_[k]);
}

double PiecewiseConstRate::value_at(double t) const {
  require(t >= 0.0 && t <= horizon(), ErrorCode::domain, "time outside [0, T]");
  // first interval whose right end is >= t
  auto it = std::lower_bound(breakpoints_.begin() + 1, breakpoints_.end(), t);
  return values_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
}

double PiecewiseConstRate::value_after(double t) const {
  require(t >= 0.0 && t <= horizon(), ErrorCode::domain, "time outside [0, T]");
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
  auto k = static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
  return values_[std::min(k, values_.size() - 1)];
}

double PiecewiseConstRate::integral(double t) const {
  require(t >= 0.0 && t <= horizon(), ErrorCode::domain, "time outside [0, T]");
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
  auto k = static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
  if (k >= values_.size()) return cumulative_.back();
  return cumulative_[k] + values_[k] * (t - breakpoints_[k]);
}

double PiecewiseConstRate::min_value() const noexcept {
  return *std::min_element(values_.begin(), values_.end());
}

double PiecewiseConstRate::max_value() const noexcept {
  return *std::max_element(values_.begin(), values_.end());
}

// ---------------------------------------------------------------------------
// MixtureSpec

MixtureSpec::MixtureSpec(std::vector<MixtureComponent> components)
    : components_(std::move(components)) {
  require(!components_.empty(), ErrorCode::invalid_model, "mixture needs at least one branch");
  double total = 0.0;
  for (const auto& c : components_) {
    require(std::isfinite(c.weight) && c.weight > 0.0, ErrorCode::invalid_model,
            "branch weights must be positive");
    total += c.weight;
    const auto b0 = components_.front().rate.breakpoints();
    const auto b = c.rate.breakpoints();
    require(std::equal(b0.begin(), b0.end(), b.begin(), b.end()), ErrorCode::invalid_model,
            "all branches must share the same breakpoints");
  }
  require(std::abs(total - 1.0) <= 1e-12, ErrorCode::invalid_model, "branch weights must sum to 1");
}

MixtureSpec MixtureSpec::toy3() {
  const std::vector<double> b{0.0, 1.0, 2.0, 3.0};
  return MixtureSpec({{0.5, PiecewiseConstRate(b, {2.0, 3.0, 1.0})},
                      {0.5, PiecewiseConstRate(b, {2.0, 1.0, 3.0})}});
}

MixtureSpec MixtureSpec::preset(std::string_view name) {
  if (name == "toy3") return toy3();
  fail(ErrorCode::config, "unknown model preset '" + std::string(name) + "'");
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(std::string_view s, const std::string& key) {
  s = trim(s);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  require(res.ec == std::errc() && res.ptr == s.data() + s.size() && !s.empty(),
          ErrorCode::config, "bad number '" + std::string(s) + "' for key '" + key + "'");
  return v;
}

std::vector<double> parse_list(std::string_view s, const std::string& key) {
  std::vector<double> out;
  while (true) {
    const auto comma = s.find(',');
    out.push_back(parse_number(s.substr(0, comma), key));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

}  // namespace

MixtureSpec MixtureSpec::parse(std::string_view text) {
  std::map<std::string, std::string> kv;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string_view::npos, ErrorCode::config,
            "line " + std::to_string(line_no) + ": expected key = value");
    std::string key(trim(line.substr(0, eq)));
    require(kv.emplace(key, std::string(trim(line.substr(eq + 1)))).second, ErrorCode::config,
            "duplicate key '" + key + "'");
  }

  auto take = [&](const std::string& key) {
    auto it = kv.find(key);
    require(it != kv.end(), ErrorCode::config, "missing key '" + key + "'");
    std::string v = it->second;
    kv.erase(it);
    return v;
  };

  const auto breakpoints = parse_list(take("breakpoints"), "breakpoints");
  const double branches = parse_number(take("branches"), "branches");
  require(branches >= 1 && branches == std::floor(branches) && branches <= 64, ErrorCode::config,
          "branches must be an integer in [1, 64]");
  if (kv.count("horizon")) {
    const double horizon = parse_number(take("horizon"), "horizon");
    require(!breakpoints.empty() && horizon == breakpoints.back(), ErrorCode::config,
            "horizon must equal the last breakpoint");
  }
  std::vector<MixtureComponent> comps;
  for (int i = 0; i < static_cast<int>(branches); ++i) {
    const std::string prefix = "branch." + std::to_string(i) + ".";
    const double w = parse_number(take(prefix + "weight"), prefix + "weight");
    auto rates = parse_list(take(prefix + "rates"), prefix + "rates");
    comps.push_back({w, PiecewiseConstRate(breakpoints, std::move(rates))});
  }
  require(kv.empty(), ErrorCode::config,
          kv.empty() ? std::string() : "unknown key '" + kv.begin()->first + "'");
  return MixtureSpec(std::move(comps));
}

MixtureSpec MixtureSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::io, "cannot open model file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

double MixtureSpec::min_rate() const noexcept {
  double m = components_.front().rate.min_value();
  for (const auto& c : components_) m = std::min(m, c.rate.min_value());
  return m;
}

double MixtureSpec::max_rate() const noexcept {
  double m = components_.front().rate.max_value();
  for (const auto& c : components_) m = std::max(m, c.rate.max_value());
  return m;
}

double MixtureSpec::min_rate_at(double t) const {
  double m = components_.front().rate.value_at(t);
  for (const auto& c : components_) m = std::min(m, c.rate.value_at(t));
  return m;
}

double MixtureSpec::max_rate_at(double t) const {
  double m = components_.front().rate.value_at(t);
  for (const auto& c : components_) m = std::max(m, c.rate.value_at(t));
  return m;
}

std::string MixtureSpec::to_text() const {
  char buf[32];
  auto list = [&](std::span<const double> xs) {
    std::string s;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      if (k) s += ", ";
      s += format_double(xs[k], buf);
    }
    return s;
  };
  std::string out;
  out += "horizon = " + std::string(format_double(horizon(), buf)) + "\n";
  out += "breakpoints = " + list(breakpoints()) + "\n";
  out += "branches = " + std::to_string(components_.size()) + "\n";
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const std::string prefix = "branch." + std::to_string(i) + ".";
    out += prefix + "weight = " + std::string(format_double(components_[i].weight, buf)) + "\n";
    out += prefix + "rates = " + list(components_[i].rate.values()) + "\n";
  }
  return out;
}

std::uint64_t MixtureSpec::fingerprint() const { return fnv1a64(to_text()); }

// ---------------------------------------------------------------------------
// Marginals and sampling

double cum_variance(const MixtureSpec& spec, std::size_t branch, double t) {
  require(branch < spec.branch_count(), ErrorCode::invalid_argument, "branch index out of range");
  return spec.component(branch).rate.integral(t);
}

double marginal_cdf_x(const MixtureSpec& spec, double t, double x) {
  require(t >= 0.0 && t <= spec.horizon(), ErrorCode::domain, "time outside [0, T]");
  require(t > 0.0, ErrorCode::degenerate, "X_0 is a point mass at 0");
  double p = 0.0;
  for (std::size_t i = 0; i < spec.branch_count(); ++i) {
    const double s = cum_variance(spec, i, t);
    p += spec.component(i).weight * norm_cdf((x + 0.5 * s) / std::sqrt(s));
  }
  return std::clamp(p, 0.0, 1.0);
}

std::vector<double> BranchPathBatch::column(double t) const {
  std::size_t k = 0;
  while (k < times.size() && std::abs(times[k] - t) > 1e-12) ++k;
  require(k < times.size(), ErrorCode::invalid_argument, "time is not on the recorded grid");
  std::vector<double> out(path_count());
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = x(p, k);
  return out;
}

namespace {

std::size_t draw_branch(const MixtureSpec& spec, double u) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < spec.branch_count(); ++i) {
    acc += spec.component(i).weight;
    if (u < acc) return i;
  }
  return spec.branch_count() - 1;
}

void check_grid(const MixtureSpec& spec, const TimeGrid& grid) {
  require(std::abs(grid.horizon() - spec.horizon()) <= 1e-12, ErrorCode::config,
          "grid horizon differs from the model horizon");
}

}  // namespace

BranchPathBatch sample_mixing_paths(const MixtureSpec& spec, const TimeGrid& grid,
                                    const RngConfig& rng, std::size_t n_paths) {
  check_grid(spec, grid);
  const auto times = grid.times();
  const std::size_t m = times.size();
  // cumulative variance of every branch at every grid time
  std::vector<double> cum(spec.branch_count() * m);
  for (std::size_t i = 0; i < spec.branch_count(); ++i)
    for (std::size_t k = 0; k < m; ++k) cum[i * m + k] = cum_variance(spec, i, times[k]);

  BranchPathBatch batch;
  batch.times.assign(times.begin(), times.end());
  batch.branch.resize(n_paths);
  batch.log_price.resize(n_paths * m);
  batch.realized_variance.resize(n_paths);

  parallel_for_ranges(n_paths, rng.workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      PathRng pick(rng.seed, p, Substream::branch);
      PathRng noise(rng.seed, p, Substream::brownian);
      const std::size_t i = draw_branch(spec, pick.uniform());
      const double* c = &cum[i * m];
      double* row = &batch.log_price[p * m];
      double x = 0.0;
      row[0] = x;
      for (std::size_t k = 1; k < m; ++k) {
        const double var = c[k] - c[k - 1];
        x += std::sqrt(var) * noise.normal() - 0.5 * var;
        row[k] = x;
      }
      batch.branch[p] = static_cast<std::uint32_t>(i);
      batch.realized_variance[p] = c[m - 1];
    }
  });
  return batch;
}

double conditional_median(double s) {
  require(s > 0.0 && std::isfinite(s), ErrorCode::domain, "price must be positive");
  return std::sqrt(s);
}

BranchPathBatch adapted_sign_simulate(const MixtureSpec& spec, const TimeGrid& grid,
                                      const RngConfig& rng, std::size_t n_paths) {
  check_grid(spec, grid);
  require(spec.branch_count() == 2 && spec.component(0).weight == 0.5 &&
              spec.component(1).weight == 0.5,
          ErrorCode::invalid_model, "adapted-sign construction needs two equally weighted branches");
  require(spec.breakpoints().size() >= 3 &&
              spec.component(0).rate.values()[0] == spec.component(1).rate.values()[0],
          ErrorCode::invalid_model, "branches must agree on the first interval");

  const double t_switch = spec.breakpoints()[1];
  const double t_mid = 0.5 * t_switch;
  const double knots[] = {t_mid, t_switch};
  const TimeGrid fine = grid.refined(knots);
  const auto times = fine.times();
  const std::size_t m = times.size();
  const std::size_t k_mid = *fine.index_of(t_mid);
  const std::size_t k_switch = *fine.index_of(t_switch);

  // recorded column for each fine index, or npos
  std::vector<std::size_t> slot(m, static_cast<std::size_t>(-1));
  for (std::size_t k = 0; k < m; ++k)
    if (auto j = grid.index_of(times[k])) slot[k] = *j;

  std::vector<double> cum(2 * m);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t k = 0; k < m; ++k) cum[i * m + k] = cum_variance(spec, i, times[k]);

  const std::size_t rec = grid.size();
  BranchPathBatch batch;
  batch.times.assign(grid.times().begin(), grid.times().end());
  batch.branch.resize(n_paths);
  batch.log_price.resize(n_paths * rec);
  batch.realized_variance.resize(n_paths);

  parallel_for_ranges(n_paths, rng.workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      PathRng noise(rng.seed, p, Substream::brownian);
      double* row = &batch.log_price[p * rec];
      double x = 0.0;
      double x_mid = 0.0;
      std::size_t branch = 0;
      row[0] = x;
      for (std::size_t k = 1; k < m; ++k) {
        // both branches share cum[] up to k_switch
        const double* c = &cum[branch * m];
        const double var = c[k] - c[k - 1];
        x += std::sqrt(var) * noise.normal() - 0.5 * var;
        if (k == k_mid) x_mid = x;
        if (k == k_switch) {
          // S_mid > m(S_switch) = sqrt(S_switch)  <=>  X_mid > X_switch / 2
          branch = std::exp(x_mid) > conditional_median(std::exp(x)) ? 0 : 1;
        }
        if (slot[k] != static_cast<std::size_t>(-1)) row[slot[k]] = x;
      }
      batch.branch[p] = static_cast<std::uint32_t>(branch);
      batch.realized_variance[p] = cum[branch * m + m - 1];
    }
  });
  return batch;
}

}  // namespace lvcx
