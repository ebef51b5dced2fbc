// lvcx command-line tool. Talks to the library only through the C API.
#include <CLI11.hpp>

#include <charconv>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lvcx/lvcx.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCriterion = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(lvcx_status s) {
  if (s != LVCX_OK)
    throw UsageError(std::string(lvcx_status_name(s)) + ": " + lvcx_last_error());
}

struct Text {
  lvcx_text* p = nullptr;
  Text() = default;
  Text(const Text&) = delete;
  Text& operator=(const Text&) = delete;
  ~Text() { lvcx_text_free(p); }
  std::string str() const { return {lvcx_text_data(p), lvcx_text_size(p)}; }
};

struct Model {
  lvcx_model* p = nullptr;
  Model() = default;
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  ~Model() { lvcx_model_free(p); }
};

struct Batch {
  lvcx_batch* p = nullptr;
  Batch() = default;
  Batch(const Batch&) = delete;
  Batch& operator=(const Batch&) = delete;
  ~Batch() { lvcx_batch_free(p); }
};

std::string fmt(double v) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Canonical "key=value" lines describing everything that determines the output.
class Canonical {
 public:
  Canonical& add(const std::string& key, const std::string& value) {
    text_ += key + "=" + value + "\n";
    return *this;
  }
  Canonical& add(const std::string& key, double value) { return add(key, fmt(value)); }
  std::uint64_t hash() const { return fnv1a(text_); }

 private:
  std::string text_;
};

struct Common {
  std::string preset = "toy3";
  std::string model_file;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  unsigned workers = 1;
};

void add_common(CLI::App* cmd, Common& c, bool with_seed) {
  cmd->add_option("--preset", c.preset, "Built-in model preset")->capture_default_str();
  cmd->add_option("--model-file", c.model_file, "Model file (key-value text); overrides --preset");
  cmd->add_option("--out", c.out, "Output directory")->capture_default_str();
  cmd->add_option("--workers", c.workers, "Worker threads (does not change results)")
      ->check(CLI::Range(1u, 1024u))
      ->capture_default_str();
  if (with_seed) cmd->add_option("--seed", c.seed, "RNG seed (mandatory)");
}

void load_model(const Common& c, Model& m) {
  if (!c.model_file.empty())
    check(lvcx_model_load(c.model_file.c_str(), &m.p));
  else
    check(lvcx_model_preset(c.preset.c_str(), &m.p));
}

std::uint64_t require_seed(const Common& c) {
  if (!c.seed) throw UsageError("--seed is mandatory");
  return *c.seed;
}

std::string header(const std::string& command, const Common& c, std::uint64_t config_hash,
                   const Model& m) {
  std::string h = "# lvcx version=" + std::string(lvcx_version()) + " command=" + command;
  h += " seed=" + (c.seed ? std::to_string(*c.seed) : std::string("none"));
  h += " config=" + hex64(config_hash);
  h += " model=" + hex64(lvcx_model_fingerprint(m.p));
  return h + "\n";
}

fs::path prepare_out(const Common& c) {
  fs::path dir(c.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw UsageError("cannot create output directory " + c.out);
  return dir;
}

void write_file(const fs::path& path, const std::string& head, const std::string& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot write " + path.string());
  f << head << body;
  if (!f) throw UsageError("write failed for " + path.string());
}

lvcx_range parse_range(const std::string& spec, const char* what) {
  // lo:hi:count
  const auto a = spec.find(':');
  const auto b = a == std::string::npos ? a : spec.find(':', a + 1);
  if (b == std::string::npos) throw UsageError(std::string(what) + " must be lo:hi:count");
  lvcx_range r{};
  try {
    std::size_t used = 0;
    const std::string lo = spec.substr(0, a), hi = spec.substr(a + 1, b - a - 1),
                      n = spec.substr(b + 1);
    r.lo = std::stod(lo, &used);
    if (used != lo.size()) throw std::invalid_argument(lo);
    r.hi = std::stod(hi, &used);
    if (used != hi.size()) throw std::invalid_argument(hi);
    r.count = std::stoul(n, &used);
    if (used != n.size()) throw std::invalid_argument(n);
  } catch (const std::exception&) {
    throw UsageError(std::string(what) + " must be lo:hi:count, got '" + spec + "'");
  }
  return r;
}

// ---------------------------------------------------------------- surface

struct SurfaceArgs {
  Common common;
  std::string t = "0:3:301";
  std::string x = "-2:12:401";
};

int run_surface(const SurfaceArgs& a) {
  const auto tr = parse_range(a.t, "--t");
  const auto xr = parse_range(a.x, "--x");
  Model m;
  load_model(a.common, m);
  Text csv;
  check(lvcx_surface_csv(m.p, &tr, &xr, a.common.workers, &csv.p));
  const auto dir = prepare_out(a.common);
  Canonical cfg;
  cfg.add("command", "surface").add("model", hex64(lvcx_model_fingerprint(m.p)));
  cfg.add("t.lo", tr.lo).add("t.hi", tr.hi).add("t.count", std::to_string(tr.count));
  cfg.add("x.lo", xr.lo).add("x.hi", xr.hi).add("x.count", std::to_string(xr.count));
  write_file(dir / "surface.csv", header("surface", a.common, cfg.hash(), m), csv.str());
  std::cout << "wrote " << (dir / "surface.csv").string() << " (" << tr.count * xr.count
            << " rows)\n";
  return kExitOk;
}

// ---------------------------------------------------------------- price

struct PriceArgs {
  Common common;
  std::string model = "localvol";
  std::vector<std::string> payoffs;
  double strike = 6.0;
  std::size_t paths = 100000;
  std::size_t steps_per_unit = 200;
  double epsilon = 1e-5;
  std::size_t bins = 120;
  double hist_lo = 0.0;
  double hist_hi = 12.0;
  bool records = false;
};

lvcx_model_kind to_kind(const std::string& s) {
  if (s == "mixing") return LVCX_MODEL_MIXING;
  if (s == "localvol") return LVCX_MODEL_LOCALVOL;
  if (s == "dlocalvol") return LVCX_MODEL_DLOCALVOL;
  throw UsageError("unknown model kind '" + s + "' (mixing | localvol | dlocalvol)");
}

lvcx_payoff_kind to_payoff(const std::string& s) {
  if (s == "varswap") return LVCX_PAYOFF_VARSWAP;
  if (s == "varcall") return LVCX_PAYOFF_VARCALL;
  if (s == "volswap") return LVCX_PAYOFF_VOLSWAP;
  throw UsageError("unknown payoff '" + s + "' (varswap | varcall | volswap)");
}

int run_price(const PriceArgs& a) {
  const auto seed = require_seed(a.common);
  const auto kind = to_kind(a.model);
  std::vector<std::string> payoffs = a.payoffs;
  if (payoffs.empty()) payoffs = {"varswap", "varcall", "volswap"};
  for (const auto& p : payoffs) to_payoff(p);

  Model m;
  load_model(a.common, m);
  lvcx_sim_config sim{kind, a.steps_per_unit, a.paths, seed, a.epsilon, a.common.workers};
  Batch b;
  check(lvcx_simulate(m.p, &sim, &b.p));
  const double* v = nullptr;
  std::size_t n = 0;
  check(lvcx_batch_realized_variance(b.p, &v, &n));

  std::string report;
  for (const auto& p : payoffs) {
    lvcx_estimate e{};
    check(lvcx_estimate_payoff(v, n, to_payoff(p), a.strike, &e));
    Text rec;
    check(lvcx_estimate_record(to_payoff(p), a.strike, &e, &rec.p));
    report += "model=" + a.model + " " + rec.str() + "\n";
  }
  Text hist;
  check(lvcx_histogram_csv(v, n, a.bins, a.hist_lo, a.hist_hi, &hist.p));

  Canonical cfg;
  cfg.add("command", "price").add("model", hex64(lvcx_model_fingerprint(m.p)));
  cfg.add("kind", a.model).add("seed", std::to_string(seed));
  cfg.add("paths", std::to_string(a.paths)).add("steps_per_unit", std::to_string(a.steps_per_unit));
  if (kind == LVCX_MODEL_DLOCALVOL) cfg.add("epsilon", a.epsilon);
  cfg.add("strike", a.strike);
  for (const auto& p : payoffs) cfg.add("payoff", p);
  cfg.add("bins", std::to_string(a.bins)).add("hist_lo", a.hist_lo).add("hist_hi", a.hist_hi);
  const auto head = header("price", a.common, cfg.hash(), m);

  const auto dir = prepare_out(a.common);
  write_file(dir / "price_estimates.txt", head, report);
  write_file(dir / "price_histogram.csv", head, hist.str());
  if (a.records) {
    Text recs;
    check(lvcx_batch_records(b.p, &recs.p));
    write_file(dir / "price_paths.csv", head, recs.str());
  }
  std::cout << report;
  return kExitOk;
}

// ---------------------------------------------------------------- bound

struct BoundArgs {
  Common common;
  std::string corridor = "paper_corridor";
  double t_res = 1000.0;
  double x_res = 1000.0;
};

int run_bound(const BoundArgs& a) {
  Model m;
  load_model(a.common, m);
  double value = 0.0;
  Text report;
  check(lvcx_corridor_bound(m.p, a.corridor.c_str(), a.t_res, a.x_res, &value, &report.p));
  Canonical cfg;
  cfg.add("command", "bound").add("model", hex64(lvcx_model_fingerprint(m.p)));
  cfg.add("corridor", a.corridor).add("t_res", a.t_res).add("x_res", a.x_res);
  const auto dir = prepare_out(a.common);
  write_file(dir / "bound_report.txt", header("bound", a.common, cfg.hash(), m), report.str());
  std::cout << report.str();
  return kExitOk;
}

// ---------------------------------------------------------------- dloc-check

struct DlocArgs {
  Common common;
  double epsilon = 1e-5;
  double t = 1.5;
  std::size_t samples = 1000000;
  std::size_t x_bins = 20;
  std::size_t a_bins = 20;
  std::size_t min_count = 100;
  double pass_fraction = 0.95;
};

int run_dloc(const DlocArgs& a) {
  const auto seed = require_seed(a.common);
  Model m;
  load_model(a.common, m);
  lvcx_dloc_check_config c{a.epsilon, a.t,         a.samples,   seed,
                           a.x_bins,  a.a_bins,    a.min_count, a.common.workers};
  Text csv;
  std::size_t populated = 0, within = 0;
  check(lvcx_dloc_check(m.p, &c, &csv.p, &populated, &within));
  Canonical cfg;
  cfg.add("command", "dloc-check").add("model", hex64(lvcx_model_fingerprint(m.p)));
  cfg.add("seed", std::to_string(seed)).add("epsilon", a.epsilon).add("t", a.t);
  cfg.add("samples", std::to_string(a.samples)).add("x_bins", std::to_string(a.x_bins));
  cfg.add("a_bins", std::to_string(a.a_bins)).add("min_count", std::to_string(a.min_count));
  const auto dir = prepare_out(a.common);
  write_file(dir / "dloc_check.csv", header("dloc-check", a.common, cfg.hash(), m), csv.str());
  const double frac = populated ? static_cast<double>(within) / static_cast<double>(populated) : 0;
  const bool ok = populated > 0 && frac >= a.pass_fraction;
  std::cout << (ok ? "PASS" : "FAIL") << " populated_bins=" << populated
            << " within_3se=" << within << " fraction=" << fmt(frac)
            << " required=" << fmt(a.pass_fraction) << "\n";
  return ok ? kExitOk : kExitCriterion;
}

// ---------------------------------------------------------------- selftest

struct SelftestArgs {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> paths;
  unsigned workers = 1;
  std::vector<int> only;
  bool list = false;
};

int run_selftest(const SelftestArgs& a) {
  if (a.list) {
    const auto n = lvcx_selftest_count();
    for (std::size_t i = 0; i < n; ++i) {
      int id = 0;
      const char* name = nullptr;
      const char* summary = nullptr;
      check(lvcx_selftest_info(i, &id, &name, &summary));
      std::printf("[%2d] %-28s %s\n", id, name, summary);
    }
    return kExitOk;
  }
  if (!a.seed) throw UsageError("--seed is mandatory");
  lvcx_selftest_config c{*a.seed, a.paths.value_or(0), a.workers,
                         a.only.empty() ? nullptr : a.only.data(), a.only.size()};
  struct Tally {
    std::vector<std::string> failed;
  } tally;
  auto cb = [](const char* line, int passed, int supplementary, void* user) {
    std::puts(line);
    std::fflush(stdout);
    if (!passed && !supplementary) static_cast<Tally*>(user)->failed.emplace_back(line);
  };
  int all = 0;
  check(lvcx_selftest_run(&c, cb, &tally, &all));
  if (all) {
    std::puts("selftest: all criteria passed");
    return kExitOk;
  }
  std::printf("selftest: %zu criteria failed\n", tally.failed.size());
  for (const auto& f : tally.failed) std::printf("  %s\n", f.c_str());
  return kExitCriterion;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lvcx: local vs. stochastic volatility prices of options on variance"};
  app.set_config("--config", "", "Key-value config file; command-line flags take precedence");
  app.set_version_flag("--version", std::string(lvcx_version()));
  app.require_subcommand(1);

  SurfaceArgs surface;
  auto* s = app.add_subcommand("surface", "Tabulate the local variance surface as CSV");
  add_common(s, surface.common, false);
  s->add_option("--t", surface.t, "Time grid lo:hi:count")->capture_default_str();
  s->add_option("--x", surface.x, "Log-price grid lo:hi:count")->capture_default_str();

  PriceArgs price;
  auto* p = app.add_subcommand("price", "Simulate a model and price options on realized variance");
  add_common(p, price.common, true);
  p->add_option("--model", price.model, "mixing | localvol | dlocalvol")->capture_default_str();
  p->add_option("--payoff", price.payoffs, "varswap | varcall | volswap (repeatable; default all)");
  p->add_option("--strike", price.strike, "Variance-call strike")->capture_default_str();
  p->add_option("--paths", price.paths, "Number of paths")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  p->add_option("--steps-per-unit", price.steps_per_unit, "Euler steps per unit time")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  p->add_option("--epsilon", price.epsilon, "Auxiliary noise level (dlocalvol)")
      ->capture_default_str();
  p->add_option("--bins", price.bins, "Histogram bins")->capture_default_str();
  p->add_option("--hist-lo", price.hist_lo, "Histogram lower edge")->capture_default_str();
  p->add_option("--hist-hi", price.hist_hi, "Histogram upper edge")->capture_default_str();
  p->add_flag("--records", price.records, "Also write per-path records");

  BoundArgs bound;
  auto* b = app.add_subcommand("bound", "Corridor lower bound on local-vol realized variance");
  add_common(b, bound.common, false);
  b->add_option("--corridor", bound.corridor, "Corridor preset (paper_corridor | none)")
      ->capture_default_str();
  b->add_option("--t-res", bound.t_res, "Time cells per unit")->capture_default_str();
  b->add_option("--x-res", bound.x_res, "Log-price cells per unit")->capture_default_str();

  DlocArgs dloc;
  auto* d = app.add_subcommand("dloc-check", "Binned check of the double-local variance surface");
  add_common(d, dloc.common, true);
  d->add_option("--epsilon", dloc.epsilon, "Auxiliary noise level")->capture_default_str();
  d->add_option("--t", dloc.t, "Time slice")->capture_default_str();
  d->add_option("--samples", dloc.samples, "Mixing-model samples")->capture_default_str();
  d->add_option("--x-bins", dloc.x_bins, "Bins in x")->capture_default_str();
  d->add_option("--a-bins", dloc.a_bins, "Bins in a")->capture_default_str();
  d->add_option("--min-count", dloc.min_count, "Samples for a bin to count")->capture_default_str();
  d->add_option("--pass-fraction", dloc.pass_fraction, "Required fraction within 3 stderr")
      ->capture_default_str();

  SelftestArgs st;
  auto* t = app.add_subcommand("selftest", "Run the acceptance criteria");
  t->add_option("--seed", st.seed, "RNG seed (mandatory unless --list)");
  t->add_option("--paths", st.paths, "Override path counts (for quick, under-powered runs)");
  t->add_option("--workers", st.workers, "Worker threads")->capture_default_str();
  t->add_option("--only", st.only, "Run only these criterion ids");
  t->add_flag("--list", st.list, "List criteria without running them");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (s->parsed()) return run_surface(surface);
    if (p->parsed()) return run_price(price);
    if (b->parsed()) return run_bound(bound);
    if (d->parsed()) return run_dloc(dloc);
    if (t->parsed()) return run_selftest(st);
  } catch (const UsageError& e) {
    std::cerr << "lvcx: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "lvcx: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
