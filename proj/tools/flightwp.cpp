// flightwp: simulate random flights, estimate W_p to their limits, tabulate
// tail functionals, and run the verification checks.
//
//   flightwp simulate    --regime poly --alpha 1.0 --n 100 --m 10 --seed 7 --out paths/
//   flightwp wasserstein --regime exp --beta 1 --n 25 100 400 --m 200 --out conv/
//   flightwp tails       --regime superexp --R 0.5 1 1.5 --out tails/
//   flightwp verify      --only lemma3 --alpha 1
//
// Exit status: 0 when every verdict holds, 1 when some verdict fails, 2 for
// invalid configuration.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "flightwp/flightwp.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace flightwp;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_failed = 1;
constexpr int exit_usage = 2;

const std::vector<std::string> all_checks{"lemma1", "lemma2",     "lemma3", "lemma4",       "lemma5",   "corollary1",
                                          "doob",   "martingale", "tail",   "decomposition", "dimension"};

struct RunConfig {
  std::string command;
  std::string regime = "poly";
  double alpha = 1.0;
  double beta = 1.0;
  std::string logf = "exp-square";
  std::vector<std::size_t> n;
  std::size_t m = 0;
  double p = 1.0;
  std::vector<double> radii;
  std::size_t replicas = 0;  // 0: each check's own default
  std::uint64_t seed = 1;
  std::string out = "flightwp-out";
  std::string solver = "exact";
  unsigned threads = 1;
  std::size_t d = 1;
  bool limit = false;
  std::string form = "direct";
  std::vector<std::string> only;
  bool corrupt_drift = false;
  std::size_t repeats = 5;
  std::size_t grid = 512;
  double tol = 1e-8;
  double eta = 1e-3;

  std::set<std::string> explicit_keys;  // given by flag or config file
  bool given(const std::string& key) const { return explicit_keys.count(key) > 0; }
};

json to_json(const RunConfig& c) {
  return {{"command", c.command}, {"regime", c.regime},   {"alpha", c.alpha},     {"beta", c.beta},
          {"logf", c.logf},       {"n", c.n},             {"m", c.m},             {"p", c.p},
          {"R", c.radii},         {"replicas", c.replicas}, {"seed", c.seed},     {"out", c.out},
          {"solver", c.solver},   {"threads", c.threads}, {"d", c.d},             {"limit", c.limit},
          {"form", c.form},       {"only", c.only},       {"corrupt-drift", c.corrupt_drift},
          {"repeats", c.repeats}, {"grid", c.grid},       {"tol", c.tol},         {"eta", c.eta}};
}

/// Setters for config-file keys; the key set doubles as the list of known keys.
std::map<std::string, std::function<void(RunConfig&, const json&)>> config_setters() {
  return {
      {"regime", [](RunConfig& c, const json& v) { c.regime = v.get<std::string>(); }},
      {"alpha", [](RunConfig& c, const json& v) { c.alpha = v.get<double>(); }},
      {"beta", [](RunConfig& c, const json& v) { c.beta = v.get<double>(); }},
      {"logf", [](RunConfig& c, const json& v) { c.logf = v.get<std::string>(); }},
      {"n", [](RunConfig& c, const json& v) { c.n = v.is_array() ? v.get<std::vector<std::size_t>>() : std::vector<std::size_t>{v.get<std::size_t>()}; }},
      {"m", [](RunConfig& c, const json& v) { c.m = v.get<std::size_t>(); }},
      {"p", [](RunConfig& c, const json& v) { c.p = v.get<double>(); }},
      {"R", [](RunConfig& c, const json& v) { c.radii = v.is_array() ? v.get<std::vector<double>>() : std::vector<double>{v.get<double>()}; }},
      {"replicas", [](RunConfig& c, const json& v) { c.replicas = v.get<std::size_t>(); }},
      {"seed", [](RunConfig& c, const json& v) { c.seed = v.get<std::uint64_t>(); }},
      {"out", [](RunConfig& c, const json& v) { c.out = v.get<std::string>(); }},
      {"solver", [](RunConfig& c, const json& v) { c.solver = v.get<std::string>(); }},
      {"threads", [](RunConfig& c, const json& v) { c.threads = v.get<unsigned>(); }},
      {"d", [](RunConfig& c, const json& v) { c.d = v.get<std::size_t>(); }},
      {"limit", [](RunConfig& c, const json& v) { c.limit = v.get<bool>(); }},
      {"form", [](RunConfig& c, const json& v) { c.form = v.get<std::string>(); }},
      {"only", [](RunConfig& c, const json& v) { c.only = v.is_array() ? v.get<std::vector<std::string>>() : std::vector<std::string>{v.get<std::string>()}; }},
      {"corrupt-drift", [](RunConfig& c, const json& v) { c.corrupt_drift = v.get<bool>(); }},
      {"repeats", [](RunConfig& c, const json& v) { c.repeats = v.get<std::size_t>(); }},
      {"grid", [](RunConfig& c, const json& v) { c.grid = v.get<std::size_t>(); }},
      {"tol", [](RunConfig& c, const json& v) { c.tol = v.get<double>(); }},
      {"eta", [](RunConfig& c, const json& v) { c.eta = v.get<double>(); }},
  };
}

/// Thrown for configuration problems; maps to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Regime resolve_regime(const RunConfig& c) {
  Regime regime;
  if (c.regime == "poly" || c.regime == "polynomial") regime = Polynomial{c.alpha};
  else if (c.regime == "exp" || c.regime == "exponential") regime = Exponential{c.beta};
  else if (c.regime == "superexp" || c.regime == "superexponential") regime = SuperExponential{superexp_preset(c.logf)};
  else throw UsageError("unknown regime '" + c.regime + "' (known: poly, exp, superexp)");
  validate(regime);
  return regime;
}

void apply_defaults(RunConfig& c) {
  if (c.n.empty()) c.n = c.command == "simulate" ? std::vector<std::size_t>{100} : std::vector<std::size_t>{25, 100, 400};
  if (c.m == 0) c.m = c.command == "simulate" ? 10 : c.command == "wasserstein" ? 200 : 1000;
  if (c.radii.empty()) c.radii = {0.5, 1.0, 1.25, 1.5, 2.0, 4.0};
  if (c.only.empty()) c.only = all_checks;
  if (c.d == 0) throw UsageError("dimension d must be >= 1");
  if (c.threads == 0) c.threads = 1;
  if (!(c.p >= 1.0)) throw UsageError("p must be >= 1");
  solver_from_string(c.solver);
  if (c.solver == "brute" && c.m > brute_force_limit)
    throw UsageError("brute-force solver supports m <= " + std::to_string(brute_force_limit) + " (got m = " +
                     std::to_string(c.m) + ")");
  if (c.form != "direct" && c.form != "reversed") throw UsageError("form must be direct or reversed");
  for (const auto& name : c.only)
    if (std::find(all_checks.begin(), all_checks.end(), name) == all_checks.end())
      throw UsageError("unknown check '" + name + "'");
}

void write_json(const fs::path& file, const json& j) {
  std::ofstream out(file);
  out << std::setw(2) << j << '\n';
}

// ---------------------------------------------------------------------------

int cmd_simulate(const RunConfig& c) {
  const Regime regime = resolve_regime(c);
  const std::size_t n = c.n.front();
  const fs::path dir(c.out);
  fs::create_directories(dir);
  const RandomSeed master{c.seed};
  LimitSamplerConfig limit{regime, c.grid, c.tol, c.d, std::nullopt};
  const auto form = c.form == "reversed" ? ExponentialForm::reversed : ExponentialForm::direct;
  for (std::size_t i = 0; i < c.m; ++i) {
    const RandomSeed seed = derive_seed(master, i);
    Polyline path = Polyline::zero(c.d);
    if (c.limit) path = sample_limit(limit, seed);
    else if (std::holds_alternative<Exponential>(regime))
      path = build_exponential_flight(std::get<Exponential>(regime).beta, n, c.d, seed, form).path;
    else path = build_flight(regime, n, c.d, seed).path;
    json j = flightwp::to_json(path);
    j["meta"] = {{"index", i}, {"seed", seed.value}, {"kind", c.limit ? "limit" : "flight"}, {"config", to_json(c)}};
    std::ostringstream name;
    name << "path_" << std::setw(4) << std::setfill('0') << i << ".json";
    write_json(dir / name.str(), j);
  }
  std::cout << "wrote " << c.m << " paths to " << dir.string() << '\n';
  return exit_ok;
}

int cmd_wasserstein(const RunConfig& c) {
  ConvergenceConfig conv;
  conv.regime = resolve_regime(c);
  conv.p = c.p;
  conv.ns = c.n;
  conv.m = c.m;
  conv.repeats = c.repeats;
  conv.d = c.d;
  conv.seed = RandomSeed{c.seed};
  conv.grid = c.grid;
  conv.tol = c.tol;
  conv.solver = solver_from_string(c.solver);
  conv.eta_relative = c.eta;
  conv.threads = c.threads;
  const auto table = run_convergence(conv);

  // Invariants that must hold exactly: finite nonnegative estimates, and for
  // regimes living in the unit ball every distance is at most 2.
  const bool bounded = !std::holds_alternative<Polynomial>(conv.regime);
  bool ok = true;
  for (const auto& rec : table.records) {
    ok = ok && std::isfinite(rec.w_p) && rec.w_p >= 0.0 && std::isfinite(rec.baseline) && rec.baseline >= 0.0;
    if (bounded) ok = ok && rec.w_p <= 2.0 && rec.baseline <= 2.0;
  }
  const fs::path dir(c.out);
  fs::create_directories(dir);
  {
    std::ofstream csv(dir / "convergence.csv");
    write_convergence_csv(csv, table);
  }
  json j = flightwp::to_json(table);
  j["run_config"] = to_json(c);
  j["invariants_hold"] = ok;
  write_json(dir / "convergence.json", j);

  std::cout << std::setw(6) << "n" << std::setw(14) << "W_p" << std::setw(12) << "sd" << std::setw(14) << "baseline"
            << std::setw(12) << "sd" << '\n';
  for (const auto& row : table.rows)
    std::cout << std::setw(6) << row.n << std::setw(14) << row.w_p << std::setw(12) << row.w_p_sd << std::setw(14)
              << row.baseline << std::setw(12) << row.baseline_sd << '\n';
  const auto trend = assess_convergence(table);
  std::cout << "trend: non-increasing=" << trend.non_increasing << " final-near-baseline=" << trend.final_near_baseline
            << '\n';
  return ok ? exit_ok : exit_failed;
}

int cmd_tails(const RunConfig& c) {
  TailConfig t;
  t.regime = resolve_regime(c);
  t.p = c.p;
  t.ns = c.n;
  t.radii = c.radii;
  t.m = c.m;
  t.d = c.d;
  t.seed = RandomSeed{c.seed};
  t.threads = c.threads;
  const auto table = run_tail_table(t);
  const fs::path dir(c.out);
  fs::create_directories(dir);
  {
    std::ofstream csv(dir / "tails.csv");
    write_tail_csv(csv, table);
  }
  json j = flightwp::to_json(table);
  j["run_config"] = to_json(c);
  write_json(dir / "tails.json", j);
  const bool ok = tail_table_consistent(table);
  std::cout << "tail table " << (ok ? "consistent" : "INCONSISTENT") << " (" << table.cells.size() << " cells)\n";
  return ok ? exit_ok : exit_failed;
}

CheckReport run_check(const std::string& name, const RunConfig& c) {
  const RandomSeed seed{c.seed};
  auto replicas_or = [&](std::size_t fallback) { return c.replicas > 0 ? c.replicas : fallback; };
  if (name == "lemma1")
    return check_lemma1_sweep(1.0, c.given("alpha") ? c.alpha : 1.5, 1);
  if (name == "lemma2") return check_lemma2(c.given("alpha") ? c.alpha : 1.0);
  if (name == "lemma3") return check_lemma3(c.given("alpha") ? c.alpha : 0.5);
  if (name == "lemma4") {
    Lemma4Params p;
    if (c.given("beta")) p.beta = c.beta;
    p.mc_draws = replicas_or(p.mc_draws);
    p.seed = seed;
    p.threads = c.threads;
    return check_lemma4(p);
  }
  if (name == "lemma5") {
    Lemma5Params p;
    if (c.given("alpha")) p.alpha = c.alpha;
    p.replicas = replicas_or(p.replicas);
    p.seed = seed;
    p.threads = c.threads;
    return check_lemma5(p);
  }
  if (name == "corollary1") {
    Corollary1Params p;
    if (c.given("alpha")) p.alpha = c.alpha;
    if (c.given("n")) p.ns = c.n;
    p.replicas = replicas_or(p.replicas);
    p.seed = seed;
    p.threads = c.threads;
    return check_corollary1(p);
  }
  if (name == "doob") {
    const double alpha = c.given("alpha") ? c.alpha : 1.5;
    const std::size_t n = c.given("n") ? c.n.front() : 100;
    const double p = c.given("p") ? c.p : 2.0;
    auto sample = sample_martingale(alpha, n, c.d, 1, replicas_or(10000), seed, c.threads);
    const double scale = std::max(endpoint_rms(sample), 1.0);
    if (c.corrupt_drift) sample = corrupt_with_drift(std::move(sample), 10.0 * scale);
    std::vector<double> lambdas;
    for (double f : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0}) lambdas.push_back(f * scale);
    auto r = check_doob_sweep(sample, lambdas, p);
    r.params["corrupt_drift"] = c.corrupt_drift;
    r.seeds = {seed.value};
    return r;
  }
  if (name == "martingale") {
    MartingaleParams p;
    if (c.given("alpha")) p.alpha = c.alpha;
    if (c.given("n")) p.n = c.n.front();
    p.d = c.d;
    p.replicas = replicas_or(p.replicas);
    p.seed = seed;
    p.threads = c.threads;
    return check_martingale(p);
  }
  if (name == "tail") {
    const Regime regime = c.given("regime") ? resolve_regime(c) : Regime{Polynomial{1.0}};
    const std::size_t n = c.given("n") ? c.n.front() : 1000;
    const auto sample = flight_sample(regime, n, replicas_or(2000), c.d, seed, c.threads);
    const double p = c.given("p") ? c.p : 2.0;
    if (std::holds_alternative<Polynomial>(regime))
      return check_tail_decay(sample, c.given("R") ? c.radii : std::vector<double>{2.0, 4.0, 8.0}, p);
    return estimate_tail_functional(sample, c.given("R") ? c.radii.back() : 1.5, p);
  }
  if (name == "decomposition") {
    DecompositionParams p;
    if (c.given("alpha")) p.alpha = c.alpha;
    if (c.given("n")) p.n = c.n.front();
    if (c.given("R")) p.radii = c.radii;
    p.d = c.d;
    p.replicas = replicas_or(p.replicas);
    p.seed = seed;
    p.threads = c.threads;
    return estimate_decomposition_bounds(p);
  }
  // dimension
  DimensionReductionParams p;
  if (c.given("alpha")) p.alpha = c.alpha;
  if (c.given("n")) p.n = c.n.front();
  if (c.given("R")) p.radius = c.radii.front();
  if (c.given("d")) p.d = c.d;
  p.replicas = replicas_or(p.replicas);
  p.seed = seed;
  p.threads = c.threads;
  return check_dimension_reduction(p);
}

int cmd_verify(const RunConfig& c) {
  const fs::path dir(c.out);
  fs::create_directories(dir);
  bool all_pass = true;
  for (const auto& name : c.only) {
    auto report = run_check(name, c);
    json j = flightwp::to_json(report);
    j["config"] = to_json(c);
    write_json(dir / (name + ".json"), j);
    all_pass = all_pass && report.verdict;
    std::cout << (report.verdict ? "[PASS] " : "[FAIL] ") << std::left << std::setw(14) << name << std::right
              << " slack=" << report.slack << "  (" << std::fixed << std::setprecision(0) << report.runtime_ms
              << " ms)" << std::defaultfloat << std::setprecision(6) << '\n';
  }
  return all_pass ? exit_ok : exit_failed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random flights with Poisson switching: simulation, W_p convergence and verification"};
  app.require_subcommand(1);
  app.fallthrough();
  RunConfig c;
  std::string config_file;

  app.add_option("--regime", c.regime, "poly | exp | superexp");
  app.add_option("--alpha", c.alpha, "polynomial exponent (> 1/2)");
  app.add_option("--beta", c.beta, "exponential rate (> 0)");
  app.add_option("--logf", c.logf, "super-exponential preset: exp-square | exp-cube");
  app.add_option("--n", c.n, "grid of switching counts");
  app.add_option("--m", c.m, "paths per sample");
  app.add_option("--p", c.p, "Wasserstein / tail exponent (default 1)");
  app.add_option("--R", c.radii, "tail radii");
  app.add_option("--replicas", c.replicas, "Monte Carlo replicas for checks");
  app.add_option("--seed", c.seed, "master seed (fallback: FLIGHT_SEED)");
  app.add_option("--out", c.out, "output directory");
  app.add_option("--solver", c.solver, "exact | brute | entropic");
  app.add_option("--threads", c.threads, "worker threads");
  app.add_option("--config", config_file, "JSON config file; flags win over its entries");
  app.add_option("--d", c.d, "dimension");
  app.add_flag("--limit", c.limit, "simulate: sample the limit process instead of X_n");
  app.add_option("--form", c.form, "simulate, exponential regime: direct | reversed");
  app.add_option("--only", c.only, "verify: checks to run")->delimiter(',');
  app.add_flag("--corrupt-drift", c.corrupt_drift, "verify doob: add a drift (negative control)");
  app.add_option("--repeats", c.repeats, "wasserstein: independent repeats per n");
  app.add_option("--grid", c.grid, "polynomial limit grid size M");
  app.add_option("--tol", c.tol, "exponential limit truncation tolerance");
  app.add_option("--eta", c.eta, "entropic regularization relative to the largest cost");

  for (const char* name : {"simulate", "wasserstein", "tails", "verify"})
    app.add_subcommand(name, std::string(name) + " command");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_usage;
  }
  c.command = app.get_subcommands().front()->get_name();

  try {
    const auto setters = config_setters();
    for (const auto& [key, setter] : setters) {
      (void)setter;
      if (app.get_option("--" + key)->count() > 0) c.explicit_keys.insert(key);
    }
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      if (!in) throw UsageError("cannot open config file '" + config_file + "'");
      json file = json::parse(in);
      if (!file.is_object()) throw UsageError("config file must hold a JSON object");
      for (const auto& [key, value] : file.items()) {
        const auto it = setters.find(key);
        if (it == setters.end()) throw UsageError("unknown config key '" + key + "'");
        if (c.given(key)) continue;  // flags win
        it->second(c, value);
        c.explicit_keys.insert(key);
      }
    }
    if (!c.given("seed"))
      if (const char* env = std::getenv("FLIGHT_SEED")) c.seed = std::stoull(env);
    apply_defaults(c);
    // Checks carry their own parameter ranges (lemma3 accepts alpha = 0.5),
    // so verify validates the regime only when one is named.
    if (c.command != "verify" || c.given("regime")) resolve_regime(c);
  } catch (const std::exception& e) {
    std::cerr << "flightwp: " << e.what() << '\n';
    return exit_usage;
  }

  try {
    if (c.command == "simulate") return cmd_simulate(c);
    if (c.command == "wasserstein") return cmd_wasserstein(c);
    if (c.command == "tails") return cmd_tails(c);
    return cmd_verify(c);
  } catch (const UsageError& e) {
    std::cerr << "flightwp: " << e.what() << '\n';
    return exit_usage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "flightwp: " << e.what() << '\n';
    return exit_usage;
  } catch (const std::exception& e) {
    std::cerr << "flightwp: " << e.what() << '\n';
    return exit_failed;
  }
}
