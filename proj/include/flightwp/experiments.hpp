#pragma once

// Convergence tables W_p(μ_{X_n}, μ_Y) against the self-distance floor, and
// tail-functional tables.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "flightwp/flight_builder.hpp"
#include "flightwp/limit_samplers.hpp"
#include "flightwp/parallel.hpp"
#include "flightwp/path_space.hpp"
#include "flightwp/random.hpp"
#include "flightwp/stats.hpp"
#include "flightwp/transport.hpp"
#include "flightwp/verification.hpp"

namespace flightwp {

/// m flight paths; path i uses derive_seed(seed, i).
inline PathSample flight_sample(const Regime& regime, std::size_t n, std::size_t m, std::size_t d,
                                RandomSeed seed, unsigned threads = 1) {
  validate(regime);
  PathSample sample;
  sample.paths.resize(m, Polyline::zero(d));
  parallel_for(m, threads, [&](std::size_t i) {
    sample.paths[i] = build_flight(regime, n, d, derive_seed(seed, i)).path;
  });
  sample.meta = {{"kind", "flight"}, {"regime", to_json(regime)}, {"n", n}, {"d", d}, {"seed", seed.value}};
  return sample;
}

/// m limit paths; path i uses derive_seed(seed, i).
inline PathSample limit_sample(const LimitSamplerConfig& config, std::size_t m, RandomSeed seed,
                               unsigned threads = 1) {
  validate(config.regime);
  PathSample sample;
  sample.paths.resize(m, Polyline::zero(config.dimension));
  parallel_for(m, threads, [&](std::size_t i) { sample.paths[i] = sample_limit(config, derive_seed(seed, i)); });
  sample.meta = {{"kind", "limit"}, {"regime", to_json(config.regime)}, {"d", config.dimension},
                 {"grid", config.grid}, {"tol", config.tol}, {"seed", seed.value}};
  return sample;
}

struct ConvergenceConfig {
  Regime regime = Polynomial{};
  double p = 1.0;
  std::vector<std::size_t> ns{25, 100, 400};
  std::size_t m = 200;
  std::size_t repeats = 5;
  std::size_t d = 1;
  RandomSeed seed = default_check_seed;
  std::size_t grid = 512;
  double tol = 1e-8;
  Solver solver = Solver::exact;
  double eta_relative = 1e-3;  // entropic solver only
  unsigned threads = 1;
};

inline nlohmann::json to_json(const ConvergenceConfig& c) {
  const char* solver = c.solver == Solver::exact ? "exact" : c.solver == Solver::brute_force ? "brute" : "entropic";
  return {{"regime", to_json(c.regime)}, {"p", c.p},       {"n", c.ns},       {"m", c.m},
          {"repeats", c.repeats},        {"d", c.d},       {"seed", c.seed.value},
          {"grid", c.grid},              {"tol", c.tol},   {"solver", solver},
          {"eta_relative", c.eta_relative}};
}

struct ConvergenceRecord {
  std::size_t n = 0;
  std::size_t repeat = 0;
  double w_p = 0.0;
  double baseline = 0.0;
  double runtime_ms = 0.0;
};

struct ConvergenceRow {
  std::size_t n = 0;
  std::size_t m = 0;
  double w_p = 0.0;         // mean over repeats
  double w_p_sd = 0.0;      // sample standard deviation over repeats
  double baseline = 0.0;
  double baseline_sd = 0.0;
  double runtime_ms = 0.0;  // total over repeats
};

struct ConvergenceTable {
  ConvergenceConfig config;
  std::vector<ConvergenceRecord> records;  // ordered by (n, repeat)
  std::vector<ConvergenceRow> rows;        // ordered by n
};

/// Seeds of one (n, repeat) cell: derive(derive(master, n index), repeat);
/// its flight, limit and baseline samples use children 0, 1 and 2.
inline RandomSeed cell_seed(RandomSeed master, std::size_t n_index, std::size_t repeat) {
  return derive_seed(derive_seed(master, n_index), repeat);
}

inline ConvergenceTable run_convergence(const ConvergenceConfig& config) {
  validate(config.regime);
  if (config.m < 1) throw std::invalid_argument("convergence run requires m >= 1");
  if (config.repeats < 1) throw std::invalid_argument("convergence run requires repeats >= 1");
  if (!(config.p >= 1.0)) throw std::invalid_argument("convergence run requires p >= 1");
  if (config.ns.empty() || !std::is_sorted(config.ns.begin(), config.ns.end()) ||
      std::adjacent_find(config.ns.begin(), config.ns.end()) != config.ns.end())
    throw std::invalid_argument("n grid must be strictly increasing");
  if (config.solver == Solver::brute_force && config.m > brute_force_limit)
    throw std::invalid_argument("brute-force solver supports m <= " + std::to_string(brute_force_limit));

  LimitSamplerConfig limit{config.regime, config.grid, config.tol, config.d, std::nullopt};
  ConvergenceTable table{config, std::vector<ConvergenceRecord>(config.ns.size() * config.repeats), {}};
  parallel_for(table.records.size(), config.threads, [&](std::size_t cell) {
    Stopwatch clock;
    const std::size_t n_index = cell / config.repeats;
    const std::size_t repeat = cell % config.repeats;
    const RandomSeed seed = cell_seed(config.seed, n_index, repeat);
    const auto flights = flight_sample(config.regime, config.ns[n_index], config.m, config.d, derive_seed(seed, 0));
    const auto limits = limit_sample(limit, config.m, derive_seed(seed, 1));
    const auto others = limit_sample(limit, config.m, derive_seed(seed, 2));
    auto& rec = table.records[cell];
    rec.n = config.ns[n_index];
    rec.repeat = repeat;
    rec.w_p = empirical_wasserstein(flights, limits, config.p, config.solver, config.eta_relative).value;
    rec.baseline = empirical_wasserstein(limits, others, config.p, config.solver, config.eta_relative).value;
    rec.runtime_ms = clock.elapsed_ms();
  });
  for (std::size_t g = 0; g < config.ns.size(); ++g) {
    RunningStats w, b;
    double runtime = 0.0;
    for (std::size_t r = 0; r < config.repeats; ++r) {
      const auto& rec = table.records[g * config.repeats + r];
      w.add(rec.w_p);
      b.add(rec.baseline);
      runtime += rec.runtime_ms;
    }
    table.rows.push_back({config.ns[g], config.m, w.mean(), w.stddev(), b.mean(), b.stddev(), runtime});
  }
  return table;
}

/// Trend judgement on a convergence table. The pooled standard deviation is
/// sqrt of the average per-row variance of the W_p and baseline columns.
struct TrendAssessment {
  double pooled_sd = 0.0;
  bool non_increasing = false;  // each row <= previous row + pooled_sd
  bool within_error_bars = false;  // each row <= previous row + both rows' sd in quadrature
  bool final_near_baseline = false;  // last W_p <= last baseline + 3 pooled_sd
  double worst_increase = 0.0;
  double final_excess = 0.0;  // last W_p - last baseline
  bool passed() const { return non_increasing && final_near_baseline; }
};

inline TrendAssessment assess_convergence(const ConvergenceTable& table) {
  if (table.rows.empty()) throw std::invalid_argument("empty convergence table");
  TrendAssessment out;
  double var = 0.0;
  for (const auto& row : table.rows) var += row.w_p_sd * row.w_p_sd + row.baseline_sd * row.baseline_sd;
  out.pooled_sd = std::sqrt(var / (2.0 * static_cast<double>(table.rows.size())));
  out.non_increasing = true;
  out.within_error_bars = true;
  out.worst_increase = -std::numeric_limits<double>::infinity();
  for (std::size_t g = 1; g < table.rows.size(); ++g) {
    const double increase = table.rows[g].w_p - table.rows[g - 1].w_p;
    out.worst_increase = std::max(out.worst_increase, increase);
    out.non_increasing = out.non_increasing && increase <= out.pooled_sd;
    const double bar = std::hypot(table.rows[g].w_p_sd, table.rows[g - 1].w_p_sd);
    out.within_error_bars = out.within_error_bars && increase <= bar;
  }
  if (table.rows.size() < 2) out.worst_increase = 0.0;
  out.final_excess = table.rows.back().w_p - table.rows.back().baseline;
  out.final_near_baseline = out.final_excess <= 3.0 * out.pooled_sd;
  return out;
}

inline void write_convergence_csv(std::ostream& out, const ConvergenceTable& table) {
  const auto regime = regime_name(table.config.regime);
  out << "regime,p,n,m,repeat,w_p,baseline,runtime_ms\n";
  out.precision(17);
  for (const auto& rec : table.records)
    out << regime << ',' << table.config.p << ',' << rec.n << ',' << table.config.m << ',' << rec.repeat << ','
        << rec.w_p << ',' << rec.baseline << ',' << rec.runtime_ms << '\n';
}

inline nlohmann::json to_json(const ConvergenceTable& table) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& rec : table.records)
    records.push_back({{"n", rec.n}, {"repeat", rec.repeat}, {"w_p", rec.w_p},
                       {"baseline", rec.baseline}, {"runtime_ms", rec.runtime_ms}});
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : table.rows)
    rows.push_back({{"n", row.n}, {"m", row.m}, {"w_p", row.w_p}, {"w_p_sd", row.w_p_sd},
                    {"baseline", row.baseline}, {"baseline_sd", row.baseline_sd},
                    {"runtime_ms", row.runtime_ms}});
  const auto trend = assess_convergence(table);
  return {{"config", to_json(table.config)},
          {"records", records},
          {"rows", rows},
          {"trend", {{"pooled_sd", trend.pooled_sd},
                     {"non_increasing", trend.non_increasing},
                     {"within_error_bars", trend.within_error_bars},
                     {"final_near_baseline", trend.final_near_baseline},
                     {"final_excess", trend.final_excess}}}};
}

// ---------------------------------------------------------------------------

struct TailConfig {
  Regime regime = Polynomial{};
  double p = 1.0;
  std::vector<std::size_t> ns{25, 100, 400};
  std::vector<double> radii{0.5, 1.0, 1.25, 1.5, 2.0, 4.0};
  std::size_t m = 1000;
  std::size_t d = 1;
  RandomSeed seed = default_check_seed;
  unsigned threads = 1;
};

struct TailCell {
  std::size_t n = 0;
  double radius = 0.0;
  double estimate = 0.0;
  double stderr_estimate = 0.0;
  std::size_t tail_count = 0;
};

struct TailTable {
  TailConfig config;
  std::vector<TailCell> cells;  // row-major over (n, R)
};

/// Tail-functional estimates over the (n, R) grid. Each n row uses one flight
/// sample seeded derive_seed(seed, n index), shared across R.
inline TailTable run_tail_table(const TailConfig& config) {
  validate(config.regime);
  if (config.m < 1 || config.ns.empty() || config.radii.empty())
    throw std::invalid_argument("tail table needs m >= 1 and nonempty grids");
  TailTable table{config, {}};
  for (std::size_t g = 0; g < config.ns.size(); ++g) {
    const auto sample = flight_sample(config.regime, config.ns[g], config.m, config.d,
                                      derive_seed(config.seed, g), config.threads);
    for (double radius : config.radii) {
      const auto est = tail_functional(sample, radius, config.p);
      table.cells.push_back({config.ns[g], radius, est.value, est.stderr_value, est.tail_count});
    }
  }
  return table;
}

/// Bounded regimes must have identically zero rows for R > 1.
inline bool tail_table_consistent(const TailTable& table) {
  const bool bounded = !std::holds_alternative<Polynomial>(table.config.regime);
  for (const auto& cell : table.cells)
    if (!std::isfinite(cell.estimate) || cell.estimate < 0.0 || (bounded && cell.radius > 1.0 && cell.estimate != 0.0))
      return false;
  return true;
}

inline void write_tail_csv(std::ostream& out, const TailTable& table) {
  const auto regime = regime_name(table.config.regime);
  out << "regime,p,n,m,R,estimate,stderr,tail_count\n";
  out.precision(17);
  for (const auto& c : table.cells)
    out << regime << ',' << table.config.p << ',' << c.n << ',' << table.config.m << ',' << c.radius << ','
        << c.estimate << ',' << c.stderr_estimate << ',' << c.tail_count << '\n';
}

inline nlohmann::json to_json(const TailTable& table) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : table.cells)
    cells.push_back({{"n", c.n}, {"R", c.radius}, {"estimate", c.estimate}, {"stderr", c.stderr_estimate},
                     {"tail_count", c.tail_count}});
  return {{"config",
           {{"regime", to_json(table.config.regime)}, {"p", table.config.p}, {"n", table.config.ns},
            {"R", table.config.radii}, {"m", table.config.m}, {"d", table.config.d},
            {"seed", table.config.seed.value}}},
          {"cells", cells},
          {"consistent", tail_table_consistent(table)}};
}

}  // namespace flightwp
