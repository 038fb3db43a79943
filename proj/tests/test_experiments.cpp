#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "flightwp/experiments.hpp"

using namespace flightwp;

TEST(Samples, SeedsPerPath) {
  const auto s = flight_sample(Polynomial{1.0}, 20, 5, 2, RandomSeed{9});
  ASSERT_EQ(s.size(), 5u);
  EXPECT_EQ(sup_distance(s.paths[3], build_flight(Polynomial{1.0}, 20, 2, derive_seed(RandomSeed{9}, 3)).path), 0.0);
  EXPECT_EQ(s.meta["regime"]["variant"], "polynomial");
  EXPECT_THROW(flight_sample(Polynomial{0.3}, 20, 5, 1, RandomSeed{1}), std::invalid_argument);
}

TEST(Convergence, SuperExponentialBoundedByTwo) {
  ConvergenceConfig c;
  c.regime = SuperExponential{};
  c.ns = {10, 40};
  c.m = 30;
  c.repeats = 2;
  c.d = 2;
  const auto table = run_convergence(c);
  ASSERT_EQ(table.rows.size(), 2u);
  for (const auto& rec : table.records) {
    EXPECT_LE(rec.w_p, 2.0);
    EXPECT_LE(rec.baseline, 2.0);
    EXPECT_GE(rec.w_p, 0.0);
  }
}

TEST(Convergence, SinglePathIsPairDistance) {
  ConvergenceConfig c;
  c.regime = Exponential{1.0};
  c.ns = {50};
  c.m = 1;
  c.repeats = 1;
  const auto table = run_convergence(c);
  const auto seed = cell_seed(c.seed, 0, 0);
  const auto x = flight_sample(c.regime, 50, 1, 1, derive_seed(seed, 0));
  const auto y = limit_sample(LimitSamplerConfig{c.regime, c.grid, c.tol, 1, std::nullopt}, 1, derive_seed(seed, 1));
  EXPECT_NEAR(table.records[0].w_p, sup_distance(x.paths[0], y.paths[0]), 1e-15);
}

TEST(Convergence, Reproducible) {
  ConvergenceConfig c;
  c.regime = Polynomial{1.5};
  c.ns = {10, 20};
  c.m = 20;
  c.repeats = 2;
  c.grid = 64;
  std::ostringstream a, b;
  write_convergence_csv(a, run_convergence(c));
  c.threads = 3;
  write_convergence_csv(b, run_convergence(c));
  // Runtime column differs; compare everything before it.
  auto strip = [](const std::string& s) {
    std::istringstream in(s);
    std::string line, out;
    while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
    return out;
  };
  EXPECT_EQ(strip(a.str()), strip(b.str()));
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')), "regime,p,n,m,repeat,w_p,baseline,runtime_ms");
}

TEST(Convergence, RejectsBadConfig) {
  ConvergenceConfig c;
  c.ns = {100, 50};
  EXPECT_THROW(run_convergence(c), std::invalid_argument);
  c.ns = {10};
  c.solver = Solver::brute_force;
  c.m = 9;
  EXPECT_THROW(run_convergence(c), std::invalid_argument);
}

TEST(Convergence, ExponentialTrend) {
  ConvergenceConfig c;
  c.regime = Exponential{1.0};
  c.ns = {25, 100, 400};
  c.m = 200;
  c.repeats = 5;
  const auto table = run_convergence(c);
  const auto trend = assess_convergence(table);
  // The flights already match the limit in law up to e^{-25}, so the rows only
  // differ by sampling noise; compare against the per-row error bars.
  EXPECT_TRUE(trend.within_error_bars && trend.final_near_baseline) << to_json(table).dump(1);
}

// Smoother samples sit closer to rough ones than rough ones to each other, so
// with 200 paths the polynomial W_1 column rises towards the floor instead of
// falling. The coarse-grid limit itself shows the same effect.
TEST(Convergence, EmpiricalFloorFavoursSmootherSamples) {
  LimitSamplerConfig fine{Polynomial{1.0}, 512, 1e-8, 1, std::nullopt};
  LimitSamplerConfig coarse = fine;
  coarse.grid = 25;
  RunningStats cross, self;
  for (std::uint64_t r = 0; r < 3; ++r) {
    const auto a = limit_sample(coarse, 200, RandomSeed{10 + r});
    const auto b = limit_sample(fine, 200, RandomSeed{20 + r});
    const auto c = limit_sample(fine, 200, RandomSeed{30 + r});
    cross.add(empirical_wasserstein(a, b, 1.0).value);
    self.add(empirical_wasserstein(c, b, 1.0).value);
  }
  EXPECT_LT(cross.mean(), self.mean());
}

TEST(Convergence, BaselineShrinksWithSampleSize) {
  LimitSamplerConfig limit{Exponential{1.0}, 512, 1e-8, 1, std::nullopt};
  double previous = 1e9;
  for (std::size_t m : {50u, 200u, 800u}) {
    const auto a = limit_sample(limit, m, RandomSeed{m});
    const auto b = limit_sample(limit, m, RandomSeed{m + 1});
    const double w = empirical_wasserstein(a, b, 1.0).value;
    EXPECT_LT(w, previous);
    previous = w;
  }
}

TEST(TailTable, BoundedRowsVanishAndMonotone) {
  TailConfig t;
  t.regime = Exponential{2.0};
  t.radii = {0.5, 1.25, 2.0};
  t.m = 200;
  auto table = run_tail_table(t);
  EXPECT_TRUE(tail_table_consistent(table));
  for (const auto& cell : table.cells)
    if (cell.radius > 1.0) EXPECT_EQ(cell.estimate, 0.0);

  t.regime = Polynomial{0.75};
  t.radii = {0.5, 1.0, 1.5, 2.0, 3.0};
  const auto p1 = run_tail_table(t);
  t.p = 2.0;
  const auto p2 = run_tail_table(t);
  for (std::size_t i = 0; i < p1.cells.size(); ++i) {
    if (i % 5 != 0) EXPECT_LE(p1.cells[i].estimate, p1.cells[i - 1].estimate);
    if (p1.cells[i].radius >= 1.0) EXPECT_GE(p2.cells[i].estimate, p1.cells[i].radius * p1.cells[i].estimate * (1 - 1e-15));
  }
  std::ostringstream out;
  write_tail_csv(out, p2);
  EXPECT_NE(out.str().find("regime,p,n,m,R,estimate"), std::string::npos);
}
