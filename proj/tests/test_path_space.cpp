#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "flightwp/path_space.hpp"
#include "flightwp/random.hpp"

using namespace flightwp;

namespace {

Polyline random_polyline(std::size_t knots, std::size_t d, Rng& rng) {
  std::vector<double> t{0.0};
  for (std::size_t k = 1; k + 1 < knots; ++k) t.push_back(rng.uniform_open());
  t.push_back(1.0);
  std::sort(t.begin(), t.end());
  std::vector<double> v(knots * d);
  for (double& x : v) x = rng.normal();
  return Polyline(d, t, v);
}

double grid_sup_distance(const Polyline& a, const Polyline& b, std::size_t points) {
  double best = 0.0;
  for (std::size_t i = 0; i <= points; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(points);
    const auto x = a.eval(t);
    const auto y = b.eval(t);
    double sq = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) sq += (x[j] - y[j]) * (x[j] - y[j]);
    best = std::max(best, std::sqrt(sq));
  }
  return best;
}

}  // namespace

TEST(Polyline, EvaluatesKnotsAndInterpolates) {
  const Polyline line(1, {0.0, 1.0}, {0.0, 1.0});
  EXPECT_EQ(line.eval(0.5)[0], 0.5);
  const Polyline bent(1, {0.0, 0.25, 1.0}, {0.0, 1.0, 1.0});
  EXPECT_DOUBLE_EQ(bent.eval(0.125)[0], 0.5);
  EXPECT_EQ(bent.eval(0.25)[0], 1.0);
  EXPECT_EQ(bent.eval(1.0)[0], 1.0);
  EXPECT_EQ(bent.eval(0.0)[0], 0.0);
}

TEST(Polyline, EvalAtEveryBreakpointReturnsStoredValue) {
  Rng rng(RandomSeed{4});
  const auto p = random_polyline(30, 3, rng);
  for (std::size_t k = 0; k < p.size(); ++k) {
    const auto v = p.eval(p.breakpoint(k));
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(v[j], p.value(k)[j]);
  }
}

TEST(Polyline, RejectsMalformedInput) {
  EXPECT_THROW(Polyline(1, {0.1, 1.0}, {0, 0}), std::invalid_argument);
  EXPECT_THROW(Polyline(1, {0.0, 0.9}, {0, 0}), std::invalid_argument);
  EXPECT_THROW(Polyline(1, {0.0, 0.6, 0.4, 1.0}, {0, 0, 0, 0}), std::invalid_argument);
  EXPECT_THROW(Polyline(1, {0.0, 1.0}, {0, NAN}), std::invalid_argument);
  EXPECT_THROW(Polyline(2, {0.0, 1.0}, {0, 0, 0}), std::invalid_argument);
  EXPECT_THROW(Polyline(0, {0.0, 1.0}, {}), std::invalid_argument);
  const Polyline ok(1, {0.0, 1.0}, {0.0, 1.0});
  EXPECT_THROW(ok.eval(1.5), std::invalid_argument);
  EXPECT_THROW(ok.eval(-0.1), std::invalid_argument);
}

TEST(Polyline, MergesTiedBreakpointsKeepingLaterValue) {
  const Polyline p(1, {0.0, 0.0, 0.5, 0.5, 1.0}, {0.0, 2.0, 3.0, 4.0, 5.0});
  ASSERT_EQ(p.size(), 3u);
  EXPECT_EQ(p.value(0)[0], 2.0);
  EXPECT_EQ(p.value(1)[0], 4.0);
}

TEST(SupDistance, TrivialCases) {
  const Polyline ramp(1, {0.0, 1.0}, {0.0, 1.0});
  EXPECT_EQ(sup_distance(ramp, ramp), 0.0);
  EXPECT_EQ(sup_distance(ramp, Polyline::zero(1)), 1.0);
  EXPECT_EQ(sup_norm(Polyline::zero(2)), 0.0);
  const double s = std::sqrt(0.5);
  const Polyline diag(2, {0.0, 1.0}, {0.0, 0.0, s, s});
  EXPECT_NEAR(sup_norm(diag), 1.0, 1e-15);
}

TEST(SupDistance, SymmetricAndMatchesNorm) {
  Rng rng(RandomSeed{21});
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = random_polyline(12, 2, rng);
    const auto b = random_polyline(7, 2, rng);
    EXPECT_EQ(sup_distance(a, b), sup_distance(b, a));
    EXPECT_EQ(sup_norm(a), sup_distance(a, Polyline::zero(2)));
  }
}

// Dense grid of 10^5 points plus both knot sets; the difference of two
// polylines peaks at a knot of one of them, so the oracle is exact.
TEST(SupDistance, AgreesWithDenseGridOracle) {
  Rng rng(RandomSeed{99});
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_polyline(10, 1, rng);
    const auto b = random_polyline(10, 1, rng);
    const double exact = sup_distance(a, b);
    double oracle = grid_sup_distance(a, b, 100000);
    for (double t : a.breakpoints()) oracle = std::max(oracle, std::abs(a.eval(t)[0] - b.eval(t)[0]));
    for (double t : b.breakpoints()) oracle = std::max(oracle, std::abs(a.eval(t)[0] - b.eval(t)[0]));
    EXPECT_NEAR(exact, oracle, 1e-9);
  }
}

TEST(SupDistance, TriangleInequality) {
  Rng rng(RandomSeed{5});
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = random_polyline(8, 3, rng);
    const auto b = random_polyline(5, 3, rng);
    const auto c = random_polyline(11, 3, rng);
    EXPECT_LE(sup_distance(a, c), sup_distance(a, b) + sup_distance(b, c) + 1e-12);
  }
}

TEST(Serialization, JsonRoundTrip) {
  Rng rng(RandomSeed{6});
  const auto p = random_polyline(9, 2, rng);
  const auto q = polyline_from_json(to_json(p));
  ASSERT_EQ(q.size(), p.size());
  EXPECT_EQ(sup_distance(p, q), 0.0);
}

TEST(Serialization, CsvLayout) {
  PathSample sample;
  sample.paths.push_back(Polyline(2, {0.0, 1.0}, {0, 0, 1, 2}));
  std::ostringstream out;
  write_csv(out, sample);
  EXPECT_EQ(out.str(), "path_id,knot_index,t,v_1,v_2\n0,0,0,0,0\n0,1,1,1,2\n");
}

TEST(PathSample, RejectsMixedDimensions) {
  PathSample sample;
  EXPECT_THROW(sample.validate(), std::invalid_argument);
  sample.paths.push_back(Polyline::zero(1));
  sample.paths.push_back(Polyline::zero(2));
  EXPECT_THROW(sample.validate(), std::invalid_argument);
}
