#include <cmath>

#include <gtest/gtest.h>

#include "flightwp/flight_builder.hpp"
#include "flightwp/stats.hpp"

using namespace flightwp;

TEST(PolynomialFlight, SingleStep) {
  const double alpha = 1.7;
  const auto r = build_polynomial_flight(alpha, 1, 2, RandomSeed{3});
  ASSERT_EQ(r.path.size(), 2u);
  EXPECT_EQ(r.path.breakpoint(1), 1.0);
  const double len = std::pow(r.gamma.arrival(1), alpha);  // n^{1/2-α} = 1
  for (std::size_t j = 1; j <= 2; ++j)
    EXPECT_NEAR(r.path.value(1)[j - 1], r.directions.projection(1, j) * len, 1e-14);
}

TEST(PolynomialFlight, KnotsFollowArrivals) {
  const double alpha = 0.8;
  const std::size_t n = 300;
  const auto r = build_polynomial_flight(alpha, n, 1, RandomSeed{12});
  ASSERT_EQ(r.path.size(), n + 1);
  for (std::size_t k = 0; k <= n; ++k)
    EXPECT_DOUBLE_EQ(r.path.breakpoint(k), std::pow(r.gamma.arrival(k) / r.gamma.arrival(n), alpha));
  // Endpoint against a naive recomputation.
  double naive = 0.0;
  for (std::size_t i = 1; i <= n; ++i)
    naive += r.directions.projection(i, 1) *
             (std::pow(r.gamma.arrival(i), alpha) - std::pow(r.gamma.arrival(i - 1), alpha));
  naive *= std::pow(static_cast<double>(n), 0.5 - alpha);
  EXPECT_NEAR(r.path.value(n)[0], naive, 1e-10);
}

TEST(PolynomialFlight, RejectsSmallAlpha) {
  try {
    build_polynomial_flight(0.4, 10, 1, RandomSeed{1});
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("alpha > 1/2"), std::string::npos);
  }
  EXPECT_THROW(build_polynomial_flight(1.0, 0, 1, RandomSeed{1}), std::invalid_argument);
}

// Var X_n(1) → 2α²/(2α-1) = 2 at α = 1, d = 1.
TEST(PolynomialFlight, EndpointVarianceMatchesLimit) {
  RunningStats s;
  for (int rep = 0; rep < 2000; ++rep)
    s.add(build_polynomial_flight(1.0, 2000, 1, derive_seed(RandomSeed{77}, rep)).path.value(2000)[0]);
  EXPECT_NEAR(s.variance(), 2.0, 0.2);
}

TEST(ExponentialFlight, KnotsInUnitIntervalAndUnitBall) {
  for (double beta : {0.5, 2.0, 8.0}) {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      for (auto form : {ExponentialForm::direct, ExponentialForm::reversed}) {
        const auto r = build_exponential_flight(beta, 100, 3, RandomSeed{seed}, form);
        EXPECT_EQ(r.path.breakpoint(r.path.size() - 1), 1.0);
        for (std::size_t k = 1; k < r.path.size(); ++k) {
          ASSERT_GT(r.path.breakpoint(k), 0.0);
          ASSERT_LE(r.path.breakpoint(k), 1.0);
        }
        ASSERT_LE(sup_norm(r.path), 1.0 + 1e-12);
      }
    }
  }
}

TEST(ExponentialFlight, DirectFormAgainstNaiveFormula) {
  const double beta = 0.3;
  const std::size_t n = 20;
  const auto r = build_exponential_flight(beta, n, 1, RandomSeed{31});
  const double top = std::exp(beta * r.gamma.arrival(n));
  double value = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    value += r.directions.projection(k, 1) *
             (std::exp(beta * r.gamma.arrival(k)) - std::exp(beta * r.gamma.arrival(k - 1))) / top;
    EXPECT_NEAR(r.path.eval(std::exp(beta * r.gamma.arrival(k)) / top)[0], value, 1e-12);
  }
}

// The reversed form uses the same ε and γ in reverse roles; its endpoint
// weights sum to 1 (τ_1 = 1) while the direct form's sum to 1 - e^{-βΓ_n}.
TEST(ExponentialFlight, ReversedFormTotalWeight) {
  const auto rev = build_exponential_flight(1.0, 5, 1, RandomSeed{4}, ExponentialForm::reversed);
  double total = 0.0;
  for (std::size_t i = 1; i <= 5; ++i) {
    const double tau = i == 1 ? 1.0 : std::exp(-rev.gamma.arrival(i - 1));
    const double next = i == 5 ? 0.0 : std::exp(-rev.gamma.arrival(i));
    total += rev.directions.projection(i, 1) * (tau - next);
  }
  EXPECT_NEAR(rev.path.value(rev.path.size() - 1)[0], total, 1e-14);
}

TEST(SuperExpFlight, SingleStep) {
  const auto r = build_superexp_flight(exp_square(), 1, 1, RandomSeed{2});
  const double g = r.gamma.arrival(1);
  EXPECT_NEAR(r.path.value(1)[0], r.directions.projection(1, 1) * (1.0 - std::exp(-g * g)), 1e-15);
}

TEST(SuperExpFlight, UnitBall) {
  for (std::uint64_t seed = 0; seed < 300; ++seed)
    ASSERT_LE(sup_norm(build_superexp_flight(exp_square(), 200, 2, RandomSeed{seed}).path), 1.0 + 1e-12);
}

// The knot before the last, f(Γ_{n-1})/f(Γ_n), vanishes in probability.
TEST(SuperExpFlight, PenultimateKnotVanishes) {
  std::vector<double> knots;
  for (int rep = 0; rep < 200; ++rep) {
    const auto r = build_superexp_flight(exp_square(), 100, 1, derive_seed(RandomSeed{8}, rep));
    const double a = r.gamma.arrival(99);
    const double b = r.gamma.arrival(100);
    knots.push_back(std::exp(a * a - b * b));
  }
  EXPECT_LT(quantile(knots, 0.5), 0.01);
}

TEST(Regimes, ValidationMessagesAndJson) {
  EXPECT_THROW(validate(Exponential{0.0}), std::invalid_argument);
  SuperExpFunction flat{"flat", [](double t) { return t; }, [](double) { return 1.0; }};
  EXPECT_THROW(validate(SuperExponential{flat}), std::invalid_argument);
  SuperExpFunction wrong{"wrong", [](double t) { return t * t; }, [](double t) { return t; }};
  EXPECT_THROW(validate(SuperExponential{wrong}), std::invalid_argument);
  EXPECT_NO_THROW(validate(SuperExponential{exp_cube()}));
  EXPECT_THROW(superexp_preset("exp-exp"), std::invalid_argument);

  for (const Regime& r : {Regime{Polynomial{0.9}}, Regime{Exponential{2.5}}, Regime{SuperExponential{exp_cube()}}}) {
    const auto back = regime_from_json(to_json(r));
    EXPECT_EQ(to_json(back), to_json(r));
  }
}

TEST(Regimes, BuildFlightIsDeterministic) {
  for (const Regime& r : {Regime{Polynomial{1.3}}, Regime{Exponential{1.0}}, Regime{SuperExponential{}}}) {
    const auto a = build_flight(r, 50, 2, RandomSeed{5});
    const auto b = build_flight(r, 50, 2, RandomSeed{5});
    EXPECT_EQ(sup_distance(a.path, b.path), 0.0);
  }
}

TEST(Directions, AlternativeLawPlugsIn) {
  const auto r = build_polynomial_flight(1.0, 10, 3, RandomSeed{5}, signed_axes());
  EXPECT_EQ(r.directions.law, "signed-axes");
}
