#pragma once

// Rescaled random-flight polylines X_n for the polynomial, exponential and
// super-exponential switching regimes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "flightwp/path_space.hpp"
#include "flightwp/random.hpp"
#include "flightwp/stochastic_core.hpp"

namespace flightwp {

/// f(t) = t^α, α > 1/2.
struct Polynomial {
  double alpha = 1.0;
};

/// f(t) = e^{βt}, β > 0.
struct Exponential {
  double beta = 1.0;
};

/// A super-exponential switching function supplied through log f and its
/// derivative (log f)' = f'/f, which must be increasing without bound.
struct SuperExpFunction {
  std::string name;
  std::function<double(double)> log_f;
  std::function<double(double)> dlog_f;
};

/// f(t) = exp(t^2).
inline SuperExpFunction exp_square() {
  return {"exp-square", [](double t) { return t * t; }, [](double t) { return 2.0 * t; }};
}

/// f(t) = exp(t^3).
inline SuperExpFunction exp_cube() {
  return {"exp-cube", [](double t) { return t * t * t; }, [](double t) { return 3.0 * t * t; }};
}

inline SuperExpFunction superexp_preset(const std::string& name) {
  if (name == "exp-square") return exp_square();
  if (name == "exp-cube") return exp_cube();
  throw std::invalid_argument("unknown super-exponential preset '" + name +
                              "' (known: exp-square, exp-cube)");
}

struct SuperExponential {
  SuperExpFunction f = exp_square();
};

using Regime = std::variant<Polynomial, Exponential, SuperExponential>;

inline std::string regime_name(const Regime& regime) {
  return std::visit(
      [](const auto& r) -> std::string {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, Polynomial>) return "polynomial";
        else if constexpr (std::is_same_v<R, Exponential>) return "exponential";
        else return "superexponential";
      },
      regime);
}

inline void validate_superexp(const SuperExpFunction& f) {
  if (!f.log_f || !f.dlog_f)
    throw std::invalid_argument("super-exponential function needs log f and (log f)'");
  // (log f)' must agree with a central difference of log f and increase along
  // the sample grid.
  double previous = -std::numeric_limits<double>::infinity();
  for (double t = 0.5; t <= 64.0; t *= 2.0) {
    const double slope = f.dlog_f(t);
    const double h = 1e-5 * t;
    const double fd = (f.log_f(t + h) - f.log_f(t - h)) / (2.0 * h);
    if (!(std::abs(fd - slope) <= 1e-4 * std::max(1.0, std::abs(slope))))
      throw std::invalid_argument("super-exponential '" + f.name +
                                  "': (log f)' disagrees with log f");
    if (!(slope > previous) || !(slope > 0.0))
      throw std::invalid_argument("super-exponential '" + f.name +
                                  "' requires f'/f increasing to infinity");
    previous = slope;
  }
}

/// Throws std::invalid_argument naming the violated precondition.
inline void validate(const Regime& regime) {
  std::visit(
      [](const auto& r) {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, Polynomial>) {
          if (!(r.alpha > 0.5))
            throw std::invalid_argument("polynomial regime requires alpha > 1/2");
        } else if constexpr (std::is_same_v<R, Exponential>) {
          if (!(r.beta > 0.0))
            throw std::invalid_argument("exponential regime requires beta > 0");
        } else {
          validate_superexp(r.f);
        }
      },
      regime);
}

inline nlohmann::json to_json(const Regime& regime) {
  return std::visit(
      [](const auto& r) -> nlohmann::json {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, Polynomial>)
          return {{"variant", "polynomial"}, {"alpha", r.alpha}};
        else if constexpr (std::is_same_v<R, Exponential>)
          return {{"variant", "exponential"}, {"beta", r.beta}};
        else
          return {{"variant", "superexponential"}, {"logf", r.f.name}};
      },
      regime);
}

inline Regime regime_from_json(const nlohmann::json& j) {
  const auto variant = j.at("variant").get<std::string>();
  if (variant == "polynomial") return Polynomial{j.at("alpha").get<double>()};
  if (variant == "exponential") return Exponential{j.at("beta").get<double>()};
  if (variant == "superexponential")
    return SuperExponential{superexp_preset(j.value("logf", std::string("exp-square")))};
  throw std::invalid_argument("unknown regime variant '" + variant + "'");
}

/// One realization of X_n with the randomness that produced it.
struct FlightRealization {
  Polyline path;
  GammaPath gamma;
  DirectionSequence directions;
  Regime regime;
  std::size_t n = 0;
};

enum class ExponentialForm { direct, reversed };

namespace detail {

// The arrival stream and the direction stream of one realization are
// independent children of the realization seed.
inline RandomSeed arrival_seed(RandomSeed seed) { return derive_seed(seed, 0); }
inline RandomSeed direction_seed(RandomSeed seed) { return derive_seed(seed, 1); }

/// Accumulates Σ_{i<=k} weight_i ε_i into a flat value array with a leading
/// origin knot.
inline std::vector<double> cumulative_values(const std::vector<double>& weights,
                                             const DirectionSequence& dirs) {
  const std::size_t d = dirs.dimension;
  std::vector<double> values((weights.size() + 1) * d, 0.0);
  for (std::size_t i = 1; i <= weights.size(); ++i) {
    const auto eps = dirs.vector(i);
    for (std::size_t j = 0; j < d; ++j)
      values[i * d + j] = values[(i - 1) * d + j] + weights[i - 1] * eps[j];
  }
  return values;
}

inline void require_steps(std::size_t n) {
  if (n == 0) throw std::invalid_argument("flight requires n >= 1");
}

}  // namespace detail

/// X_n for f(t) = t^α: knots (Γ_k/Γ_n)^α and values
/// n^{1/2-α} Σ_{i<=k} ε_i (Γ_i^α - Γ_{i-1}^α).
inline FlightRealization build_polynomial_flight(double alpha, std::size_t n, std::size_t d,
                                                 RandomSeed seed,
                                                 DirectionLaw law = uniform_sphere()) {
  validate(Regime{Polynomial{alpha}});
  detail::require_steps(n);
  auto gamma = sample_gamma_path(n, detail::arrival_seed(seed));
  auto dirs = sample_directions(n, d, detail::direction_seed(seed), std::move(law));

  const double total = gamma.arrival(n);
  std::vector<double> knots(n + 1, 0.0);
  std::vector<double> weights(n);
  const double scale = std::pow(static_cast<double>(n), 0.5 - alpha);
  for (std::size_t k = 1; k <= n; ++k) {
    knots[k] = std::pow(gamma.arrival(k) / total, alpha);
    const double previous = gamma.arrival(k - 1);
    // Γ_{k-1}^α (exp(α log1p(γ_k/Γ_{k-1})) - 1) avoids cancellation for large k.
    const double increment =
        k == 1 ? std::pow(gamma.arrival(1), alpha)
               : std::pow(previous, alpha) *
                     std::expm1(alpha * std::log1p(gamma.spacing(k) / previous));
    weights[k - 1] = scale * increment;
  }
  knots[n] = 1.0;
  auto values = detail::cumulative_values(weights, dirs);
  Polyline path(d, std::move(knots), std::move(values));
  return {std::move(path), std::move(gamma), std::move(dirs), Polynomial{alpha}, n};
}

/// X_n for f(t) = e^{βt}. The direct form uses knots e^{-β(Γ_n-Γ_k)} and
/// increments e^{-β(Γ_n-Γ_i)} - e^{-β(Γ_n-Γ_{i-1})}; the reversed form is the
/// equal-in-law polyline with knots τ_k = e^{-β(γ_1+...+γ_{k-1})} and values
/// Σ_{i=k}^{n-1} ε_i(τ_i - τ_{i+1}) + ε_n τ_n. No e^{+βΓ} is ever formed.
inline FlightRealization build_exponential_flight(double beta, std::size_t n, std::size_t d,
                                                  RandomSeed seed,
                                                  ExponentialForm form = ExponentialForm::direct,
                                                  DirectionLaw law = uniform_sphere()) {
  validate(Regime{Exponential{beta}});
  detail::require_steps(n);
  auto gamma = sample_gamma_path(n, detail::arrival_seed(seed));
  auto dirs = sample_directions(n, d, detail::direction_seed(seed), std::move(law));
  const double total = gamma.arrival(n);

  if (form == ExponentialForm::direct) {
    std::vector<double> knots(n + 1, 0.0);
    std::vector<double> weights(n);
    double lower = std::exp(-beta * total);  // e^{-β(Γ_n - Γ_0)}
    for (std::size_t k = 1; k <= n; ++k) {
      knots[k] = k == n ? 1.0 : std::exp(-beta * (total - gamma.arrival(k)));
      weights[k - 1] = knots[k] - lower;
      lower = knots[k];
    }
    auto values = detail::cumulative_values(weights, dirs);
    Polyline path(d, std::move(knots), std::move(values));
    return {std::move(path), std::move(gamma), std::move(dirs), Exponential{beta}, n};
  }

  // τ_k for k = 1..n, decreasing from τ_1 = 1.
  std::vector<double> tau(n + 2, 0.0);
  for (std::size_t k = 1; k <= n; ++k) tau[k] = k == 1 ? 1.0 : std::exp(-beta * gamma.arrival(k - 1));
  // Suffix sums Y_n(τ_k), built from k = n down to 1.
  std::vector<double> suffix((n + 1) * d, 0.0);
  std::vector<double> running(d, 0.0);
  for (std::size_t k = n; k >= 1; --k) {
    const double weight = k == n ? tau[n] : tau[k] - tau[k + 1];
    const auto eps = dirs.vector(k);
    for (std::size_t j = 0; j < d; ++j) running[j] += weight * eps[j];
    std::copy(running.begin(), running.end(), suffix.begin() + static_cast<std::ptrdiff_t>(k * d));
  }
  // Ascending order: 0, τ_n, τ_{n-1}, ..., τ_1 = 1.
  std::vector<double> knots(n + 1, 0.0);
  std::vector<double> values((n + 1) * d, 0.0);
  for (std::size_t pos = 1; pos <= n; ++pos) {
    const std::size_t k = n + 1 - pos;
    knots[pos] = tau[k];
    std::copy_n(suffix.begin() + static_cast<std::ptrdiff_t>(k * d), d,
                values.begin() + static_cast<std::ptrdiff_t>(pos * d));
  }
  Polyline path(d, std::move(knots), std::move(values));
  return {std::move(path), std::move(gamma), std::move(dirs), Exponential{beta}, n};
}

/// X_n for a super-exponential f given through log f: knots f(Γ_k)/f(Γ_n) and
/// increments (f(Γ_i) - f(Γ_{i-1}))/f(Γ_n) with Γ_0 = 0, all evaluated as
/// exponentials of log-differences so f(Γ_n) is never formed.
inline FlightRealization build_superexp_flight(const SuperExpFunction& f, std::size_t n,
                                               std::size_t d, RandomSeed seed,
                                               DirectionLaw law = uniform_sphere()) {
  validate(Regime{SuperExponential{f}});
  detail::require_steps(n);
  auto gamma = sample_gamma_path(n, detail::arrival_seed(seed));
  auto dirs = sample_directions(n, d, detail::direction_seed(seed), std::move(law));

  std::vector<double> log_values(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    log_values[k] = f.log_f(gamma.arrival(k));
    if (!std::isfinite(log_values[k]))
      throw std::domain_error("log f is not finite on the realized arrivals");
    if (k > 0 && !(log_values[k] > log_values[k - 1]))
      throw std::invalid_argument("log f is not increasing over the realized arrivals");
  }
  const double top = log_values[n];
  std::vector<double> knots(n + 1, 0.0);
  std::vector<double> weights(n);
  double lower = std::exp(log_values[0] - top);
  for (std::size_t k = 1; k <= n; ++k) {
    knots[k] = k == n ? 1.0 : std::exp(log_values[k] - top);
    weights[k - 1] = knots[k] - lower;
    lower = knots[k];
  }
  auto values = detail::cumulative_values(weights, dirs);
  Polyline path(d, std::move(knots), std::move(values));
  return {std::move(path), std::move(gamma), std::move(dirs), SuperExponential{f}, n};
}

inline FlightRealization build_flight(const Regime& regime, std::size_t n, std::size_t d,
                                      RandomSeed seed) {
  return std::visit(
      [&](const auto& r) {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, Polynomial>)
          return build_polynomial_flight(r.alpha, n, d, seed);
        else if constexpr (std::is_same_v<R, Exponential>)
          return build_exponential_flight(r.beta, n, d, seed);
        else
          return build_superexp_flight(r.f, n, d, seed);
      },
      regime);
}

}  // namespace flightwp
