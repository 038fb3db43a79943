#pragma once

// Sample paths of the three limit laws Y, as polylines.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "flightwp/flight_builder.hpp"
#include "flightwp/path_space.hpp"
#include "flightwp/random.hpp"
#include "flightwp/stochastic_core.hpp"

namespace flightwp {

struct LimitSamplerConfig {
  Regime regime = Polynomial{};
  std::size_t grid = 512;   // M, polynomial case
  double tol = 1e-8;        // truncation, exponential case
  std::size_t dimension = 1;
  std::optional<Eigen::MatrixXd> covariance;  // of ε_1; defaults to I/d
};

/// Σ^{1/2} for a covariance of a unit random vector: symmetric, PSD, trace 1.
inline Eigen::MatrixXd covariance_sqrt(const Eigen::MatrixXd& sigma) {
  if (sigma.rows() != sigma.cols() || sigma.rows() == 0)
    throw std::invalid_argument("covariance must be a nonempty square matrix");
  if (!sigma.isApprox(sigma.transpose(), 1e-12))
    throw std::invalid_argument("covariance must be symmetric");
  if (std::abs(sigma.trace() - 1.0) > 1e-9)
    throw std::invalid_argument("covariance of a unit vector must have trace 1");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
  const Eigen::VectorXd lambda = eig.eigenvalues();
  if (lambda.minCoeff() < -1e-12)
    throw std::invalid_argument("covariance must be positive semidefinite");
  const Eigen::VectorXd root = lambda.cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

/// Y(t) = sqrt(2α) ∫_0^t s^{(α-1)/(2α)} dw(s) on the grid {k/M}. Increments
/// are independent Gaussians with the exact covariance
/// Σ · 2α²/(2α-1) · (t^{(2α-1)/α} - s^{(2α-1)/α}).
inline Polyline sample_limit_polynomial(double alpha, std::size_t grid, std::size_t d,
                                        const Eigen::MatrixXd& sigma, RandomSeed seed) {
  if (!(alpha > 0.5)) throw std::invalid_argument("polynomial limit requires alpha > 1/2");
  if (grid < 2) throw std::invalid_argument("polynomial limit grid needs M >= 2");
  if (static_cast<std::size_t>(sigma.rows()) != d)
    throw std::invalid_argument("covariance dimension does not match d");
  const Eigen::MatrixXd root = covariance_sqrt(sigma);
  const double scale = 2.0 * alpha * alpha / (2.0 * alpha - 1.0);
  const double exponent = (2.0 * alpha - 1.0) / alpha;

  Rng rng(seed);
  std::vector<double> knots(grid + 1);
  std::vector<double> values((grid + 1) * d, 0.0);
  Eigen::VectorXd z(static_cast<Eigen::Index>(d));
  double previous_clock = 0.0;
  for (std::size_t k = 1; k <= grid; ++k) {
    const double t = k == grid ? 1.0 : static_cast<double>(k) / static_cast<double>(grid);
    knots[k] = t;
    const double clock = std::pow(t, exponent);
    const double sd = std::sqrt(scale * (clock - previous_clock));
    previous_clock = clock;
    for (auto& x : z) x = rng.normal();
    const Eigen::VectorXd step = sd * (root * z);
    for (std::size_t j = 0; j < d; ++j)
      values[k * d + j] = values[(k - 1) * d + j] + step(static_cast<Eigen::Index>(j));
  }
  return Polyline(d, std::move(knots), std::move(values));
}

inline Polyline sample_limit_polynomial(double alpha, std::size_t grid, std::size_t d,
                                        RandomSeed seed) {
  return sample_limit_polynomial(alpha, grid, d,
                                 Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d),
                                                           static_cast<Eigen::Index>(d)) /
                                     static_cast<double>(d),
                                 seed);
}

/// Piecewise-linear series with vertices t_k = e^{-βΓ_{k-1}} and values
/// Σ_{i>=k} ε_i (e^{-βΓ_{i-1}} - e^{-βΓ_i}). Arrivals are drawn until
/// e^{-βΓ_K} < tol; the discarded tail has total weight e^{-βΓ_K}, so the
/// returned path is within tol of the untruncated one in sup norm. Arrivals
/// and directions come from streams, so the same seed with a smaller tol
/// extends the same realization.
inline Polyline sample_limit_exponential(double beta, double tol, std::size_t d,
                                         RandomSeed seed) {
  if (!(beta > 0.0)) throw std::invalid_argument("exponential limit requires beta > 0");
  if (!(tol > 0.0 && tol < 1.0)) throw std::invalid_argument("truncation tol must be in (0, 1)");
  ArrivalStream arrivals(detail::arrival_seed(seed));
  DirectionStream directions(d, detail::direction_seed(seed));

  std::vector<double> vertex{1.0};  // t_1, t_2, ...
  std::vector<double> eps;
  std::vector<double> weights;
  std::vector<double> e(d);
  while (vertex.back() >= tol) {
    const double next = std::exp(-beta * arrivals.next().second);
    directions.next(e);
    eps.insert(eps.end(), e.begin(), e.end());
    weights.push_back(vertex.back() - next);
    vertex.push_back(next);
  }
  const std::size_t count = weights.size();  // K; vertex holds t_1..t_{K+1}

  // Ascending: 0, t_{K+1}, t_K, ..., t_1 = 1. Values are suffix sums.
  std::vector<double> knots(count + 2, 0.0);
  std::vector<double> values((count + 2) * d, 0.0);
  std::vector<double> running(d, 0.0);
  knots[1] = vertex[count];
  for (std::size_t pos = 2; pos <= count + 1; ++pos) {
    const std::size_t i = count + 1 - pos;  // 0-based term index, K-1 down to 0
    for (std::size_t j = 0; j < d; ++j) running[j] += weights[i] * eps[i * d + j];
    knots[pos] = vertex[i];
    std::copy(running.begin(), running.end(), values.begin() + static_cast<std::ptrdiff_t>(pos * d));
  }
  knots.back() = 1.0;
  return Polyline(d, std::move(knots), std::move(values));
}

/// Y(t) = ε_1 t.
inline Polyline sample_limit_superexp(std::size_t d, RandomSeed seed) {
  DirectionStream directions(d, detail::direction_seed(seed));
  std::vector<double> values(2 * d, 0.0);
  directions.next(std::span<double>(values).subspan(d, d));
  return Polyline(d, {0.0, 1.0}, std::move(values));
}

inline Polyline sample_limit(const LimitSamplerConfig& config, RandomSeed seed) {
  const std::size_t d = config.dimension;
  return std::visit(
      [&](const auto& r) {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, Polynomial>) {
          if (config.covariance)
            return sample_limit_polynomial(r.alpha, config.grid, d, *config.covariance, seed);
          return sample_limit_polynomial(r.alpha, config.grid, d, seed);
        } else if constexpr (std::is_same_v<R, Exponential>) {
          return sample_limit_exponential(r.beta, config.tol, d, seed);
        } else {
          return sample_limit_superexp(d, seed);
        }
      },
      config.regime);
}

}  // namespace flightwp
