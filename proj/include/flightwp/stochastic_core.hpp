#pragma once

// Poisson arrival paths, directions on the unit sphere, and exact moments of
// the Gamma(k, 1) law.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "flightwp/random.hpp"

namespace flightwp {

/// One realization of the unit-rate Poisson arrivals Γ_1 < ... < Γ_n together
/// with the spacings γ_k = Γ_k - Γ_{k-1}. Index 0 of `arrival()` is the
/// convention Γ_0 = 0; the vectors themselves are 0-based over k = 1..n.
struct GammaPath {
  std::vector<double> spacings;
  std::vector<double> arrivals;

  std::size_t size() const noexcept { return arrivals.size(); }
  bool empty() const noexcept { return arrivals.empty(); }

  /// Γ_k for k in 0..n.
  double arrival(std::size_t k) const { return k == 0 ? 0.0 : arrivals[k - 1]; }
  /// γ_k for k in 1..n.
  double spacing(std::size_t k) const { return spacings[k - 1]; }
};

/// Lazily extends a Poisson arrival sequence one point at a time. Used where
/// the number of arrivals is not known up front; a prefix of the stream is
/// identical to `sample_gamma_path` with the same seed.
class ArrivalStream {
 public:
  explicit ArrivalStream(RandomSeed seed) : rng_(seed) {}

  /// Draws the next spacing and returns {γ_k, Γ_k}. The stored spacing is
  /// recomputed from the rounded arrivals, so Γ_k - Γ_{k-1} == γ_k holds
  /// bit-for-bit; draws that would not advance Γ in floating point are
  /// redrawn.
  std::pair<double, double> next() {
    double candidate = current_;
    while (candidate <= current_) candidate = current_ + rng_.exponential();
    const double spacing = candidate - current_;
    current_ = candidate;
    return {spacing, current_};
  }

  double current() const noexcept { return current_; }

 private:
  Rng rng_;
  double current_ = 0.0;
};

inline GammaPath sample_gamma_path(std::size_t n, RandomSeed seed) {
  GammaPath path;
  path.spacings.reserve(n);
  path.arrivals.reserve(n);
  ArrivalStream stream(seed);
  for (std::size_t k = 0; k < n; ++k) {
    const auto [spacing, arrival] = stream.next();
    path.spacings.push_back(spacing);
    path.arrivals.push_back(arrival);
  }
  return path;
}

/// A law on the unit sphere S^{d-1}. `symmetric` declares that ε and -ε have
/// the same law (hence Eε = 0 and odd coordinate moments vanish); only
/// symmetric laws are accepted by the samplers.
struct DirectionLaw {
  std::string name;
  bool symmetric = false;
  std::function<void(Rng&, std::span<double>)> draw;
};

/// Uniform law on S^{d-1}: normalized vector of independent standard
/// normals. For d = 1 this is the sign of a normal, i.e. Rademacher.
inline DirectionLaw uniform_sphere() {
  return {"uniform-sphere", true, [](Rng& rng, std::span<double> out) {
            double norm_sq = 0.0;
            do {
              norm_sq = 0.0;
              for (double& x : out) {
                x = rng.normal();
                norm_sq += x * x;
              }
            } while (norm_sq == 0.0);
            // Division (not multiplication by the reciprocal) keeps d = 1
            // draws at exactly ±1.
            const double norm = std::sqrt(norm_sq);
            for (double& x : out) x /= norm;
          }};
}

/// ±e_j with j uniform over the axes and an independent fair sign. Centered
/// and with covariance I/d, but not rotation invariant.
inline DirectionLaw signed_axes() {
  return {"signed-axes", true, [](Rng& rng, std::span<double> out) {
            for (double& x : out) x = 0.0;
            const auto axis = static_cast<std::size_t>(rng() % out.size());
            out[axis] = (rng() & 1U) ? 1.0 : -1.0;
          }};
}

/// i.i.d. unit vectors ε_1..ε_n in R^d, stored row-major.
struct DirectionSequence {
  std::size_t dimension = 1;
  std::vector<double> components;
  std::string law = "uniform-sphere";

  std::size_t size() const noexcept {
    return dimension == 0 ? 0 : components.size() / dimension;
  }
  /// ε_i for i in 1..n.
  std::span<const double> vector(std::size_t i) const {
    return {components.data() + (i - 1) * dimension, dimension};
  }
  /// ⟨ε_i, e_j⟩ for i in 1..n, j in 1..d.
  double projection(std::size_t i, std::size_t j) const {
    return components[(i - 1) * dimension + (j - 1)];
  }
};

/// Streams directions one at a time (prefix-compatible with
/// `sample_directions`).
class DirectionStream {
 public:
  DirectionStream(std::size_t d, RandomSeed seed, DirectionLaw law = uniform_sphere())
      : rng_(seed), law_(std::move(law)), dimension_(d) {
    if (d == 0) throw std::invalid_argument("direction dimension must be >= 1");
    if (!law_.symmetric)
      throw std::invalid_argument("direction law '" + law_.name +
                                  "' does not declare symmetry (E eps = 0 required)");
  }

  void next(std::span<double> out) { law_.draw(rng_, out); }

  std::size_t dimension() const noexcept { return dimension_; }
  const DirectionLaw& law() const noexcept { return law_; }

 private:
  Rng rng_;
  DirectionLaw law_;
  std::size_t dimension_;
};

inline DirectionSequence sample_directions(std::size_t n, std::size_t d, RandomSeed seed,
                                           DirectionLaw law = uniform_sphere()) {
  DirectionStream stream(d, seed, std::move(law));
  DirectionSequence out;
  out.dimension = d;
  out.law = stream.law().name;
  out.components.resize(n * d);
  for (std::size_t i = 0; i < n; ++i)
    stream.next(std::span<double>(out.components).subspan(i * d, d));
  return out;
}

/// Empirical spot check of a declared-symmetric law: every coordinate mean
/// over `draws` samples lies within 4 standard errors of zero.
inline bool spot_check_centered(const DirectionLaw& law, std::size_t d, std::size_t draws,
                                RandomSeed seed) {
  const auto dirs = sample_directions(draws, d, seed, law);
  for (std::size_t j = 1; j <= d; ++j) {
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t i = 1; i <= draws; ++i) {
      const double x = dirs.projection(i, j);
      sum += x;
      sum_sq += x * x;
    }
    const double n = static_cast<double>(draws);
    const double mean = sum / n;
    const double se = std::sqrt(std::max(sum_sq / n - mean * mean, 0.0) / n);
    if (std::abs(mean) > 4.0 * se + 1e-15) return false;
  }
  return true;
}

namespace detail {

inline bool is_small_integer(double x) {
  return std::abs(x) <= 64.0 && x == std::round(x);
}

// Stirling tail of log Γ(x) beyond (x - 1/2) log x - x + log √(2π).
inline double stirling_tail(double x) {
  static constexpr double c[] = {1.0 / 12.0,   -1.0 / 360.0,         1.0 / 1260.0, -1.0 / 1680.0,
                                 1.0 / 1188.0, -691.0 / 360360.0, 1.0 / 156.0};
  const double inv2 = 1.0 / (x * x);
  double sum = 0.0;
  for (int i = 6; i >= 0; --i) sum = sum * inv2 + c[i];
  return sum / x;
}

// log Γ(k+β) - log Γ(k) without the cancellation of an lgamma difference:
// shift both arguments above 16, then take the Stirling difference.
inline double log_gamma_ratio(double k, double beta) {
  double shift = 0.0;
  while (std::min(k, k + beta) < 16.0) {
    shift += std::log1p(beta / k);
    k += 1.0;
  }
  return (k + beta - 0.5) * std::log1p(beta / k) + beta * std::log(k) - beta + stirling_tail(k + beta) -
         stirling_tail(k) - shift;
}

}  // namespace detail

/// Γ(k+β)/Γ(k) for real k > 0, k + β > 0. Integer β uses the exact
/// rising/falling factorial product; otherwise the log-gamma difference, which
/// stays finite far beyond the range where Γ itself overflows.
inline double gamma_ratio(double k, double beta) {
  if (!(k > 0.0) || !(k + beta > 0.0))
    throw std::invalid_argument("gamma_ratio requires k > 0 and k + beta > 0");
  if (detail::is_small_integer(beta)) {
    const auto steps = static_cast<long>(std::abs(beta));
    double product = 1.0;
    if (beta >= 0.0) {
      for (long s = 0; s < steps; ++s) product *= k + static_cast<double>(s);
      return product;
    }
    for (long s = 1; s <= steps; ++s) product *= k - static_cast<double>(s);
    return 1.0 / product;
  }
  return std::exp(detail::log_gamma_ratio(k, beta));
}

/// E Γ_k^β for Γ_k ~ Gamma(k, 1), which equals Γ(k+β)/Γ(k).
inline double exact_gamma_moment(std::size_t k, double beta) {
  if (k == 0) throw std::invalid_argument("exact_gamma_moment requires k >= 1");
  const double kd = static_cast<double>(k);
  if (!(kd + beta > 0.0))
    throw std::invalid_argument("exact_gamma_moment: k + beta <= 0, moment diverges");
  return gamma_ratio(kd, beta);
}

}  // namespace flightwp
