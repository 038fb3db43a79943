#pragma once

// Numerical certification of the expansions, moment asymptotics, maximal
// inequalities and tail bounds behind the Wasserstein convergence of random
// flights. Every check returns a CheckReport with the measured statistic,
// the bound it is held to, and the slack between them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "flightwp/flight_builder.hpp"
#include "flightwp/parallel.hpp"
#include "flightwp/path_space.hpp"
#include "flightwp/random.hpp"
#include "flightwp/stats.hpp"
#include "flightwp/stochastic_core.hpp"

namespace flightwp {

struct CheckReport {
  std::string name;
  nlohmann::json params = nlohmann::json::object();
  nlohmann::json stat = nlohmann::json::object();
  nlohmann::json bound = nlohmann::json::object();
  double slack = 0.0;
  bool verdict = false;
  std::size_t replicas = 0;
  std::vector<std::uint64_t> seeds;
  double runtime_ms = 0.0;
};

inline nlohmann::json to_json(const CheckReport& r) {
  return {{"name", r.name},       {"params", r.params},   {"stat", r.stat},
          {"bound", r.bound},     {"slack", r.slack},     {"verdict", r.verdict},
          {"replicas", r.replicas}, {"seeds", r.seeds},   {"runtime_ms", r.runtime_ms}};
}

inline constexpr RandomSeed default_check_seed{0x5EEDF11647ULL};

// ---------------------------------------------------------------------------
// Increments of Γ^α

/// Γ_i^α - Γ_{i-1}^α given Γ_{i-1} and γ_i, without cancellation.
inline double power_increment(double previous, double spacing, double alpha) {
  if (previous == 0.0) return std::pow(spacing, alpha);
  return std::pow(previous, alpha) * std::expm1(alpha * std::log1p(spacing / previous));
}

/// α γ_i Γ_{i-1}^{α-1}. At Γ_0 = 0 the power is taken as 0^0 = 1 and 0
/// otherwise (for α < 1 the singular term is dropped from every piece of the
/// decomposition alike, so the pieces still sum to the increment).
inline double linear_term(double previous, double spacing, double alpha) {
  if (previous == 0.0) return alpha == 1.0 ? spacing : 0.0;
  return alpha * spacing * std::pow(previous, alpha - 1.0);
}

/// ρ = Γ_i^α - Γ_{i-1}^α - α γ_i Γ_{i-1}^{α-1}.
inline double linearization_remainder(double previous, double spacing, double alpha) {
  if (alpha == 1.0) return 0.0;
  if (previous == 0.0) return power_increment(previous, spacing, alpha) - linear_term(previous, spacing, alpha);
  const double x = spacing / previous;
  return std::pow(previous, alpha) * (std::expm1(alpha * std::log1p(x)) - alpha * x);
}

/// Exact E|Γ_{k+1}^α - Γ_k^α|^2 = 2α² Γ(k+2α) / (Γ(k) k (k+α)). Uses
/// Γ_k = Γ_{k+1} B with B ~ Beta(k, 1) independent of Γ_{k+1}.
inline double exact_increment_second_moment(std::size_t k, double alpha) {
  const double kd = static_cast<double>(k);
  return gamma_ratio(kd, 2.0 * alpha) * 2.0 * alpha * alpha / (kd * (kd + alpha));
}

// ---------------------------------------------------------------------------
// Binomial expansion remainder

inline double binomial_coefficient(double alpha, std::size_t k) {
  double a = 1.0;
  for (std::size_t r = 0; r < k; ++r) a *= (alpha - static_cast<double>(r)) / static_cast<double>(r + 1);
  return a;
}

/// R(x, h) = (x+h)^α - x^α - Σ_{k<=m} a_k h^k x^{α-k}. Summed as the tail of
/// the binomial series when it converges quickly (h <= x/2) or terminates
/// (integer α >= 0), otherwise evaluated directly in extended precision.
inline double binomial_remainder(double x, double h, double alpha, std::size_t m) {
  const bool terminating = alpha >= 0.0 && alpha == std::round(alpha);
  if (terminating || h <= 0.5 * x) {
    long double sum = 0.0L;
    long double coefficient = binomial_coefficient(alpha, m + 1);
    const long double ratio = static_cast<long double>(h) / x;
    long double term_scale = std::pow(static_cast<long double>(x), static_cast<long double>(alpha)) *
                             std::pow(ratio, static_cast<long double>(m + 1));
    for (std::size_t k = m + 1; k < m + 4000; ++k) {
      const long double term = coefficient * term_scale;
      sum += term;
      if (coefficient == 0.0L) break;
      if (std::abs(term) <= 1e-21L * std::abs(sum)) break;
      coefficient *= (static_cast<long double>(alpha) - static_cast<long double>(k)) /
                     static_cast<long double>(k + 1);
      term_scale *= ratio;
    }
    return static_cast<double>(sum);
  }
  long double direct = std::pow(static_cast<long double>(x) + h, static_cast<long double>(alpha)) -
                       std::pow(static_cast<long double>(x), static_cast<long double>(alpha));
  for (std::size_t k = 1; k <= m; ++k)
    direct -= static_cast<long double>(binomial_coefficient(alpha, k)) *
              std::pow(static_cast<long double>(h), static_cast<long double>(k)) *
              std::pow(static_cast<long double>(x), static_cast<long double>(alpha) - k);
  return static_cast<double>(direct);
}

/// |a_{m+1}| h^{m+1} max{x^{α-(m+1)}, (x+h)^{α-(m+1)}}.
inline double binomial_remainder_bound(double x, double h, double alpha, std::size_t m) {
  const double e = alpha - static_cast<double>(m + 1);
  return std::abs(binomial_coefficient(alpha, m + 1)) * std::pow(h, static_cast<double>(m + 1)) *
         std::max(std::pow(x, e), std::pow(x + h, e));
}

inline CheckReport check_lemma1(double x, double h, double alpha, std::size_t m) {
  Stopwatch clock;
  if (!(x > 0.0) || !(h > 0.0) || !(alpha > 0.0) || m < 1)
    throw std::invalid_argument("lemma1 requires x > 0, h > 0, alpha > 0, m >= 1");
  const double remainder = binomial_remainder(x, h, alpha, m);
  const double bound = binomial_remainder_bound(x, h, alpha, m);
  if (!std::isfinite(remainder) || !std::isfinite(bound))
    throw std::domain_error("lemma1: expansion overflows for these arguments");
  CheckReport r;
  r.name = "lemma1";
  r.params = {{"x", x}, {"h", h}, {"alpha", alpha}, {"m", m}};
  r.stat = {{"remainder", remainder}};
  r.bound = {{"remainder_bound", bound}};
  r.slack = bound - std::abs(remainder);
  r.verdict = std::abs(remainder) <= bound * (1.0 + 1e-12);
  r.runtime_ms = clock.elapsed_ms();
  return r;
}

/// The remainder bound over a sweep of h at fixed x; also reports
/// |R|/h^{m+1}, which must stay below |a_{m+1}| max{x^{..}, (x+h)^{..}}.
inline CheckReport check_lemma1_sweep(double x, double alpha, std::size_t m,
                                      const std::vector<double>& steps = {0.5, 1e-1, 1e-2, 1e-3, 1e-4}) {
  Stopwatch clock;
  CheckReport r;
  r.name = "lemma1";
  r.params = {{"x", x}, {"alpha", alpha}, {"m", m}, {"h", steps}};
  std::vector<double> ratios;
  std::vector<double> caps;
  r.verdict = true;
  r.slack = std::numeric_limits<double>::infinity();
  for (double h : steps) {
    const auto point = check_lemma1(x, h, alpha, m);
    const double scale = std::pow(h, static_cast<double>(m + 1));
    ratios.push_back(std::abs(point.stat["remainder"].get<double>()) / scale);
    caps.push_back(point.bound["remainder_bound"].get<double>() / scale);
    r.verdict = r.verdict && point.verdict;
    r.slack = std::min(r.slack, point.slack);
  }
  r.stat = {{"normalized_remainder", ratios}};
  r.bound = {{"normalized_bound", caps}};
  r.runtime_ms = clock.elapsed_ms();
  return r;
}

// ---------------------------------------------------------------------------
// Deterministic asymptotics

inline std::vector<double> dyadic_grid(int first_power, int last_power) {
  std::vector<double> out;
  for (int e = first_power; e <= last_power; ++e) out.push_back(std::ldexp(1.0, e));
  return out;
}

/// k^order |(1+α/k)^k - e^α| over the grid; with order = 1 this must
/// stabilize (last two grid values within 5%), certifying the O(1/k) rate.
inline CheckReport check_lemma2(double alpha, std::vector<double> ks = dyadic_grid(1, 20),
                                double order = 1.0) {
  Stopwatch clock;
  if (!(alpha >= 0.0)) throw std::invalid_argument("lemma2 requires alpha >= 0");
  if (ks.size() < 2) throw std::invalid_argument("lemma2 needs at least two grid points");
  std::vector<double> normalized;
  for (double k : ks) {
    const double gap = std::exp(alpha) * std::abs(std::expm1(k * std::log1p(alpha / k) - alpha));
    normalized.push_back(std::pow(k, order) * gap);
  }
  const double last = normalized.back();
  const double before = normalized[normalized.size() - 2];
  const double change = last == 0.0 && before == 0.0 ? 0.0 : std::abs(last - before) / std::abs(last);
  constexpr double tolerance = 0.05;
  CheckReport r;
  r.name = "lemma2";
  r.params = {{"alpha", alpha}, {"k", ks}, {"order", order}};
  r.stat = {{"normalized_gap", normalized}, {"relative_change", change}};
  r.bound = {{"stabilization_tol", tolerance},
             {"asymptotic_constant", std::exp(alpha) * alpha * alpha / 2.0}};
  r.slack = tolerance - change;
  r.verdict = std::all_of(normalized.begin(), normalized.end(), [](double v) { return std::isfinite(v); }) &&
              change <= tolerance;
  r.runtime_ms = clock.elapsed_ms();
  return r;
}

namespace detail {

/// Shared core of the Γ(k+α)/Γ(k) and E Γ_k^β checks: normalized deviation
/// (ratio - k^α)/k^{α-order} compared, at the largest k, with the leading
/// constant α(α-1)/2 of the asymptotic expansion (20% tolerance).
inline CheckReport ratio_asymptotics(const std::string& name, double alpha,
                                     const std::vector<double>& ks, double order) {
  std::vector<double> normalized;
  for (double k : ks) {
    const double ratio = gamma_ratio(k, alpha);
    normalized.push_back((ratio - std::pow(k, alpha)) / std::pow(k, alpha - order));
  }
  const double constant = alpha * (alpha - 1.0) / 2.0;
  const double deviation = std::abs(normalized.back() - constant);
  const double allowed = 0.2 * std::abs(constant);
  CheckReport r;
  r.name = name;
  r.params = {{"alpha", alpha}, {"k", ks}, {"order", order}};
  r.stat = {{"normalized_deviation", normalized}};
  r.bound = {{"leading_constant", constant}, {"relative_tol", 0.2}};
  r.slack = allowed - deviation;
  r.verdict = std::all_of(normalized.begin(), normalized.end(), [](double v) { return std::isfinite(v); }) &&
              deviation <= allowed + 1e-12;
  return r;
}

}  // namespace detail

inline std::vector<double> decade_grid(int first_power, int last_power) {
  std::vector<double> out;
  for (int e = first_power; e <= last_power; ++e) out.push_back(std::pow(10.0, e));
  return out;
}

inline CheckReport check_lemma3(double alpha, std::vector<double> ks = decade_grid(1, 5),
                                double order = 1.0) {
  Stopwatch clock;
  if (!(alpha >= 0.0)) throw std::invalid_argument("lemma3 requires alpha >= 0");
  auto r = detail::ratio_asymptotics("lemma3", alpha, ks, order);
  r.runtime_ms = clock.elapsed_ms();
  return r;
}

struct Lemma4Params {
  double beta = 1.5;
  std::vector<double> ks = decade_grid(1, 4);
  std::size_t mc_k = 50;
  double mc_beta = -0.5;
  std::size_t mc_draws = 1'000'000;
  RandomSeed seed = default_check_seed;
  double order = 1.0;
  unsigned threads = 1;
};

/// E Γ_k^β = k^β + O(k^{β-1}) through the exact moment, plus a Monte Carlo
/// cross-check of the exact moment (Γ_k as a sum of k exponentials).
inline CheckReport check_lemma4(const Lemma4Params& p = {}) {
  Stopwatch clock;
  for (double k : p.ks)
    if (!(k + p.beta > 0.0)) throw std::invalid_argument("lemma4 requires k + beta > 0 on the grid");
  auto r = detail::ratio_asymptotics("lemma4", p.beta, p.ks, p.order);

  const double exact = exact_gamma_moment(p.mc_k, p.mc_beta);
  std::vector<double> draws(p.mc_draws);
  parallel_for(p.mc_draws, p.threads, [&](std::size_t i) {
    Rng rng(derive_seed(p.seed, i));
    double total = 0.0;
    for (std::size_t s = 0; s < p.mc_k; ++s) total += rng.exponential();
    draws[i] = std::pow(total, p.mc_beta);
  });
  RunningStats stats;
  for (double v : draws) stats.add(v);
  const double z = std::abs(stats.mean() - exact) / stats.stderr_mean();
  r.params["beta"] = p.beta;
  r.params["mc"] = {{"k", p.mc_k}, {"beta", p.mc_beta}, {"draws", p.mc_draws}};
  r.stat["mc_mean"] = stats.mean();
  r.stat["mc_stderr"] = stats.stderr_mean();
  r.stat["mc_z"] = z;
  r.bound["exact_moment"] = exact;
  r.bound["mc_z_max"] = 3.0;
  r.slack = std::min(r.slack, 3.0 - z);
  r.verdict = r.verdict && z <= 3.0;
  r.replicas = p.mc_draws;
  r.seeds = {p.seed.value};
  r.runtime_ms = clock.elapsed_ms();
  return r;
}

// ---------------------------------------------------------------------------
// Moments of Γ^α increments

struct Lemma5Params {
  double alpha = 0.8;
  std::vector<std::size_t> ks{50, 100, 200, 400};
  std::size_t replicas = 1'000'000;
  RandomSeed seed = default_check_seed;
  double order = 1.0;  // claimed remainder order of the second-moment expansion
  unsigned threads = 1;
};

/// Γ_{k+1}^α - Γ_k^α = α γ_{k+1} Γ_k^{α-1} + ρ_k with ρ_k = O(k^{α-2}) and
/// E|Γ_{k+1}^α - Γ_k^α|² = 2α²k^{2α-2} + O(k^{2α-3}). Checks: (a) the Monte
/// Carlo second moment agrees with the exact Beta-Gamma formula within 4
/// standard errors at every k; (b) the exact normalized deviation
/// (M_k - 2α²k^{2α-2})/k^{2α-2-order} approaches its leading constant
/// 4α³(α-1) within 20% at the largest k; (c) the 0.99 quantile of
/// |ρ_k|/k^{α-1-order} is stable (largest k within a factor 2 of smallest).
inline CheckReport check_lemma5(const Lemma5Params& p = {}) {
  Stopwatch clock;
  if (!(p.alpha >= 0.0)) throw std::invalid_argument("lemma5 requires alpha >= 0");
  if (p.ks.empty() || p.replicas < 2) throw std::invalid_argument("lemma5 needs a k grid and replicas");
  const double a = p.alpha;
  std::vector<double> mc_mean, mc_se, exact, mc_z, normalized, rho_q99;
  std::vector<double> increments(p.replicas);
  std::vector<double> remainders(p.replicas);
  for (std::size_t idx = 0; idx < p.ks.size(); ++idx) {
    const std::size_t k = p.ks[idx];
    const double kd = static_cast<double>(k);
    const RandomSeed seed_k = derive_seed(p.seed, k);
    parallel_for(p.replicas, p.threads, [&](std::size_t i) {
      Rng rng(derive_seed(seed_k, i));
      const double arrival = rng.gamma(kd);
      const double spacing = rng.exponential();
      const double inc = power_increment(arrival, spacing, a);
      increments[i] = inc * inc;
      remainders[i] = std::abs(linearization_remainder(arrival, spacing, a)) / std::pow(kd, a - 1.0 - p.order);
    });
    RunningStats stats;
    for (double v : increments) stats.add(v);
    const double m_exact = exact_increment_second_moment(k, a);
    mc_mean.push_back(stats.mean());
    mc_se.push_back(stats.stderr_mean());
    exact.push_back(m_exact);
    mc_z.push_back(stats.stderr_mean() > 0.0 ? std::abs(stats.mean() - m_exact) / stats.stderr_mean()
                                             : (stats.mean() == m_exact ? 0.0 : std::numeric_limits<double>::infinity()));
    normalized.push_back((m_exact - 2.0 * a * a * std::pow(kd, 2.0 * a - 2.0)) /
                         std::pow(kd, 2.0 * a - 2.0 - p.order));
    rho_q99.push_back(quantile(remainders, 0.99));
  }
  const double z_max = *std::max_element(mc_z.begin(), mc_z.end());
  const double constant = 4.0 * a * a * a * (a - 1.0);
  const double deviation = std::abs(normalized.back() - constant);
  const double allowed = 0.2 * std::abs(constant);
  const double q_first = rho_q99.front();
  const double q_last = rho_q99.back();
  const bool rho_zero = q_first == 0.0 && q_last <= 1e-12;
  const double q_ratio = rho_zero ? 1.0 : q_last / q_first;
  const bool rho_stable = rho_zero || (q_ratio >= 0.5 && q_ratio <= 2.0);

  CheckReport r;
  r.name = "lemma5";
  r.params = {{"alpha", a}, {"k", p.ks}, {"replicas", p.replicas}, {"order", p.order}};
  r.stat = {{"mc_second_moment", mc_mean},   {"mc_stderr", mc_se},        {"mc_z", mc_z},
            {"normalized_deviation", normalized}, {"rho_q99_normalized", rho_q99},
            {"rho_q99_ratio", q_ratio}};
  r.bound = {{"exact_second_moment", exact}, {"mc_z_max", 4.0}, {"leading_constant", constant},
             {"relative_tol", 0.2}, {"rho_ratio_band", {0.5, 2.0}},
             {"rho_q99_limit", std::abs(a * (a - 1.0)) / 2.0 * std::pow(std::log(100.0), 2.0)}};
  r.slack = std::min(4.0 - z_max, allowed - deviation);
  r.verdict = z_max <= 4.0 && deviation <= allowed + 1e-12 && rho_stable;
  r.replicas = p.replicas;
  r.seeds = {p.seed.value};
  r.runtime_ms = clock.elapsed_ms();
  return r;
}

struct Corollary1Params {
  double alpha = 1.5;
  std::vector<std::size_t> ns{100, 400, 1600};
  std::size_t replicas = 2000;
  RandomSeed seed = default_check_seed;
  double order = 1.0;  // claimed order of the relative error, in powers of 1/n
  unsigned threads = 1;
};

/// Σ_{k=1}^{n-1} E|Γ_{k+1}^α - Γ_k^α|² against (2α²/(2α-1)) n^{2α-1}.
/// Checks: the Monte Carlo sum agrees with the exact sum within 4 standard
/// errors; the Monte Carlo ratio lies in [0.9, 1.1] at every n; and the
/// exact relative error decreases by a factor within 2x of (n'/n)^order
/// between consecutive grid points.
inline CheckReport check_corollary1(const Corollary1Params& p = {}) {
  Stopwatch clock;
  if (!(p.alpha > 0.5)) throw std::invalid_argument("corollary1 requires alpha > 1/2");
  if (p.ns.size() < 2 || !std::is_sorted(p.ns.begin(), p.ns.end()))
    throw std::invalid_argument("corollary1 needs an increasing n grid of >= 2 points");
  const double a = p.alpha;
  const std::size_t n_max = p.ns.back();
  const std::size_t grid = p.ns.size();

  // sums[r * grid + g]: per-replica Σ_{k<n_g} |Γ_{k+1}^α - Γ_k^α|².
  std::vector<double> sums(p.replicas * grid, 0.0);
  parallel_for(p.replicas, p.threads, [&](std::size_t rep) {
    const auto path = sample_gamma_path(n_max, derive_seed(p.seed, rep));
    double total = 0.0;
    std::size_t g = 0;
    for (std::size_t k = 1; k < n_max; ++k) {
      const double inc = power_increment(path.arrival(k), path.spacing(k + 1), a);
      total += inc * inc;
      while (g < grid && p.ns[g] == k + 1) sums[rep * grid + g++] = total;
    }
  });

  std::vector<double> exact_sum, target, mc_ratio, mc_z, exact_error, drop;
  double running = 0.0;
  std::size_t k = 1;
  for (std::size_t g = 0; g < grid; ++g) {
    for (; k < p.ns[g]; ++k) running += exact_increment_second_moment(k, a);
    const double n = static_cast<double>(p.ns[g]);
    const double lead = 2.0 * a * a / (2.0 * a - 1.0) * std::pow(n, 2.0 * a - 1.0);
    RunningStats stats;
    for (std::size_t rep = 0; rep < p.replicas; ++rep) stats.add(sums[rep * grid + g]);
    exact_sum.push_back(running);
    target.push_back(lead);
    mc_ratio.push_back(stats.mean() / lead);
    mc_z.push_back(stats.stderr_mean() > 0.0 ? std::abs(stats.mean() - running) / stats.stderr_mean() : 0.0);
    exact_error.push_back(std::abs(running / lead - 1.0));
  }
  bool order_ok = true;
  double order_slack = std::numeric_limits<double>::infinity();
  for (std::size_t g = 1; g < grid; ++g) {
    const double expected = std::pow(static_cast<double>(p.ns[g]) / static_cast<double>(p.ns[g - 1]), p.order);
    if (exact_error[g] == 0.0 && exact_error[g - 1] == 0.0) {
      drop.push_back(expected);
      continue;
    }
    const double factor = exact_error[g - 1] / exact_error[g];
    drop.push_back(factor);
    const double log_gap = std::abs(std::log(factor / expected));
    order_slack = std::min(order_slack, std::log(2.0) - log_gap);
    order_ok = order_ok && log_gap <= std::log(2.0);
  }
  const double z_max = *std::max_element(mc_z.begin(), mc_z.end());
  double ratio_slack = std::numeric_limits<double>::infinity();
  for (double v : mc_ratio) ratio_slack = std::min(ratio_slack, 0.1 - std::abs(v - 1.0));

  CheckReport r;
  r.name = "corollary1";
  r.params = {{"alpha", a}, {"n", p.ns}, {"replicas", p.replicas}, {"order", p.order}};
  r.stat = {{"mc_ratio", mc_ratio}, {"mc_z", mc_z}, {"exact_relative_error", exact_error},
            {"error_drop_factor", drop}};
  r.bound = {{"exact_sum", exact_sum}, {"leading_term", target}, {"ratio_band", {0.9, 1.1}},
             {"mc_z_max", 4.0}, {"drop_tolerance_factor", 2.0}};
  r.slack = std::min({4.0 - z_max, ratio_slack, order_slack});
  r.verdict = z_max <= 4.0 && ratio_slack >= 0.0 && order_ok;
  r.replicas = p.replicas;
  r.seeds = {p.seed.value};
  r.runtime_ms = clock.elapsed_ms();
  return r;
}

// ---------------------------------------------------------------------------
// The martingale A_k^α and Doob's maximal inequality

/// Paths of A_k = Σ_{i<=k} ⟨ε_i, e_j⟩ ρ_i, k = 0..n (A_0 = 0), one per replica.
struct MartingaleSample {
  double alpha = 1.0;
  std::size_t n = 0;
  std::size_t coordinate = 1;
  std::vector<std::vector<double>> paths;
};

inline MartingaleSample sample_martingale(double alpha, std::size_t n, std::size_t d,
                                          std::size_t coordinate, std::size_t replicas,
                                          RandomSeed seed, unsigned threads = 1) {
  if (coordinate < 1 || coordinate > d) throw std::invalid_argument("coordinate index out of range");
  MartingaleSample sample{alpha, n, coordinate, std::vector<std::vector<double>>(replicas)};
  parallel_for(replicas, threads, [&](std::size_t rep) {
    const RandomSeed s = derive_seed(seed, rep);
    const auto gamma = sample_gamma_path(n, detail::arrival_seed(s));
    const auto dirs = sample_directions(n, d, detail::direction_seed(s));
    auto& path = sample.paths[rep];
    path.assign(n + 1, 0.0);
    for (std::size_t i = 1; i <= n; ++i)
      path[i] = path[i - 1] + dirs.projection(i, coordinate) *
                                  linearization_remainder(gamma.arrival(i - 1), gamma.spacing(i), alpha);
  });
  return sample;
}

/// Adds the tent-shaped drift height * (1 - |2k/n - 1|): zero at both ends,
/// peak in the middle. Used as a negative control for maximal inequalities.
inline MartingaleSample corrupt_with_drift(MartingaleSample sample, double height) {
  for (auto& path : sample.paths)
    for (std::size_t k = 0; k <= sample.n; ++k) {
      const double s = 2.0 * static_cast<double>(k) / static_cast<double>(sample.n) - 1.0;
      path[k] += height * (1.0 - std::abs(s));
    }
  return sample;
}

/// Root mean square of A_n over the sample.
inline double endpoint_rms(const MartingaleSample& sample) {
  double total = 0.0;
  for (const auto& path : sample.paths) total += path.back() * path.back();
  return std::sqrt(total / static_cast<double>(std::max<std::size_t>(sample.paths.size(), 1)));
}

/// λ^p P(max_k |A_k| >= λ) <= E|A_n|^p and, for p > 1,
/// E max_k |A_k|^p <= (p/(p-1))^p E|A_n|^p, each judged on per-replica
/// differences with a 3 standard error allowance.
inline CheckReport check_doob(const MartingaleSample& sample, double lambda, double p) {
  Stopwatch clock;
  if (!(lambda > 0.0) || !(p >= 1.0)) throw std::invalid_argument("doob requires lambda > 0, p >= 1");
  if (sample.paths.size() < 2) throw std::invalid_argument("doob needs at least two replicas");
  RunningStats weak, strong, lhs_prob, endpoint;
  const double doob_constant = p > 1.0 ? std::pow(p / (p - 1.0), p) : 0.0;
  for (const auto& path : sample.paths) {
    double peak = 0.0;
    for (double v : path) peak = std::max(peak, std::abs(v));
    const double end_p = std::pow(std::abs(path.back()), p);
    const double hit = peak >= lambda ? 1.0 : 0.0;
    weak.add(std::pow(lambda, p) * hit - end_p);
    if (p > 1.0) strong.add(std::pow(peak, p) - doob_constant * end_p);
    lhs_prob.add(hit);
    endpoint.add(end_p);
  }
  const double weak_slack = 3.0 * weak.stderr_mean() - weak.mean();
  double slack = weak_slack;
  nlohmann::json stat = {{"prob_max_ge_lambda", lhs_prob.mean()},
                         {"mean_abs_endpoint_p", endpoint.mean()},
                         {"weak_excess", weak.mean()},
                         {"weak_excess_stderr", weak.stderr_mean()}};
  if (p > 1.0) {
    stat["strong_excess"] = strong.mean();
    stat["strong_excess_stderr"] = strong.stderr_mean();
    slack = std::min(slack, 3.0 * strong.stderr_mean() - strong.mean());
  }
  CheckReport r;
  r.name = "doob";
  r.params = {{"alpha", sample.alpha}, {"n", sample.n}, {"lambda", lambda}, {"p", p},
              {"coordinate", sample.coordinate}};
  r.stat = stat;
  r.bound = {{"stderr_allowance", 3.0}, {"doob_constant", doob_constant}};
  r.slack = slack;
  r.verdict = slack >= 0.0;
  r.replicas = sample.paths.size();
  r.runtime_ms = clock.elapsed_ms();
  return r;
}

/// check_doob over a λ sweep; passes only if every point passes.
inline CheckReport check_doob_sweep(const MartingaleSample& sample, const std::vector<double>& lambdas,
                                    double p) {
  Stopwatch clock;
  CheckReport r;
  r.name = "doob";
  r.params = {{"alpha", sample.alpha}, {"n", sample.n}, {"lambda", lambdas}, {"p", p},
              {"coordinate", sample.coordinate}};
  r.verdict = true;
  r.slack = std::numeric_limits<double>::infinity();
  nlohmann::json points = nlohmann::json::array();
  for (double lambda : lambdas) {
    auto point = check_doob(sample, lambda, p);
    r.verdict = r.verdict && point.verdict;
    r.slack = std::min(r.slack, point.slack);
    points.push_back({{"lambda", lambda}, {"stat", point.stat}, {"slack", point.slack},
                      {"verdict", point.verdict}});
  }
  r.stat = {{"sweep", points}};
  r.bound = {{"stderr_allowance", 3.0}};
  r.replicas = sample.paths.size();
  r.runtime_ms = clock.elapsed_ms();
  return r;
}

struct MartingaleParams {
  double alpha = 1.5;
  std::size_t n = 200;
  std::size_t d = 1;
  std::size_t replicas = 20000;
  std::size_t bins = 10;
  RandomSeed seed = default_check_seed;
  bool signed_increments = true;  // false: drop the direction sign (negative control)
  unsigned threads = 1;
};

/// Conditional centering of the increments ⟨ε_k, e_1⟩ρ_k given the arrivals:
/// increments for k = 2..n are pooled and binned by deciles of Γ_{k-1}; the
/// mean of every bin must lie within 4 standard errors of 0.
inline CheckReport check_martingale(const MartingaleParams& p = {}) {
  Stopwatch clock;
  if (p.n < 2 || p.bins < 1) throw std::invalid_argument("martingale check needs n >= 2 and bins >= 1");
  const std::size_t per = p.n - 1;
  std::vector<double> key(p.replicas * per);
  std::vector<double> increment(p.replicas * per);
  parallel_for(p.replicas, p.threads, [&](std::size_t rep) {
    const RandomSeed s = derive_seed(p.seed, rep);
    const auto gamma = sample_gamma_path(p.n, detail::arrival_seed(s));
    const auto dirs = sample_directions(p.n, p.d, detail::direction_seed(s));
    for (std::size_t k = 2; k <= p.n; ++k) {
      const double rho = linearization_remainder(gamma.arrival(k - 1), gamma.spacing(k), p.alpha);
      const double sign = p.signed_increments ? dirs.projection(k, 1) : std::abs(dirs.projection(k, 1));
      key[rep * per + k - 2] = gamma.arrival(k - 1);
      increment[rep * per + k - 2] = sign * rho;
    }
  });
  std::vector<double> sorted_keys = key;
  std::sort(sorted_keys.begin(), sorted_keys.end());
  std::vector<double> edges;
  for (std::size_t b = 1; b < p.bins; ++b)
    edges.push_back(sorted_keys[b * sorted_keys.size() / p.bins]);
  std::vector<RunningStats> stats(p.bins);
  for (std::size_t idx = 0; idx < key.size(); ++idx) {
    const auto bin = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), key[idx]) - edges.begin());
    stats[bin].add(increment[idx]);
  }
  std::vector<double> means, z;
  double z_max = 0.0;
  for (const auto& s : stats) {
    means.push_back(s.mean());
    const double zi = s.stderr_mean() > 0.0 ? std::abs(s.mean()) / s.stderr_mean() : (s.mean() == 0.0 ? 0.0 : 1e300);
    z.push_back(zi);
    z_max = std::max(z_max, zi);
  }
  CheckReport r;
  r.name = "martingale";
  r.params = {{"alpha", p.alpha}, {"n", p.n}, {"d", p.d}, {"bins", p.bins},
              {"signed_increments", p.signed_increments}};
  r.stat = {{"bin_means", means}, {"bin_z", z}};
  r.bound = {{"z_max", 4.0}};
  r.slack = 4.0 - z_max;
  r.verdict = z_max <= 4.0;
  r.replicas = p.replicas;
  r.seeds = {p.seed.value};
  r.runtime_ms = clock.elapsed_ms();
  return r;
}

// ---------------------------------------------------------------------------
// Tail functional

struct TailEstimate {
  double value = 0.0;   // (1/m) Σ sup_norm^p 1{sup_norm >= R}
  double stderr_value = 0.0;
  std::size_t tail_count = 0;
  double max_sup_norm = 0.0;
};

inline TailEstimate tail_functional(const PathSample& sample, double radius, double p) {
  if (!(radius > 0.0) || !(p >= 1.0)) throw std::invalid_argument("tail functional requires R > 0, p >= 1");
  sample.validate();
  RunningStats stats;
  TailEstimate out;
  for (const auto& path : sample.paths) {
    const double norm = sup_norm(path);
    out.max_sup_norm = std::max(out.max_sup_norm, norm);
    const bool in_tail = norm >= radius;
    out.tail_count += in_tail ? 1 : 0;
    stats.add(in_tail ? std::pow(norm, p) : 0.0);
  }
  out.value = stats.mean();
  out.stderr_value = stats.stderr_mean();
  return out;
}

/// True for samples whose metadata names a regime with paths in the unit ball.
inline bool bounded_regime(const PathSample& sample) {
  if (!sample.meta.contains("regime")) return false;
  const auto variant = sample.meta["regime"].value("variant", std::string());
  return variant == "exponential" || variant == "superexponential";
}

/// Monte Carlo estimate of ∫_{d(0,x) >= R} d(0,x)^p dμ. For exponential and
/// super-exponential samples with R > 1 the estimate must be exactly 0.
inline CheckReport estimate_tail_functional(const PathSample& sample, double radius, double p) {
  Stopwatch clock;
  const auto est = tail_functional(sample, radius, p);
  const bool must_vanish = bounded_regime(sample) && radius > 1.0;
  CheckReport r;
  r.name = "tail";
  r.params = {{"R", radius}, {"p", p}, {"m", sample.size()}, {"meta", sample.meta}};
  r.stat = {{"estimate", est.value}, {"stderr", est.stderr_value}, {"tail_count", est.tail_count},
            {"max_sup_norm", est.max_sup_norm}};
  r.bound = must_vanish ? nlohmann::json{{"exact_zero", true}} : nlohmann::json{{"exact_zero", false}};
  r.slack = must_vanish ? radius - est.max_sup_norm : 0.0;
  r.verdict = std::isfinite(est.value) && (!must_vanish || est.value == 0.0);
  r.replicas = sample.size();
  if (sample.meta.contains("seed")) r.seeds = {sample.meta["seed"].get<std::uint64_t>()};
  r.runtime_ms = clock.elapsed_ms();
  return r;
}

/// Tail functional over an increasing R grid: non-increasing in R and
/// strictly smaller at the last grid point than at the first.
inline CheckReport check_tail_decay(const PathSample& sample, const std::vector<double>& radii, double p) {
  Stopwatch clock;
  if (radii.size() < 2 || !std::is_sorted(radii.begin(), radii.end()))
    throw std::invalid_argument("tail decay needs an increasing R grid");
  std::vector<double> values;
  for (double radius : radii) values.push_back(tail_functional(sample, radius, p).value);
  bool monotone = true;
  for (std::size_t i = 1; i < values.size(); ++i) monotone = monotone && values[i] <= values[i - 1];
  CheckReport r;
  r.name = "tail";
  r.params = {{"R", radii}, {"p", p}, {"m", sample.size()}, {"meta", sample.meta}};
  r.stat = {{"estimate", values}};
  r.bound = {{"non_increasing", true}, {"strict_overall_decrease", true}};
  r.slack = values.front() - values.back();
  r.verdict = monotone && values.back() < values.front();
  r.replicas = sample.size();
  r.runtime_ms = clock.elapsed_ms();
  return r;
}

// ---------------------------------------------------------------------------
// Polynomial-regime decomposition I + II + III and the d-dimensional reduction

struct DecompositionParams {
  double alpha = 1.0;
  std::size_t n = 500;
  int N = 2;  // Doob exponent 2N
  std::vector<double> radii{1.0, 2.0, 4.0};
  std::size_t replicas = 10000;
  std::size_t d = 1;
  RandomSeed seed = default_check_seed;
  unsigned threads = 1;
};

/// Slope of log P against log R over points with P > 0; NaN if fewer than two.
inline double fitted_decay_exponent(const std::vector<double>& radii, const std::vector<double>& probs) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < radii.size(); ++i)
    if (probs[i] > 0.0) {
      x.push_back(std::log(radii[i]));
      y.push_back(std::log(probs[i]));
    }
  if (x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  return ols_slope(x, y);
}

/// Simulates, for coordinate j = 1 and B_n = n^{α-1/2},
///   I   = max_k |B_n^{-1} Σ ⟨ε_i,e_1⟩ ρ_i|,
///   II  = max_k |α B_n^{-1} Σ ⟨ε_i,e_1⟩ γ_i (Γ_{i-1}^{α-1} - (i-1)^{α-1})|,
///   III = max_k |α B_n^{-1} Σ ⟨ε_i,e_1⟩ γ_i (i-1)^{α-1}|,
/// and the full statistic max_k |B_n^{-1} Σ ⟨ε_i,e_1⟩(Γ_i^α - Γ_{i-1}^α)|.
/// Verifies on every R: P(full >= 3R) <= P(I>R)+P(II>R)+P(III>R) and the
/// Doob-Markov bound P(I>R) <= E|A_n|^{2N}/(B_n R)^{2N}, each with 3 standard
/// errors; fits the log-log decay exponent of each piece and requires <= -2.
inline CheckReport estimate_decomposition_bounds(const DecompositionParams& p = {}) {
  Stopwatch clock;
  if (!(p.alpha > 0.5)) throw std::invalid_argument("decomposition requires alpha > 1/2");
  if (p.N < 1 || p.n < 1 || p.replicas < 2) throw std::invalid_argument("decomposition needs N, n >= 1");
  const double a = p.alpha;
  const double scale = std::pow(static_cast<double>(p.n), a - 0.5);
  struct Maxima {
    double full, i, ii, iii, martingale_end;
  };
  std::vector<Maxima> maxima(p.replicas);
  parallel_for(p.replicas, p.threads, [&](std::size_t rep) {
    const RandomSeed s = derive_seed(p.seed, rep);
    const auto gamma = sample_gamma_path(p.n, detail::arrival_seed(s));
    const auto dirs = sample_directions(p.n, p.d, detail::direction_seed(s));
    double full = 0, s1 = 0, s2 = 0, s3 = 0;
    Maxima m{0, 0, 0, 0, 0};
    for (std::size_t i = 1; i <= p.n; ++i) {
      const double e = dirs.projection(i, 1);
      const double prev = gamma.arrival(i - 1);
      const double spacing = gamma.spacing(i);
      const double inc = power_increment(prev, spacing, a);
      const double linear = linear_term(prev, spacing, a);
      const double index_power = i == 1 ? (a == 1.0 ? 1.0 : 0.0) : std::pow(static_cast<double>(i - 1), a - 1.0);
      const double centered = a * spacing * index_power;
      full += e * inc;
      s1 += e * (inc - linear);
      s2 += e * (linear - centered);
      s3 += e * centered;
      m.full = std::max(m.full, std::abs(full));
      m.i = std::max(m.i, std::abs(s1));
      m.ii = std::max(m.ii, std::abs(s2));
      m.iii = std::max(m.iii, std::abs(s3));
    }
    m.martingale_end = s1;
    m.full /= scale;
    m.i /= scale;
    m.ii /= scale;
    m.iii /= scale;
    maxima[rep] = m;
  });

  std::vector<double> p_full, p_i, p_ii, p_iii, doob_bound, split_excess;
  double slack = std::numeric_limits<double>::infinity();
  bool holds = true;
  for (double radius : p.radii) {
    RunningStats full, one, two, three, split, markov;
    RunningStats moment;
    for (const auto& m : maxima) moment.add(std::pow(std::abs(m.martingale_end) / (scale * radius), 2.0 * p.N));
    for (const auto& m : maxima) {
      const double f = m.full >= 3.0 * radius ? 1.0 : 0.0;
      const double x1 = m.i > radius ? 1.0 : 0.0;
      const double x2 = m.ii > radius ? 1.0 : 0.0;
      const double x3 = m.iii > radius ? 1.0 : 0.0;
      full.add(f);
      one.add(x1);
      two.add(x2);
      three.add(x3);
      split.add(f - x1 - x2 - x3);
      markov.add(x1 - std::pow(std::abs(m.martingale_end) / (scale * radius), 2.0 * p.N));
    }
    p_full.push_back(full.mean());
    p_i.push_back(one.mean());
    p_ii.push_back(two.mean());
    p_iii.push_back(three.mean());
    doob_bound.push_back(moment.mean());
    split_excess.push_back(split.mean());
    const double s_split = 3.0 * split.stderr_mean() - split.mean();
    const double s_markov = 3.0 * markov.stderr_mean() - markov.mean();
    slack = std::min({slack, s_split, s_markov});
    holds = holds && s_split >= 0.0 && s_markov >= 0.0;
  }
  const double e_i = fitted_decay_exponent(p.radii, p_i);
  const double e_ii = fitted_decay_exponent(p.radii, p_ii);
  const double e_iii = fitted_decay_exponent(p.radii, p_iii);
  auto decays = [](double e) { return std::isnan(e) || e <= -2.0; };
  auto as_json = [](double e) { return std::isnan(e) ? nlohmann::json(nullptr) : nlohmann::json(e); };
  for (double e : {e_i, e_ii, e_iii})
    if (!std::isnan(e)) slack = std::min(slack, -2.0 - e);

  CheckReport r;
  r.name = "decomposition";
  r.params = {{"alpha", a}, {"n", p.n}, {"N", p.N}, {"R", p.radii}, {"d", p.d}, {"coordinate", 1}};
  r.stat = {{"p_full_ge_3R", p_full}, {"p_I", p_i}, {"p_II", p_ii}, {"p_III", p_iii},
            {"split_excess", split_excess},
            {"decay_exponent", {{"I", as_json(e_i)}, {"II", as_json(e_ii)}, {"III", as_json(e_iii)}}}};
  r.bound = {{"doob_markov_bound_I", doob_bound}, {"stderr_allowance", 3.0}, {"decay_exponent_max", -2.0}};
  r.slack = slack;
  r.verdict = holds && decays(e_i) && decays(e_ii) && decays(e_iii);
  r.replicas = p.replicas;
  r.seeds = {p.seed.value};
  r.runtime_ms = clock.elapsed_ms();
  return r;
}

struct DimensionReductionParams {
  double alpha = 1.0;
  std::size_t n = 200;
  double radius = 2.0;
  std::size_t d = 2;
  std::size_t replicas = 10000;
  RandomSeed seed = default_check_seed;
  unsigned threads = 1;
};

/// P(max_k |Σ ε_i Δ_i| >= B_n R) <= Σ_j P(max_k Σ |⟨ε_i,e_j⟩| Δ_i >= B_n R/d)
/// with Δ_i = Γ_i^α - Γ_{i-1}^α, judged with a 3 standard error allowance.
inline CheckReport check_dimension_reduction(const DimensionReductionParams& p = {}) {
  Stopwatch clock;
  if (!(p.alpha > 0.5) || p.d < 1 || p.n < 1 || !(p.radius > 0.0) || p.replicas < 2)
    throw std::invalid_argument("dimension reduction requires alpha > 1/2, d, n >= 1, R > 0");
  const double threshold = std::pow(static_cast<double>(p.n), p.alpha - 0.5) * p.radius;
  std::vector<double> lhs(p.replicas);
  std::vector<double> rhs_terms(p.replicas * p.d);
  parallel_for(p.replicas, p.threads, [&](std::size_t rep) {
    const RandomSeed s = derive_seed(p.seed, rep);
    const auto gamma = sample_gamma_path(p.n, detail::arrival_seed(s));
    const auto dirs = sample_directions(p.n, p.d, detail::direction_seed(s));
    std::vector<double> position(p.d, 0.0);
    std::vector<double> absolute(p.d, 0.0);
    double peak = 0.0;
    for (std::size_t i = 1; i <= p.n; ++i) {
      const double inc = power_increment(gamma.arrival(i - 1), gamma.spacing(i), p.alpha);
      double norm_sq = 0.0;
      for (std::size_t j = 1; j <= p.d; ++j) {
        position[j - 1] += dirs.projection(i, j) * inc;
        absolute[j - 1] += std::abs(dirs.projection(i, j)) * inc;
        norm_sq += position[j - 1] * position[j - 1];
      }
      peak = std::max(peak, std::sqrt(norm_sq));
    }
    lhs[rep] = peak >= threshold ? 1.0 : 0.0;
    // Increments are nonnegative, so the running maximum of the absolute
    // sums is attained at k = n.
    for (std::size_t j = 0; j < p.d; ++j)
      rhs_terms[rep * p.d + j] = absolute[j] >= threshold / static_cast<double>(p.d) ? 1.0 : 0.0;
  });
  RunningStats left, excess;
  std::vector<RunningStats> per_axis(p.d);
  for (std::size_t rep = 0; rep < p.replicas; ++rep) {
    double union_count = 0.0;
    for (std::size_t j = 0; j < p.d; ++j) {
      per_axis[j].add(rhs_terms[rep * p.d + j]);
      union_count += rhs_terms[rep * p.d + j];
    }
    left.add(lhs[rep]);
    excess.add(lhs[rep] - union_count);
  }
  std::vector<double> axis_probs;
  double right = 0.0;
  for (const auto& s : per_axis) {
    axis_probs.push_back(s.mean());
    right += s.mean();
  }
  CheckReport r;
  r.name = "dimension";
  r.params = {{"alpha", p.alpha}, {"n", p.n}, {"R", p.radius}, {"d", p.d}};
  r.stat = {{"lhs_probability", left.mean()}, {"axis_probabilities", axis_probs}, {"rhs_sum", right}};
  r.bound = {{"stderr_allowance", 3.0}};
  r.slack = 3.0 * excess.stderr_mean() - excess.mean();
  r.verdict = r.slack >= 0.0;
  r.replicas = p.replicas;
  r.seeds = {p.seed.value};
  r.runtime_ms = clock.elapsed_ms();
  return r;
}

}  // namespace flightwp
