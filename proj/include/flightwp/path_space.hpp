#pragma once

// Continuous piecewise-linear paths [0,1] -> R^d and the sup metric on C[0,1].

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace flightwp {

/// A polyline with strictly increasing breakpoints from 0 to 1 and one point
/// of R^d per breakpoint. Immutable once constructed.
class Polyline {
 public:
  /// Validates the knot data. Runs of equal breakpoints (numerical ties) are
  /// merged, keeping the value of the last knot in the run.
  Polyline(std::size_t dimension, std::vector<double> breakpoints, std::vector<double> values)
      : dimension_(dimension) {
    if (dimension == 0) throw std::invalid_argument("polyline dimension must be >= 1");
    if (values.size() != breakpoints.size() * dimension)
      throw std::invalid_argument("polyline: value count does not match breakpoints * dimension");
    if (breakpoints.size() < 2)
      throw std::invalid_argument("polyline needs at least two breakpoints");
    if (breakpoints.front() != 0.0 || breakpoints.back() != 1.0)
      throw std::invalid_argument("polyline breakpoints must start at 0 and end at 1");
    for (double v : values)
      if (!std::isfinite(v)) throw std::invalid_argument("polyline values must be finite");

    breakpoints_.reserve(breakpoints.size());
    values_.reserve(values.size());
    for (std::size_t k = 0; k < breakpoints.size(); ++k) {
      const double t = breakpoints[k];
      if (!std::isfinite(t)) throw std::invalid_argument("polyline breakpoints must be finite");
      const auto value = std::span<const double>(values).subspan(k * dimension, dimension);
      if (!breakpoints_.empty() && t < breakpoints_.back())
        throw std::invalid_argument("polyline breakpoints must be non-decreasing");
      if (!breakpoints_.empty() && t == breakpoints_.back()) {
        std::copy(value.begin(), value.end(), values_.end() - static_cast<std::ptrdiff_t>(dimension));
        continue;
      }
      breakpoints_.push_back(t);
      values_.insert(values_.end(), value.begin(), value.end());
    }
    if (breakpoints_.size() < 2)
      throw std::invalid_argument("polyline degenerates to a single breakpoint");
  }

  /// The constant zero path.
  static Polyline zero(std::size_t dimension) {
    return Polyline(dimension, {0.0, 1.0}, std::vector<double>(2 * dimension, 0.0));
  }

  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return breakpoints_.size(); }
  std::span<const double> breakpoints() const noexcept { return breakpoints_; }
  std::span<const double> values() const noexcept { return values_; }
  double breakpoint(std::size_t k) const { return breakpoints_[k]; }
  std::span<const double> value(std::size_t k) const {
    return std::span<const double>(values_).subspan(k * dimension_, dimension_);
  }

  /// Linear interpolation; exact at breakpoints.
  std::vector<double> eval(double t) const {
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("eval: t must lie in [0, 1]");
    std::vector<double> out(dimension_);
    eval_into(t, segment_for(t), out);
    return out;
  }

  /// Index k of the segment [t_k, t_{k+1}] used to evaluate at t.
  std::size_t segment_for(double t) const {
    const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
    const auto k = static_cast<std::size_t>(it - breakpoints_.begin());
    return std::min(k == 0 ? 0 : k - 1, size() - 2);
  }

  /// Evaluates on segment k (caller guarantees t_k <= t <= t_{k+1}).
  void eval_into(double t, std::size_t k, std::span<double> out) const {
    const double t0 = breakpoints_[k];
    const double t1 = breakpoints_[k + 1];
    const auto v0 = value(k);
    const auto v1 = value(k + 1);
    if (t == t0) {
      std::copy(v0.begin(), v0.end(), out.begin());
      return;
    }
    if (t == t1) {
      std::copy(v1.begin(), v1.end(), out.begin());
      return;
    }
    const double w = (t - t0) / (t1 - t0);
    for (std::size_t j = 0; j < dimension_; ++j) out[j] = v0[j] + w * (v1[j] - v0[j]);
  }

 private:
  std::size_t dimension_;
  std::vector<double> breakpoints_;
  std::vector<double> values_;
};

namespace detail {

inline double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double diff = a[j] - b[j];
    sum += diff * diff;
  }
  return std::sqrt(sum);
}

inline double euclidean_norm(std::span<const double> a) {
  double sum = 0.0;
  for (double x : a) sum += x * x;
  return std::sqrt(sum);
}

}  // namespace detail

/// sup_{t in [0,1]} |a(t) - b(t)|. On every interval between consecutive
/// points of the union of both breakpoint sets, a - b is affine and its norm
/// convex, so the maximum over that union is exact.
inline double sup_distance(const Polyline& a, const Polyline& b) {
  if (a.dimension() != b.dimension())
    throw std::invalid_argument("sup_distance: dimension mismatch");
  const std::size_t d = a.dimension();
  std::vector<double> va(d);
  std::vector<double> vb(d);
  const auto ta = a.breakpoints();
  const auto tb = b.breakpoints();
  std::size_t i = 0;
  std::size_t j = 0;
  double best = 0.0;
  while (i < ta.size() && j < tb.size()) {
    const double t = std::min(ta[i], tb[j]);
    if (ta[i] == t) {
      const auto v = a.value(i);
      std::copy(v.begin(), v.end(), va.begin());
    } else {
      a.eval_into(t, i - 1, va);
    }
    if (tb[j] == t) {
      const auto v = b.value(j);
      std::copy(v.begin(), v.end(), vb.begin());
    } else {
      b.eval_into(t, j - 1, vb);
    }
    best = std::max(best, detail::euclidean_distance(va, vb));
    if (ta[i] == t) ++i;
    if (tb[j] == t) ++j;
  }
  return best;
}

/// Distance to the zero path: the largest knot norm.
inline double sup_norm(const Polyline& a) {
  double best = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) best = std::max(best, detail::euclidean_norm(a.value(k)));
  return best;
}

/// Equal-weight empirical measure over paths of a common dimension, with the
/// metadata describing how it was generated.
struct PathSample {
  std::vector<Polyline> paths;
  nlohmann::json meta = nlohmann::json::object();

  std::size_t size() const noexcept { return paths.size(); }
  std::size_t dimension() const { return paths.empty() ? 0 : paths.front().dimension(); }

  void validate() const {
    if (paths.empty()) throw std::invalid_argument("path sample must be nonempty");
    for (const auto& p : paths)
      if (p.dimension() != paths.front().dimension())
        throw std::invalid_argument("path sample mixes dimensions");
  }
};

// Serialization: one JSON object per path {d, t, v}.

inline nlohmann::json to_json(const Polyline& path) {
  nlohmann::json values = nlohmann::json::array();
  for (std::size_t k = 0; k < path.size(); ++k) {
    const auto v = path.value(k);
    values.push_back(std::vector<double>(v.begin(), v.end()));
  }
  const auto t = path.breakpoints();
  return {{"d", path.dimension()}, {"t", std::vector<double>(t.begin(), t.end())}, {"v", values}};
}

inline Polyline polyline_from_json(const nlohmann::json& j) {
  const auto d = j.at("d").get<std::size_t>();
  auto t = j.at("t").get<std::vector<double>>();
  std::vector<double> values;
  values.reserve(t.size() * d);
  for (const auto& point : j.at("v")) {
    if (point.size() != d) throw std::invalid_argument("path JSON: point has wrong dimension");
    for (const auto& x : point) values.push_back(x.get<double>());
  }
  return Polyline(d, std::move(t), std::move(values));
}

/// CSV with columns path_id, knot_index, t, v_1..v_d.
inline void write_csv(std::ostream& out, const PathSample& sample) {
  sample.validate();
  const std::size_t d = sample.dimension();
  out << "path_id,knot_index,t";
  for (std::size_t j = 1; j <= d; ++j) out << ",v_" << j;
  out << '\n';
  const auto old_precision = out.precision(17);
  for (std::size_t id = 0; id < sample.size(); ++id) {
    const auto& path = sample.paths[id];
    for (std::size_t k = 0; k < path.size(); ++k) {
      out << id << ',' << k << ',' << path.breakpoint(k);
      for (double x : path.value(k)) out << ',' << x;
      out << '\n';
    }
  }
  out.precision(old_precision);
}

}  // namespace flightwp
