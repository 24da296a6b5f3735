#pragma once

#include <functional>
#include <optional>
#include <string>

#include "onseg/core.hpp"
#include "onseg/geometry.hpp"

namespace onseg {

inline constexpr double kUnitNormTolerance = 1e-9;

struct GradientEstimate {
  Point g;          // (d / delta) * observed_value * direction
  Point query;      // x_t
  Point direction;  // v_t
  double observed_value = 0.0;
  double delta = 0.0;
};

namespace detail {

inline void require_unit(const Point& v, const char* what) {
  if (!v.allFinite() || std::abs(v.norm() - 1.0) > kUnitNormTolerance) {
    throw ConfigError(std::string(what) + ": direction must have unit norm");
  }
}

inline void require_positive_delta(double delta, const char* what) {
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw ConfigError(std::string(what) + ": delta must be positive, got " + std::to_string(delta));
  }
}

}  // namespace detail

// x = y + delta * v. When a set is supplied the result is checked for membership
// in P and a violation names the margin by which it falls outside.
inline Point perturb(const Point& y, double delta, const Point& v,
                     const FeasibleSet* set = nullptr) {
  detail::require_positive_delta(delta, "perturb");
  detail::require_unit(v, "perturb");
  if (y.size() != v.size()) throw ConfigError("perturb: dimension mismatch");
  Point x = y + delta * v;
  if (set != nullptr && !contains(*set, x)) {
    double margin = 0.0;
    if (const auto* ball = std::get_if<BallSet>(set)) {
      margin = x.norm() - ball->radius;
    } else {
      margin = -x.minCoeff();
    }
    throw NumericError("perturb: perturbed point leaves the feasible set by " +
                       std::to_string(margin) + " (requires delta <= gamma * r)");
  }
  return x;
}

// Single-evaluation gradient estimate (d / delta) f(x) v, with x = y + delta v.
inline GradientEstimate one_point_gradient(double fval, const Point& v, int d, double delta,
                                           const Point& query = Point()) {
  detail::require_positive_delta(delta, "one_point_gradient");
  detail::require_unit(v, "one_point_gradient");
  if (d <= 0) throw ConfigError("one_point_gradient: dimension must be positive");
  if (!std::isfinite(fval)) throw NumericError("one_point_gradient: non-finite loss value");
  GradientEstimate est;
  est.g = (static_cast<double>(d) / delta * fval) * v;
  est.query = query;
  est.direction = v;
  est.observed_value = fval;
  est.delta = delta;
  return est;
}

struct MonteCarloEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
};

// Sample mean of f(x + delta u), u uniform in the unit ball. Test oracle only.
inline MonteCarloEstimate smoothed_value_mc(const std::function<double(const Point&)>& f,
                                            const Point& x, double delta, long n, Rng& rng) {
  if (n < 2) throw ConfigError("smoothed_value_mc: need at least two samples");
  detail::require_positive_delta(delta, "smoothed_value_mc");
  const int d = static_cast<int>(x.size());
  // Welford accumulation
  double mean = 0.0;
  double m2 = 0.0;
  for (long i = 0; i < n; ++i) {
    const double value = f(x + delta * sample_unit_ball(d, rng));
    const double diff = value - mean;
    mean += diff / static_cast<double>(i + 1);
    m2 += diff * (value - mean);
  }
  const double variance = m2 / static_cast<double>(n - 1);
  return {mean, std::sqrt(variance / static_cast<double>(n))};
}

}  // namespace onseg
