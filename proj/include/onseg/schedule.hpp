#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "onseg/core.hpp"

namespace onseg {

// Parameters of the bandit learners derived from the problem constants.
struct Schedule {
  int d = 0;
  double F = 0.0;      // bound on |f_t|
  double D = 0.0;      // diameter of P
  double r = 0.0;      // inscribed radius
  double sigma = 1.0;  // niceness parameter, user supplied
  long T = 0;
  std::optional<double> L;  // Lipschitz constant, Lipschitz schedule only
  std::optional<double> G;  // full-information gradient bound

  double delta = 0.0;
  double gamma = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double epsilon = 0.0;
  bool clamped = false;
  bool beta_overridden = false;
};

// Shrink used when the closed forms produce gamma >= 1.
inline constexpr double kClampedShrink = 0.5;

namespace detail {

inline void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw ConfigError(std::string("schedule: ") + name + " must be positive and finite");
  }
}

inline void validate_schedule_inputs(int d, double F, double D, double sigma, double r, long T) {
  if (d <= 0) throw ConfigError("schedule: dimension must be positive");
  require_positive(F, "F");
  require_positive(D, "D");
  require_positive(sigma, "sigma");
  require_positive(r, "r");
  if (T < 2) throw ConfigError("schedule: horizon T must be at least 2");
}

}  // namespace detail

// alpha, beta and epsilon from delta (and beta from its override, if any).
inline void derive_curvature_constants(Schedule& s) {
  const double d = s.d;
  s.alpha = s.sigma * s.delta * s.delta / (d * d * s.F * s.F);
  if (!s.beta_overridden) s.beta = 0.5 * std::min(s.delta / (4.0 * d * s.F * s.D), s.alpha);
  if (!(s.beta > 0.0) || !std::isfinite(s.beta)) {
    throw ConfigError("schedule: beta underflowed to " + std::to_string(s.beta) +
                      "; check sigma, delta and F");
  }
  s.epsilon = 1.0 / (s.beta * s.beta * s.D * s.D);
  if (!std::isfinite(s.epsilon)) {
    throw ConfigError("schedule: epsilon = 1/(beta^2 D^2) overflows; beta is too small");
  }
}

// Enforce delta / r <= gamma < 1.
inline void clamp_schedule(Schedule& s) {
  if (s.gamma >= 1.0) {
    s.gamma = kClampedShrink;
    s.clamped = true;
  }
  if (s.delta > s.gamma * s.r) {
    s.delta = s.gamma * s.r;
    s.clamped = true;
  }
}

// delta = (25 d^4 D^2 log^2 T r / (3 T^2))^(1/3),  gamma = (15 d^2 D log T / (r T))^(1/3)
inline Schedule schedule_theorem1(int d, double F, double D, double sigma, double r, long T) {
  detail::validate_schedule_inputs(d, F, D, sigma, r, T);
  Schedule s;
  s.d = d;
  s.F = F;
  s.D = D;
  s.r = r;
  s.sigma = sigma;
  s.T = T;
  const double dd = d;
  const double horizon = static_cast<double>(T);
  const double log_t = std::log(horizon);
  s.delta = std::cbrt(25.0 * std::pow(dd, 4) * D * D * log_t * log_t * r / (3.0 * horizon * horizon));
  s.gamma = std::cbrt(15.0 * dd * dd * D * log_t / (r * horizon));
  clamp_schedule(s);
  derive_curvature_constants(s);
  return s;
}

// delta = T^(-1/2) sqrt(10 d^2 F D r log T / (3 (L r + F))),  gamma = delta / r
inline Schedule schedule_theorem2(int d, double F, double D, double r, double L, long T,
                                  double sigma = 1.0) {
  detail::validate_schedule_inputs(d, F, D, sigma, r, T);
  detail::require_positive(L, "L");
  Schedule s;
  s.d = d;
  s.F = F;
  s.D = D;
  s.r = r;
  s.sigma = sigma;
  s.T = T;
  s.L = L;
  const double dd = d;
  const double horizon = static_cast<double>(T);
  const double log_t = std::log(horizon);
  s.delta = std::sqrt(10.0 * dd * dd * F * D * r * log_t / (3.0 * (L * r + F))) / std::sqrt(horizon);
  s.gamma = s.delta / r;
  if (s.gamma >= 1.0) {
    s.gamma = kClampedShrink;
    s.delta = s.gamma * r;
    s.clamped = true;
  }
  derive_curvature_constants(s);
  return s;
}

struct ScheduleOverrides {
  std::optional<double> delta;
  std::optional<double> gamma;
  std::optional<double> beta;
};

// Replace delta, gamma or beta by user-supplied values and re-derive the rest.
inline Schedule apply_overrides(Schedule s, const ScheduleOverrides& o) {
  if (o.delta) {
    detail::require_positive(*o.delta, "delta override");
    s.delta = *o.delta;
  }
  if (o.gamma) s.gamma = *o.gamma;
  if (!(s.gamma >= 0.0 && s.gamma < 1.0)) throw ConfigError("schedule: gamma must lie in [0, 1)");
  if (s.delta > s.gamma * s.r * (1.0 + 1e-12)) {
    throw ConfigError("schedule: delta / r <= gamma violated (delta=" + std::to_string(s.delta) +
                      ", gamma*r=" + std::to_string(s.gamma * s.r) + ")");
  }
  if (o.beta) {
    detail::require_positive(*o.beta, "beta override");
    s.beta = *o.beta;
    s.beta_overridden = true;
  }
  derive_curvature_constants(s);
  return s;
}

}  // namespace onseg
