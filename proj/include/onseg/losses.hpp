#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "onseg/core.hpp"
#include "onseg/geometry.hpp"

namespace onseg {

struct LossSample {
  Point z;             // features, return rates, or quadratic centre
  double y = 0.0;      // regression target or +-1 label; unused otherwise
};

enum class LossFamily {
  Squared,    // 1/2 (<x, z> - y)^2
  Logistic,   // log(1 + exp(-y <x, z>))
  Return,     // -<x, z>; the reported metric is +<x, z>
  Quadratic,  // 1/2 |x - z|^2
};

inline std::string_view to_string(LossFamily family) {
  switch (family) {
    case LossFamily::Squared: return "squared";
    case LossFamily::Logistic: return "logistic";
    case LossFamily::Return: return "return";
    case LossFamily::Quadratic: return "quadratic";
  }
  return "unknown";
}

namespace detail {

inline void check_dims(const Point& x, const LossSample& s, const char* what) {
  if (x.size() != s.z.size()) {
    throw DataError(std::string(what) + ": dimension mismatch (" + std::to_string(x.size()) +
                    " vs " + std::to_string(s.z.size()) + ")");
  }
}

inline void check_label(double y) {
  if (y != 1.0 && y != -1.0) {
    throw DataError("logistic loss: label must be -1 or +1, got " + std::to_string(y));
  }
}

// log(1 + exp(m)) without overflow
inline double softplus(double m) {
  return m > 0.0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
}

// 1 / (1 + exp(-m)) without overflow
inline double sigmoid(double m) {
  if (m >= 0.0) return 1.0 / (1.0 + std::exp(-m));
  const double e = std::exp(m);
  return e / (1.0 + e);
}

}  // namespace detail

inline double squared_loss(const Point& x, const LossSample& s) {
  detail::check_dims(x, s, "squared_loss");
  const double residual = x.dot(s.z) - s.y;
  return 0.5 * residual * residual;
}

inline Point squared_grad(const Point& x, const LossSample& s) {
  detail::check_dims(x, s, "squared_grad");
  return (x.dot(s.z) - s.y) * s.z;
}

inline double logistic_loss(const Point& x, const LossSample& s) {
  detail::check_dims(x, s, "logistic_loss");
  detail::check_label(s.y);
  return detail::softplus(-s.y * x.dot(s.z));
}

inline Point logistic_grad(const Point& x, const LossSample& s) {
  detail::check_dims(x, s, "logistic_grad");
  detail::check_label(s.y);
  return (-s.y * detail::sigmoid(-s.y * x.dot(s.z))) * s.z;
}

// P(label = +1 | z)
inline double logistic_predict(const Point& x, const Point& z) {
  if (x.size() != z.size()) throw DataError("logistic_predict: dimension mismatch");
  return detail::sigmoid(x.dot(z));
}

// Portfolio return <x, z>. Learners minimise its negation, return_loss.
inline double portfolio_return(const Point& x, const LossSample& s) {
  detail::check_dims(x, s, "portfolio_return");
  return x.dot(s.z);
}

inline double return_loss(const Point& x, const LossSample& s) { return -portfolio_return(x, s); }

inline Point return_grad(const Point& x, const LossSample& s) {
  detail::check_dims(x, s, "return_grad");
  return -s.z;
}

inline double quadratic_loss(const Point& x, const LossSample& s) {
  detail::check_dims(x, s, "quadratic_loss");
  return 0.5 * (x - s.z).squaredNorm();
}

inline Point quadratic_grad(const Point& x, const LossSample& s) {
  detail::check_dims(x, s, "quadratic_grad");
  return x - s.z;
}

inline double loss_value(LossFamily family, const Point& x, const LossSample& s) {
  switch (family) {
    case LossFamily::Squared: return squared_loss(x, s);
    case LossFamily::Logistic: return logistic_loss(x, s);
    case LossFamily::Return: return return_loss(x, s);
    case LossFamily::Quadratic: return quadratic_loss(x, s);
  }
  throw ConfigError("unknown loss family");
}

inline Point loss_gradient(LossFamily family, const Point& x, const LossSample& s) {
  switch (family) {
    case LossFamily::Squared: return squared_grad(x, s);
    case LossFamily::Logistic: return logistic_grad(x, s);
    case LossFamily::Return: return return_grad(x, s);
    case LossFamily::Quadratic: return quadratic_grad(x, s);
  }
  throw ConfigError("unknown loss family");
}

struct LossBounds {
  double F = 0.0;  // sup |f_t| over P
  double G = 0.0;  // sup |grad f_t| over P
  double L = 0.0;  // Lipschitz constant on P
};

namespace detail {

// max over x in P of |<x, z>|
inline double support(const FeasibleSet& set, const Point& z) {
  if (const auto* ball = std::get_if<BallSet>(&set)) return ball->radius * z.norm();
  return z.cwiseAbs().maxCoeff();
}

// max over x in P of |x - c|
inline double farthest_distance(const FeasibleSet& set, const Point& c) {
  if (const auto* ball = std::get_if<BallSet>(&set)) return ball->radius + c.norm();
  // convex function of x, maximised at a vertex
  double best = 0.0;
  for (Eigen::Index k = 0; k < c.size(); ++k) {
    Point e = Point::Zero(c.size());
    e[k] = 1.0;
    best = std::max(best, (e - c).norm());
  }
  return best;
}

}  // namespace detail

// Closed-form suprema of |f|, |grad f| over P, maximised over the dataset.
inline LossBounds estimate_bounds(LossFamily family, std::span<const LossSample> samples,
                                  const FeasibleSet& set) {
  if (samples.empty()) throw DataError("estimate_bounds: empty dataset");
  LossBounds b;
  for (const auto& s : samples) {
    if (s.z.size() != dimension(set)) throw DataError("estimate_bounds: dimension mismatch");
    const double reach = detail::support(set, s.z);
    double f = 0.0;
    double g = 0.0;
    switch (family) {
      case LossFamily::Squared:
        f = 0.5 * (reach + std::abs(s.y)) * (reach + std::abs(s.y));
        g = (reach + std::abs(s.y)) * s.z.norm();
        break;
      case LossFamily::Logistic:
        detail::check_label(s.y);
        f = detail::softplus(reach);
        g = s.z.norm();
        break;
      case LossFamily::Return:
        f = reach;
        g = s.z.norm();
        break;
      case LossFamily::Quadratic: {
        const double rho = detail::farthest_distance(set, s.z);
        f = 0.5 * rho * rho;
        g = rho;
        break;
      }
    }
    b.F = std::max(b.F, f);
    b.G = std::max(b.G, g);
  }
  b.L = b.G;
  if (!(b.F > 0.0) || !(b.G > 0.0) || !std::isfinite(b.F) || !std::isfinite(b.G)) {
    throw DataError("estimate_bounds: degenerate dataset (F=" + std::to_string(b.F) +
                    ", G=" + std::to_string(b.G) + ")");
  }
  return b;
}

}  // namespace onseg
