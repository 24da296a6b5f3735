#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "onseg/core.hpp"
#include "onseg/curvature.hpp"

namespace onseg {

// Relative slack used by the membership tests to absorb rounding in the last bits.
inline constexpr double kMembershipTolerance = 1e-12;

// Origin-centred Euclidean ball of radius D/2.
struct BallSet {
  int dim = 0;
  double radius = 0.0;        // D/2
  double inner_radius = 0.0;  // r, with r*B inside the set
  double shrink = 0.0;        // gamma

  BallSet() = default;
  BallSet(int d, double outer_radius, double r, double gamma = 0.0)
      : dim(d), radius(outer_radius), inner_radius(r), shrink(gamma) {
    if (d <= 0) throw ConfigError("BallSet: dimension must be positive");
    if (!(outer_radius > 0.0) || !std::isfinite(outer_radius)) {
      throw ConfigError("BallSet: radius must be positive");
    }
    if (!(r > 0.0) || r > outer_radius) {
      throw ConfigError("BallSet: inner radius must satisfy 0 < r <= D/2");
    }
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("BallSet: shrink must lie in [0, 1)");
  }

  double diameter() const { return 2.0 * radius; }
  double shrunken_radius() const { return (1.0 - shrink) * radius; }
};

// Probability simplex {x >= 0, sum x = 1}. Its shrunken copy contracts toward
// the barycenter, which makes it {x >= shrink/d, sum x = 1}.
struct SimplexSet {
  int dim = 0;
  double shrink = 0.0;

  SimplexSet() = default;
  explicit SimplexSet(int d, double gamma = 0.0) : dim(d), shrink(gamma) {
    if (d < 2) throw ConfigError("SimplexSet: dimension must be at least 2");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("SimplexSet: shrink must lie in [0, 1)");
  }

  double diameter() const { return std::sqrt(2.0); }
  // radius of the largest ball around the barycenter inside the affine hull
  double inner_radius() const { return 1.0 / std::sqrt(static_cast<double>(dim) * (dim - 1)); }
  double lower_bound(bool shrunken) const { return shrunken ? shrink / dim : 0.0; }
};

using FeasibleSet = std::variant<BallSet, SimplexSet>;

inline int dimension(const FeasibleSet& set) {
  return std::visit([](const auto& s) { return s.dim; }, set);
}

inline double diameter(const FeasibleSet& set) {
  return std::visit([](const auto& s) { return s.diameter(); }, set);
}

inline double inner_radius(const FeasibleSet& set) {
  if (const auto* ball = std::get_if<BallSet>(&set)) return ball->inner_radius;
  return std::get<SimplexSet>(set).inner_radius();
}

inline double shrink_of(const FeasibleSet& set) {
  return std::visit([](const auto& s) { return s.shrink; }, set);
}

// Dimension of the set's affine hull; this is the d of the one-point estimator.
inline int tangent_dimension(const FeasibleSet& set) {
  if (std::holds_alternative<BallSet>(set)) return dimension(set);
  return dimension(set) - 1;
}

inline FeasibleSet with_shrink(FeasibleSet set, double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("shrink must lie in [0, 1)");
  std::visit([gamma](auto& s) { s.shrink = gamma; }, set);
  return set;
}

inline Point center(const FeasibleSet& set) {
  const int d = dimension(set);
  if (std::holds_alternative<BallSet>(set)) return Point::Zero(d);
  return Point::Constant(d, 1.0 / d);
}

// Membership in P (shrunken = false) or (1 - gamma)P (shrunken = true).
inline bool contains(const FeasibleSet& set, const Point& x, bool shrunken = false) {
  if (x.size() != dimension(set) || !x.allFinite()) return false;
  if (const auto* ball = std::get_if<BallSet>(&set)) {
    const double radius = shrunken ? ball->shrunken_radius() : ball->radius;
    return x.norm() <= radius * (1.0 + kMembershipTolerance);
  }
  const auto& simplex = std::get<SimplexSet>(set);
  const double lb = simplex.lower_bound(shrunken);
  if (x.minCoeff() < lb - kMembershipTolerance) return false;
  return std::abs(x.sum() - 1.0) <= kMembershipTolerance * simplex.dim;
}

// ---------------------------------------------------------------------------
// Sampling

inline Point sample_unit_sphere(int d, Rng& rng) {
  if (d <= 0) throw ConfigError("sample_unit_sphere: invalid dimension " + std::to_string(d));
  std::normal_distribution<double> normal(0.0, 1.0);
  Point v(d);
  double norm = 0.0;
  do {
    for (int i = 0; i < d; ++i) v[i] = normal(rng);
    norm = v.norm();
  } while (!(norm > 0.0));
  return v / norm;
}

inline Point sample_unit_ball(int d, Rng& rng) {
  if (d <= 0) throw ConfigError("sample_unit_ball: invalid dimension " + std::to_string(d));
  Point v = sample_unit_sphere(d, rng);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  return v * std::pow(uniform(rng), 1.0 / d);
}

// Uniform unit direction in the set's tangent space. For the simplex this is
// the sphere of the sum-zero hyperplane.
inline Point sample_direction(const FeasibleSet& set, Rng& rng) {
  const int d = dimension(set);
  if (std::holds_alternative<BallSet>(set)) return sample_unit_sphere(d, rng);
  std::normal_distribution<double> normal(0.0, 1.0);
  Point v(d);
  double norm = 0.0;
  do {
    for (int i = 0; i < d; ++i) v[i] = normal(rng);
    v.array() -= v.mean();
    norm = v.norm();
  } while (!(norm > 0.0));
  return v / norm;
}

// ---------------------------------------------------------------------------
// Euclidean projection

namespace detail {

// Projection onto {u >= 0, sum u = mass} by the sort-and-threshold rule.
inline Point project_scaled_simplex(const Point& v, double mass) {
  const Eigen::Index d = v.size();
  std::vector<double> sorted(v.data(), v.data() + d);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (Eigen::Index k = 0; k < d; ++k) {
    cumulative += sorted[k];
    const double candidate = (cumulative - mass) / static_cast<double>(k + 1);
    if (sorted[k] - candidate > 0.0) theta = candidate;
  }
  return (v.array() - theta).max(0.0).matrix();
}

inline Point clamp_into_ball(Point x, double radius) {
  double norm = x.norm();
  while (norm > radius) {
    x *= radius / norm;
    const double next = x.norm();
    if (next > radius) x *= std::nextafter(1.0, 0.0);
    norm = x.norm();
  }
  return x;
}

}  // namespace detail

inline Point euclidean_project(const FeasibleSet& set, const Point& x, bool use_shrunken = false) {
  require_dimension(x, dimension(set), "euclidean_project");
  if (const auto* ball = std::get_if<BallSet>(&set)) {
    const double radius = use_shrunken ? ball->shrunken_radius() : ball->radius;
    return detail::clamp_into_ball(x, radius);
  }
  const auto& simplex = std::get<SimplexSet>(set);
  const double lb = simplex.lower_bound(use_shrunken);
  const double mass = 1.0 - lb * simplex.dim;
  Point u = detail::project_scaled_simplex(x.array() - lb, mass);
  return (u.array() + lb).matrix();
}

// ---------------------------------------------------------------------------
// Projection in the norm induced by a positive definite matrix

struct ProjectionOptions {
  // Objective tolerance, relative to the squared A-distance from y to its
  // Euclidean projection.
  double tolerance = 1e-8;
  int max_iterations = 10000;
};

class ProjectionError : public NumericError {
 public:
  ProjectionError(const std::string& what, Point best, double residual)
      : NumericError(what), best_(std::move(best)), residual_(residual) {}
  const Point& best_iterate() const { return best_; }
  double residual() const { return residual_; }

 private:
  Point best_;
  double residual_;
};

inline double squared_a_norm(const Matrix& a, const Point& v) { return v.dot(a * v); }

namespace detail {

// argmin_{|x| <= radius} (x - y)^T A (x - y) for |y| > radius. The minimiser is
// x(mu) = (A + mu I)^-1 A y with mu >= 0 chosen so that |x(mu)| = radius; mu is
// found by Newton's method on 1/|x(mu)| - 1/radius, safeguarded by bisection.
inline Point project_ball_a_norm(const Matrix& a, const Point& y, double radius,
                                 const ProjectionOptions& opts) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
  if (eig.info() != Eigen::Success) throw NumericError("generalized_project: eigensolver failed");
  const Point lambda = eig.eigenvalues();
  if (!(lambda.minCoeff() > 0.0)) {
    throw NumericError("generalized_project: matrix is not positive definite (min eigenvalue " +
                       std::to_string(lambda.minCoeff()) + ")");
  }
  const Point c = (lambda.array() * (eig.eigenvectors().transpose() * y).array()).matrix();

  double lo = 0.0;
  double hi = lambda.maxCoeff() * y.norm() / radius;  // |x(hi)| <= radius
  double mu = 0.0;
  double residual = std::numeric_limits<double>::infinity();
  int iter = 0;
  for (; iter < opts.max_iterations; ++iter) {
    const Eigen::ArrayXd denom = lambda.array() + mu;
    const double n = (c.array() / denom).matrix().norm();
    residual = std::abs(n - radius) / radius;
    if (residual <= 4 * std::numeric_limits<double>::epsilon()) break;
    if (n > radius) lo = mu; else hi = mu;
    if (hi - lo <= std::numeric_limits<double>::epsilon() * std::max(1.0, hi)) break;
    // phi(mu) = 1/n - 1/radius;  phi'(mu) = sum c_i^2 / (lambda_i + mu)^3 / n^3
    const double dn = (c.array().square() / denom.cube()).sum();
    const double phi = 1.0 / n - 1.0 / radius;
    const double dphi = dn / (n * n * n);
    double next = mu - phi / dphi;
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    mu = next;
  }
  if (iter == opts.max_iterations) {
    Point best = eig.eigenvectors() * (c.array() / (lambda.array() + mu)).matrix();
    throw ProjectionError("generalized_project: secular equation did not converge",
                          clamp_into_ball(best, radius), residual);
  }
  Point x = eig.eigenvectors() * (c.array() / (lambda.array() + mu)).matrix();
  return clamp_into_ball(x, radius);
}

// Accelerated projected gradient (FISTA with backtracking and gradient-based
// restart) for the A-norm projection onto {x >= lb, sum x = 1}. Convergence is
// certified by the Frank-Wolfe gap, which upper-bounds the objective error.
inline Point project_simplex_a_norm(const Matrix& a, const Point& y, double lb,
                                    const ProjectionOptions& opts) {
  const int d = static_cast<int>(y.size());
  const double mass = 1.0 - lb * d;
  auto project = [&](const Point& v) {
    Point u = project_scaled_simplex(v.array() - lb, mass);
    return Point((u.array() + lb).matrix());
  };
  auto fw_gap = [&](const Point& x, const Point& grad) {
    // min over the set of grad^T s is attained at the vertex of the smallest entry
    const double best = lb * grad.sum() + mass * grad.minCoeff();
    return grad.dot(x) - best;
  };

  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    throw NumericError("generalized_project: matrix is not positive definite");
  }

  Point x = project(y);
  Point gx = a * (x - y);  // gradient of 1/2 |x - y|_A^2
  const double scale = std::max(0.5 * (x - y).dot(gx), std::numeric_limits<double>::min());
  // Below roughly eps * |A| the gap is rounding noise in A (x - y), so a purely
  // relative target is unreachable when y lies very close to the set.
  const double noise = 4.0 * std::numeric_limits<double>::epsilon() *
                       a.cwiseAbs().rowwise().sum().maxCoeff() * (1.0 + y.cwiseAbs().maxCoeff());
  const double target = std::max(opts.tolerance * scale, noise);

  double lipschitz = std::max(a.diagonal().maxCoeff(), std::numeric_limits<double>::min());
  Point x_prev = x;
  Point g_prev = gx;
  double momentum_t = 1.0;
  double gap = fw_gap(x, gx);
  Point best = x;
  double best_gap = gap;

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    if (gap <= target) return x;
    const double next_t = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum_t * momentum_t));
    const double w = (momentum_t - 1.0) / next_t;
    const Point z = x + w * (x - x_prev);
    const Point gz = gx + w * (gx - g_prev);

    Point x_new;
    Point a_step;
    for (;;) {
      x_new = project(z - gz / lipschitz);
      const Point step = x_new - z;
      a_step = a * step;
      const double curvature = step.dot(a_step);
      if (curvature <= lipschitz * step.squaredNorm() * (1.0 + 1e-12) || step.squaredNorm() == 0.0) break;
      lipschitz *= 2.0;
    }
    Point g_new = gz + a_step;
    if ((iter + 1) % 50 == 0) g_new = a * (x_new - y);

    if (gz.dot(x_new - x) > 0.0) {
      momentum_t = 1.0;  // restart
    } else {
      momentum_t = next_t;
    }
    x_prev = std::move(x);
    g_prev = std::move(gx);
    x = std::move(x_new);
    gx = std::move(g_new);
    gap = fw_gap(x, gx);
    if (gap < best_gap) {
      best_gap = gap;
      best = x;
    }
  }
  if (gap <= target) return x;
  throw ProjectionError("generalized_project: projected gradient did not converge", best,
                        best_gap / scale);
}

}  // namespace detail

// argmin over x in (1 - gamma)P of |y - x|_A. Returns y unchanged when it is
// already feasible.
inline Point generalized_project(const FeasibleSet& set, const Matrix& a, const Point& y,
                                 const ProjectionOptions& opts = {}) {
  const int d = dimension(set);
  require_dimension(y, d, "generalized_project");
  if (a.rows() != d || a.cols() != d) throw ConfigError("generalized_project: matrix size mismatch");
  if (!y.allFinite()) throw NumericError("generalized_project: non-finite point");
  if (const auto* ball = std::get_if<BallSet>(&set)) {
    const double radius = ball->shrunken_radius();
    if (y.norm() <= radius) return y;
    return detail::project_ball_a_norm(a, y, radius, opts);
  }
  const auto& simplex = std::get<SimplexSet>(set);
  const double lb = simplex.lower_bound(true);
  if (y.minCoeff() >= lb && std::abs(y.sum() - 1.0) <= kMembershipTolerance * d) return y;
  return detail::project_simplex_a_norm(a, y, lb, opts);
}

inline Point generalized_project(const FeasibleSet& set, const CurvatureState& curvature,
                                 const Point& y, const ProjectionOptions& opts = {}) {
  return generalized_project(set, curvature.matrix(), y, opts);
}

}  // namespace onseg
