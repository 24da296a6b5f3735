#pragma once

// Brute-force references for tests. Nothing here shares numerical code with
// the library proper: matrices are plain nested vectors and every routine is
// written out by hand.

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace onseg::oracles {

using Vec = std::vector<double>;
using Mat = std::vector<std::vector<double>>;

class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline Mat identity(std::size_t n) {
  Mat m(n, Vec(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) m[i][i] = 1.0;
  return m;
}

inline double norm_one(const Mat& a) {
  double best = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) col += std::abs(a[i][j]);
    best = std::max(best, col);
  }
  return best;
}

// Gauss-Jordan elimination with partial pivoting. Rejects matrices whose
// 1-norm condition number exceeds 1e12.
inline Mat direct_inverse(const Mat& a) {
  const std::size_t n = a.size();
  for (const auto& row : a) {
    if (row.size() != n) throw OracleError("direct_inverse: matrix is not square");
  }
  Mat work = a;
  Mat inv = identity(n);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t i = col + 1; i < n; ++i) {
      if (std::abs(work[i][col]) > std::abs(work[pivot][col])) pivot = i;
    }
    if (work[pivot][col] == 0.0) throw OracleError("direct_inverse: matrix is singular");
    std::swap(work[pivot], work[col]);
    std::swap(inv[pivot], inv[col]);
    const double p = work[col][col];
    for (std::size_t j = 0; j < n; ++j) {
      work[col][j] /= p;
      inv[col][j] /= p;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (i == col) continue;
      const double factor = work[i][col];
      if (factor == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        work[i][j] -= factor * work[col][j];
        inv[i][j] -= factor * inv[col][j];
      }
    }
  }
  const double condition = norm_one(a) * norm_one(inv);
  if (!(condition < 1e12)) {
    throw OracleError("direct_inverse: ill-conditioned matrix (condition estimate " +
                      std::to_string(condition) + ")");
  }
  return inv;
}

inline Mat multiply(const Mat& a, const Mat& b) {
  const std::size_t n = a.size();
  const std::size_t m = b.front().size();
  Mat c(n, Vec(m, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < b.size(); ++k) {
      for (std::size_t j = 0; j < m; ++j) c[i][j] += a[i][k] * b[k][j];
    }
  }
  return c;
}

// max |A B - I|
inline double identity_residual(const Mat& a, const Mat& b) {
  const Mat c = multiply(a, b);
  double worst = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t j = 0; j < c.size(); ++j) {
      worst = std::max(worst, std::abs(c[i][j] - (i == j ? 1.0 : 0.0)));
    }
  }
  return worst;
}

// f(x) = x^T Q x + b^T x + c
struct QuadraticSpec {
  Mat Q;
  Vec b;
  double c = 0.0;

  double value(const Vec& x) const {
    double v = c;
    for (std::size_t i = 0; i < x.size(); ++i) {
      v += b[i] * x[i];
      for (std::size_t j = 0; j < x.size(); ++j) v += x[i] * Q[i][j] * x[j];
    }
    return v;
  }
};

struct SmoothedQuadratic {
  double value = 0.0;
  Vec grad;
};

// Ball smoothing of a quadratic: E[u] = 0 and E[u u^T] = I/(d+2) over the unit
// ball give f(x) + delta^2 tr(Q)/(d+2), with unchanged gradient 2Qx + b.
inline SmoothedQuadratic quadratic_smoothed(const QuadraticSpec& spec, const Vec& x, double delta) {
  const std::size_t d = x.size();
  double trace = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      if (std::abs(spec.Q[i][j] - spec.Q[j][i]) > 1e-12) {
        throw OracleError("quadratic_smoothed: Q is not symmetric");
      }
    }
    trace += spec.Q[i][i];
  }
  SmoothedQuadratic out;
  out.value = spec.value(x) + delta * delta * trace / static_cast<double>(d + 2);
  out.grad.assign(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    out.grad[i] = spec.b[i];
    for (std::size_t j = 0; j < d; ++j) out.grad[i] += 2.0 * spec.Q[i][j] * x[j];
  }
  return out;
}

// Oracle-side description of a feasible set, deliberately separate from the
// library's set types.
struct OracleSet {
  enum class Kind { Ball, Simplex } kind = Kind::Ball;
  double radius = 1.0;       // ball radius after shrinking
  double lower_bound = 0.0;  // simplex coordinate floor after shrinking
};

inline double a_distance_squared(const Mat& a, const Vec& y, const Vec& x) {
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    for (std::size_t j = 0; j < y.size(); ++j) total += (y[i] - x[i]) * a[i][j] * (y[j] - x[j]);
  }
  return total;
}

// Exhaustive minimiser of |y - x|_A over a feasible grid. Ball grids span
// [-radius, radius]^d with `resolution` points per axis; simplex grids vary the
// first d-1 coordinates and fill in the last.
inline Vec grid_project_oracle(const OracleSet& set, const Mat& a, const Vec& y, int resolution) {
  const std::size_t d = y.size();
  if (d == 0 || d > 3) throw OracleError("grid_project_oracle: only 1 <= d <= 3 is supported");
  if (resolution < 2) throw OracleError("grid_project_oracle: resolution must be at least 2");
  Vec best;
  double best_value = std::numeric_limits<double>::infinity();
  auto consider = [&](const Vec& x) {
    const double v = a_distance_squared(a, y, x);
    if (v < best_value) {
      best_value = v;
      best = x;
    }
  };
  const std::size_t free_axes = set.kind == OracleSet::Kind::Ball ? d : d - 1;
  const double lo = set.kind == OracleSet::Kind::Ball ? -set.radius : set.lower_bound;
  const double hi = set.kind == OracleSet::Kind::Ball
                        ? set.radius
                        : 1.0 - set.lower_bound * static_cast<double>(d - 1);
  std::array<int, 3> idx{0, 0, 0};
  long total = 1;
  for (std::size_t k = 0; k < free_axes; ++k) total *= resolution;
  for (long flat = 0; flat < total; ++flat) {
    long rest = flat;
    for (std::size_t k = 0; k < free_axes; ++k) {
      idx[k] = static_cast<int>(rest % resolution);
      rest /= resolution;
    }
    Vec x(d, 0.0);
    for (std::size_t k = 0; k < free_axes; ++k) {
      x[k] = lo + (hi - lo) * idx[k] / static_cast<double>(resolution - 1);
    }
    if (set.kind == OracleSet::Kind::Ball) {
      double sq = 0.0;
      for (double c : x) sq += c * c;
      if (std::sqrt(sq) > set.radius) continue;
    } else {
      double partial = 0.0;
      for (std::size_t k = 0; k < free_axes; ++k) partial += x[k];
      x[d - 1] = 1.0 - partial;
      if (x[d - 1] < set.lower_bound) continue;
    }
    consider(x);
  }
  if (best.empty()) throw OracleError("grid_project_oracle: grid has no feasible point");
  return best;
}

// Parameters of a single ONSEG step.
struct StepParameters {
  double delta = 0.0;
  double beta = 0.0;
  double epsilon = 0.0;
  OracleSet set;  // the shrunken projection target
};

// One ONSEG step for d <= 2 in scalar arithmetic: g = (d/delta) f v,
// A = epsilon I + g g^T with its closed-form 2x2 inverse, z = y - A^-1 g / beta,
// then the A-norm projection (closed-form eigen pair plus bisection on the
// multiplier for the disc; a clamped scalar quadratic for the 2-simplex).
inline Vec single_step_chain(const StepParameters& p, const Vec& y, const Vec& v, double fval) {
  const std::size_t d = y.size();
  if (d == 0 || d > 2) throw OracleError("single_step_chain: only d <= 2 is supported");
  const bool simplex = p.set.kind == OracleSet::Kind::Simplex;
  // the simplex estimator works in the affine hull, one dimension lower
  const double scale = (simplex ? static_cast<double>(d - 1) : static_cast<double>(d)) / p.delta * fval;
  double g0 = scale * v[0];
  double g1 = d == 2 ? scale * v[1] : 0.0;

  const double a00 = p.epsilon + g0 * g0;
  const double a01 = g0 * g1;
  const double a11 = d == 2 ? p.epsilon + g1 * g1 : 1.0;
  const double det = a00 * a11 - a01 * a01;
  double z0 = 0.0;
  double z1 = 0.0;
  if (d == 1) {
    z0 = y[0] - g0 / (a00 * p.beta);
  } else {
    z0 = y[0] - (a11 * g0 - a01 * g1) / det / p.beta;
    z1 = y[1] - (-a01 * g0 + a00 * g1) / det / p.beta;
  }

  if (simplex) {
    if (d != 2) throw OracleError("single_step_chain: simplex needs d = 2");
    // x = (s, 1 - s): minimise (z - x)^T A (z - x) over s in [lb, 1 - lb].
    // With e = (1, -1) and w = z - (0, 1): objective (w - s e)^T A (w - s e).
    const double w0 = z0;
    const double w1 = z1 - 1.0;
    const double ae0 = a00 - a01;
    const double ae1 = a01 - a11;
    const double eae = ae0 - ae1;
    const double wae = w0 * ae0 + w1 * ae1;
    double s = wae / eae;
    s = std::min(std::max(s, p.set.lower_bound), 1.0 - p.set.lower_bound);
    return {s, 1.0 - s};
  }

  const double radius = p.set.radius;
  if (d == 1) {
    const double x0 = std::min(std::max(z0, -radius), radius);
    return {x0};
  }
  if (std::sqrt(z0 * z0 + z1 * z1) <= radius) return {z0, z1};

  // eigen pair of the symmetric 2x2 A
  const double mean = 0.5 * (a00 + a11);
  const double half_diff = 0.5 * (a00 - a11);
  const double rad = std::sqrt(half_diff * half_diff + a01 * a01);
  const double l1 = mean + rad;
  const double l2 = mean - rad;
  double c = 1.0;
  double s = 0.0;
  if (rad > 0.0) {
    const double angle = 0.5 * std::atan2(2.0 * a01, a00 - a11);
    c = std::cos(angle);
    s = std::sin(angle);
  }
  // coordinates of z in the eigenbasis (first axis belongs to l1)
  const double w1 = c * z0 + s * z1;
  const double w2 = -s * z0 + c * z1;
  auto point = [&](double mu) {
    const double p1 = l1 * w1 / (l1 + mu);
    const double p2 = l2 * w2 / (l2 + mu);
    return std::array<double, 2>{c * p1 - s * p2, s * p1 + c * p2};
  };
  auto norm_at = [&](double mu) {
    const auto q = point(mu);
    return std::sqrt(q[0] * q[0] + q[1] * q[1]);
  };
  double lo = 0.0;
  double hi = 1.0;
  while (norm_at(hi) > radius) hi *= 2.0;
  for (int it = 0; it < 2000 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (norm_at(mid) > radius ? lo : hi) = mid;
  }
  const auto q = point(hi);
  return {q[0], q[1]};
}

}  // namespace onseg::oracles
