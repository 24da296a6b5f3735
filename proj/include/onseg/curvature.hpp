#pragma once

#include <string>

#include "onseg/core.hpp"

namespace onseg {

// Positive definite matrix A_t of the Newton-type learners together with its
// inverse, kept in sync by Sherman-Morrison rank-one updates.
class CurvatureState {
 public:
  // Number of rank-one updates between exact re-inversions of A.
  static constexpr long kRefreshInterval = 256;

  CurvatureState() = default;

  // A_0 = epsilon * I
  CurvatureState(int dim, double epsilon) : epsilon_(epsilon) {
    if (dim <= 0) throw ConfigError("CurvatureState: dimension must be positive");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
      throw ConfigError("CurvatureState: epsilon must be positive and finite, got " +
                        std::to_string(epsilon));
    }
    a_ = Matrix::Identity(dim, dim) * epsilon;
    a_inv_ = Matrix::Identity(dim, dim) / epsilon;
  }

  int dim() const { return static_cast<int>(a_.rows()); }
  double epsilon() const { return epsilon_; }
  long update_count() const { return update_count_; }
  const Matrix& matrix() const { return a_; }
  const Matrix& inverse() const { return a_inv_; }

  // A <- A + g g^T,  A^-1 <- A^-1 - (A^-1 g)(A^-1 g)^T / (1 + g^T A^-1 g).
  // Every kRefreshInterval updates the inverse is recomputed from A by a
  // Cholesky solve to stop floating-point drift from accumulating.
  void rank_one_update(const Point& g) {
    require_dimension(g, dim(), "rank_one_update");
    if (!g.allFinite()) throw NumericError("rank_one_update: non-finite gradient");
    const Point u = a_inv_ * g;
    const double denom = 1.0 + g.dot(u);
    if (!(denom > 0.0) || !std::isfinite(denom)) {
      throw NumericError("rank_one_update: Sherman-Morrison denominator " + std::to_string(denom) +
                         " is not positive; curvature state is corrupted");
    }
    a_.noalias() += g * g.transpose();
    const Point w = u / std::sqrt(denom);
    a_inv_.noalias() -= w * w.transpose();
    ++update_count_;
    if (update_count_ % kRefreshInterval == 0) refresh();
  }

  // Exact re-inversion of A.
  void refresh() {
    Eigen::LLT<Matrix> llt(a_);
    if (llt.info() != Eigen::Success) {
      throw NumericError("CurvatureState::refresh: matrix is not positive definite");
    }
    a_inv_ = llt.solve(Matrix::Identity(dim(), dim()));
    a_inv_ = 0.5 * (a_inv_ + a_inv_.transpose()).eval();
  }

 private:
  Matrix a_;
  Matrix a_inv_;
  double epsilon_ = 1.0;
  long update_count_ = 0;
};

// Functional form of CurvatureState::rank_one_update.
inline CurvatureState smw_rank_one_update(CurvatureState state, const Point& g) {
  state.rank_one_update(g);
  return state;
}

}  // namespace onseg
