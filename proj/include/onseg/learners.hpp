#pragma once

#include <concepts>
#include <iostream>
#include <optional>
#include <string>
#include <variant>

#include "onseg/core.hpp"
#include "onseg/curvature.hpp"
#include "onseg/estimator.hpp"
#include "onseg/geometry.hpp"
#include "onseg/schedule.hpp"

namespace onseg {

// Learners that only observe f_t(x_t).
template <typename L>
concept BanditLearner = requires(L l, Rng& rng, double fval) {
  { l.predict(rng) } -> std::convertible_to<const Point&>;
  l.update(fval);
};

// Learners that observe the gradient of f_t at the played point.
template <typename L>
concept FullInformationLearner = requires(L l, const Point& grad) {
  { l.predict() } -> std::convertible_to<const Point&>;
  l.update(grad);
};

namespace detail {

// Pending (v_t, x_t) between predict and update of a bandit learner.
struct PendingQuery {
  Point direction;
  Point query;
};

// Shared predict/feedback plumbing of the two bandit learners.
class BanditBase {
 public:
  BanditBase(FeasibleSet set, Schedule schedule)
      : set_(with_shrink(std::move(set), schedule.gamma)), schedule_(std::move(schedule)) {
    if (schedule_.d != tangent_dimension(set_)) {
      throw ConfigError("bandit learner: schedule dimension " + std::to_string(schedule_.d) +
                        " does not match the feasible set (" +
                        std::to_string(tangent_dimension(set_)) + ")");
    }
    if (schedule_.delta > schedule_.gamma * inner_radius(set_) * (1.0 + 1e-12)) {
      throw ConfigError("bandit learner: delta must not exceed gamma * r");
    }
    y_ = onseg::center(set_);
  }

  // Draws v_t and plays x_t = y_t + delta v_t.
  const Point& predict(Rng& rng) {
    if (pending_) throw ProtocolError("predict called twice without an update");
    return predict_with_direction(sample_direction(set_, rng));
  }

  const Point& predict_with_direction(const Point& v) {
    if (pending_) throw ProtocolError("predict called twice without an update");
    require_dimension(v, dimension(set_), "predict");
    pending_ = PendingQuery{v, perturb(y_, schedule_.delta, v)};
    return pending_->query;
  }

  const Point& center() const { return y_; }
  const FeasibleSet& set() const { return set_; }
  const Schedule& schedule() const { return schedule_; }
  long round() const { return t_; }
  bool has_pending() const { return pending_.has_value(); }
  long bound_violations() const { return bound_violations_; }
  const GradientEstimate& last_estimate() const { return last_estimate_; }

 protected:
  // Turns the feedback into g_t and clears the pending query.
  const GradientEstimate& consume_feedback(double fval) {
    if (!pending_) throw ProtocolError("update called without a pending prediction");
    if (std::abs(fval) > schedule_.F) {
      if (bound_violations_ == 0) {
        std::cerr << "warning: |f_t(x_t)| = " << std::abs(fval) << " exceeds F = " << schedule_.F
                  << "; schedule is not rescaled\n";
      }
      ++bound_violations_;
    }
    last_estimate_ = one_point_gradient(fval, pending_->direction, schedule_.d, schedule_.delta,
                                        pending_->query);
    pending_.reset();
    ++t_;
    return last_estimate_;
  }

  FeasibleSet set_;
  Schedule schedule_;
  Point y_;
  long t_ = 0;
  std::optional<PendingQuery> pending_;
  GradientEstimate last_estimate_;
  long bound_violations_ = 0;
};

}  // namespace detail

// Online Newton step on one-point gradient estimates.
class Onseg : public detail::BanditBase {
 public:
  Onseg(FeasibleSet set, Schedule schedule)
      : BanditBase(std::move(set), std::move(schedule)),
        curvature_(dimension(set_), schedule_.epsilon) {}

  // g_t = (d/delta) f v;  A_t = A_{t-1} + g g^T;
  // y_{t+1} = argmin_{(1-gamma)P} |y_t - beta^-1 A_t^-1 g_t - x|_{A_t}
  void update(double fval) {
    const GradientEstimate& est = consume_feedback(fval);
    curvature_.rank_one_update(est.g);
    const Point z = y_ - (curvature_.inverse() * est.g) / schedule_.beta;
    y_ = generalized_project(set_, curvature_, z, projection_options_);
  }

  const CurvatureState& curvature() const { return curvature_; }
  void set_projection_options(const ProjectionOptions& opts) { projection_options_ = opts; }

 private:
  CurvatureState curvature_;
  ProjectionOptions projection_options_;
};

// Bandit gradient descent with step nu_t = D / (F sqrt(t)).
class Ogdeg : public detail::BanditBase {
 public:
  using BanditBase::BanditBase;

  static double step_size(double D, double F, long t) {
    return D / (F * std::sqrt(static_cast<double>(t)));
  }

  void update(double fval) {
    const GradientEstimate& est = consume_feedback(fval);
    const double nu = step_size(schedule_.D, schedule_.F, t_);
    y_ = euclidean_project(set_, y_ - nu * est.g, /*use_shrunken=*/true);
  }
};

struct OnsParameters {
  double beta = 0.0;
  double epsilon = 0.0;
};

// beta = 1/2 min(1/(4 G D), alpha),  epsilon = 1/(beta^2 D^2)
inline OnsParameters ons_parameters(double G, double D, double alpha) {
  if (!(G > 0.0) || !(D > 0.0) || !(alpha > 0.0)) {
    throw ConfigError("ons_parameters: G, D and alpha must be positive");
  }
  OnsParameters p;
  p.beta = 0.5 * std::min(1.0 / (4.0 * G * D), alpha);
  p.epsilon = 1.0 / (p.beta * p.beta * D * D);
  return p;
}

inline OnsParameters ons_parameters_from_beta(double beta, double D) {
  if (!(beta > 0.0) || !(D > 0.0)) throw ConfigError("ons_parameters: beta and D must be positive");
  return {beta, 1.0 / (beta * beta * D * D)};
}

namespace detail {

class FullInformationBase {
 public:
  explicit FullInformationBase(FeasibleSet set)
      : set_(with_shrink(std::move(set), 0.0)), y_(onseg::center(set_)) {}

  const Point& predict() {
    if (pending_) throw ProtocolError("predict called twice without an update");
    pending_ = true;
    return y_;
  }

  const Point& center() const { return y_; }
  const FeasibleSet& set() const { return set_; }
  long round() const { return t_; }
  bool has_pending() const { return pending_; }

 protected:
  void consume_feedback(const Point& grad) {
    if (!pending_) throw ProtocolError("update called without a pending prediction");
    require_dimension(grad, dimension(set_), "update");
    if (!grad.allFinite()) throw NumericError("update: non-finite gradient");
    pending_ = false;
    ++t_;
  }

  FeasibleSet set_;
  Point y_;
  long t_ = 0;
  bool pending_ = false;
};

}  // namespace detail

// Full-information online Newton step.
class Ons : public detail::FullInformationBase {
 public:
  Ons(FeasibleSet set, OnsParameters params)
      : FullInformationBase(std::move(set)), params_(params),
        curvature_(dimension(set_), params.epsilon) {
    if (!(params.beta > 0.0)) throw ConfigError("Ons: beta must be positive");
  }

  void update(const Point& grad) {
    consume_feedback(grad);
    curvature_.rank_one_update(grad);
    const Point z = y_ - (curvature_.inverse() * grad) / params_.beta;
    y_ = generalized_project(set_, curvature_, z);
  }

  const CurvatureState& curvature() const { return curvature_; }
  const OnsParameters& parameters() const { return params_; }

 private:
  OnsParameters params_;
  CurvatureState curvature_;
};

// Full-information projected gradient descent with eta_t = D / (G sqrt(t)).
class Ogd : public detail::FullInformationBase {
 public:
  Ogd(FeasibleSet set, double G)
      : FullInformationBase(std::move(set)), G_(G), D_(onseg::diameter(set_)) {
    if (!(G > 0.0) || !std::isfinite(G)) throw ConfigError("Ogd: G must be positive");
  }

  static double step_size(double D, double G, long t) {
    return D / (G * std::sqrt(static_cast<double>(t)));
  }

  void update(const Point& grad) {
    consume_feedback(grad);
    y_ = euclidean_project(set_, y_ - step_size(D_, G_, t_) * grad);
  }

  double gradient_bound() const { return G_; }

 private:
  double G_;
  double D_;
};

static_assert(BanditLearner<Onseg>);
static_assert(BanditLearner<Ogdeg>);
static_assert(FullInformationLearner<Ons>);
static_assert(FullInformationLearner<Ogd>);

using AnyLearner = std::variant<Onseg, Ogdeg, Ons, Ogd>;

}  // namespace onseg
