#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "onseg/core.hpp"
#include "onseg/dataset.hpp"
#include "onseg/geometry.hpp"
#include "onseg/learners.hpp"
#include "onseg/losses.hpp"
#include "onseg/schedule.hpp"

namespace onseg {

enum class Task { Regression, Classification, Portfolio, SyntheticQuadratic };
enum class Algo { Onseg, Ogdeg, Ons, Ogd };
enum class Geometry { Auto, Ball, Simplex };
enum class ScheduleKind { Theorem1, Theorem2 };

inline std::string_view to_string(Task task) {
  switch (task) {
    case Task::Regression: return "regression";
    case Task::Classification: return "classification";
    case Task::Portfolio: return "portfolio";
    case Task::SyntheticQuadratic: return "synthetic-quadratic";
  }
  return "unknown";
}

inline std::string_view to_string(Algo algo) {
  switch (algo) {
    case Algo::Onseg: return "onseg";
    case Algo::Ogdeg: return "ogdeg";
    case Algo::Ons: return "ons";
    case Algo::Ogd: return "ogd";
  }
  return "unknown";
}

inline Task parse_task(std::string_view s) {
  if (s == "regression") return Task::Regression;
  if (s == "classification") return Task::Classification;
  if (s == "portfolio") return Task::Portfolio;
  if (s == "synthetic-quadratic") return Task::SyntheticQuadratic;
  throw ConfigError("unknown task '" + std::string(s) + "'");
}

inline Algo parse_algo(std::string_view s) {
  if (s == "onseg") return Algo::Onseg;
  if (s == "ogdeg") return Algo::Ogdeg;
  if (s == "ons") return Algo::Ons;
  if (s == "ogd") return Algo::Ogd;
  throw ConfigError("unknown algorithm '" + std::string(s) + "'");
}

inline Geometry parse_geometry(std::string_view s) {
  if (s == "auto") return Geometry::Auto;
  if (s == "ball") return Geometry::Ball;
  if (s == "simplex") return Geometry::Simplex;
  throw ConfigError("unknown geometry '" + std::string(s) + "'");
}

inline ScheduleKind parse_schedule_kind(std::string_view s) {
  if (s == "theorem1" || s == "default") return ScheduleKind::Theorem1;
  if (s == "theorem2" || s == "lipschitz") return ScheduleKind::Theorem2;
  throw ConfigError("unknown schedule '" + std::string(s) + "'");
}

inline bool is_bandit(Algo algo) { return algo == Algo::Onseg || algo == Algo::Ogdeg; }

inline LossFamily loss_family(Task task) {
  switch (task) {
    case Task::Regression: return LossFamily::Squared;
    case Task::Classification: return LossFamily::Logistic;
    case Task::Portfolio: return LossFamily::Return;
    case Task::SyntheticQuadratic: return LossFamily::Quadratic;
  }
  throw ConfigError("unknown task");
}

// Either a fixed number of rounds or a multiple of the dataset size ("150n").
struct Horizon {
  long rounds = 0;
  long per_sample = 0;

  long resolve(std::size_t n) const {
    const long value = per_sample > 0 ? per_sample * static_cast<long>(n) : rounds;
    if (value <= 0) throw ConfigError("horizon must resolve to a positive number of rounds");
    return value;
  }
};

inline Horizon parse_horizon(std::string_view text) {
  Horizon h;
  std::string_view digits = text;
  const bool multiple = !text.empty() && text.back() == 'n';
  if (multiple) digits.remove_suffix(1);
  long value = 0;
  if (multiple && digits.empty()) {
    value = 1;
  } else {
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (ec != std::errc() || ptr != digits.data() + digits.size() || value <= 0) {
      throw ConfigError("invalid horizon '" + std::string(text) + "' (expected N or Kn)");
    }
  }
  (multiple ? h.per_sample : h.rounds) = value;
  return h;
}

struct ExperimentConfig {
  Task task = Task::Regression;
  Algo algo = Algo::Onseg;
  std::string data_path;
  Geometry geometry = Geometry::Auto;
  double D = 10.0;  // ball diameter
  double r = 1.0;   // ball inner radius
  ScheduleKind schedule = ScheduleKind::Theorem1;
  ScheduleOverrides overrides;
  double sigma = 1.0;
  std::optional<double> F;
  std::optional<double> G;
  std::optional<double> L;
  Horizon horizon{0, 150};
  std::uint64_t seed = 0;
  int trials = 1;
  std::string out;
  bool shuffle = false;
  bool compute_regret = true;
  bool keep_queries = false;
  std::vector<double> center;  // synthetic-quadratic minimiser
};

struct IterationRecord {
  long t = 0;
  double loss = 0.0;         // f_t(x_t) as fed to the learner
  double observation = 0.0;  // per-round metric input (loss, 0/1 error, or return)
  double metric = 0.0;       // running metric
  std::optional<double> regret;
};

struct TrialResult {
  std::uint64_t seed = 0;
  long horizon = 0;
  std::vector<IterationRecord> records;
  std::vector<Point> queries;  // x_t, filled when keep_queries is set
  std::vector<std::size_t> order;  // sample index per round
  std::optional<Point> optimum;
  double optimum_value = 0.0;
  std::optional<Schedule> schedule;
};

// ---------------------------------------------------------------------------
// Metrics

// Prefix mean of the per-round observation. Regression and synthetic tasks
// observe the loss, classification a 0/1 error, portfolio the raw return.
inline void running_metrics(std::span<IterationRecord> records) {
  double sum = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    sum += records[i].observation;
    records[i].metric = sum / static_cast<double>(i + 1);
  }
}

inline double observation_for(Task task, const Point& x, const LossSample& s, double loss) {
  switch (task) {
    case Task::Classification: {
      const double predicted = x.dot(s.z) >= 0.0 ? 1.0 : -1.0;
      return predicted != s.y ? 1.0 : 0.0;
    }
    case Task::Portfolio: return -loss;
    default: return loss;
  }
}

// Percent rendering used for portfolio reports; all stored values are fractions.
inline std::string format_percent(double fraction) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * fraction);
  return buf;
}

// ---------------------------------------------------------------------------
// Geometry and parameter resolution

inline FeasibleSet make_feasible_set(const ExperimentConfig& cfg, int d) {
  Geometry g = cfg.geometry;
  if (g == Geometry::Auto) g = cfg.task == Task::Portfolio ? Geometry::Simplex : Geometry::Ball;
  if (g == Geometry::Simplex) return SimplexSet(d);
  return BallSet(d, cfg.D / 2.0, cfg.r);
}

inline LossBounds resolve_bounds(const ExperimentConfig& cfg, const Dataset& data,
                                 const FeasibleSet& set) {
  LossBounds b = estimate_bounds(loss_family(cfg.task), data.samples, set);
  if (cfg.F) b.F = *cfg.F;
  if (cfg.G) b.G = *cfg.G;
  if (cfg.L) b.L = *cfg.L;
  if (!(b.F > 0.0) || !(b.G > 0.0) || !(b.L > 0.0)) throw ConfigError("F, G and L must be positive");
  return b;
}

inline Schedule make_schedule(const ExperimentConfig& cfg, const FeasibleSet& set,
                              const LossBounds& bounds, long T) {
  const int d = tangent_dimension(set);
  Schedule s = cfg.schedule == ScheduleKind::Theorem2
                   ? schedule_theorem2(d, bounds.F, diameter(set), inner_radius(set), bounds.L, T,
                                       cfg.sigma)
                   : schedule_theorem1(d, bounds.F, diameter(set), cfg.sigma, inner_radius(set), T);
  s.G = bounds.G;
  if (!s.L) s.L = bounds.L;
  return apply_overrides(s, cfg.overrides);
}

inline void check_compatibility(const ExperimentConfig& cfg) {
  if (cfg.task == Task::Portfolio && !is_bandit(cfg.algo)) {
    throw ConfigError("portfolio task only supports bandit algorithms (onseg, ogdeg)");
  }
  if (cfg.trials < 1) throw ConfigError("trials must be at least 1");
}

inline AnyLearner make_learner(const ExperimentConfig& cfg, const FeasibleSet& set,
                               const LossBounds& bounds, long T) {
  switch (cfg.algo) {
    case Algo::Onseg: return Onseg(set, make_schedule(cfg, set, bounds, T));
    case Algo::Ogdeg: return Ogdeg(set, make_schedule(cfg, set, bounds, T));
    case Algo::Ons: {
      const double D = diameter(set);
      const OnsParameters p = cfg.overrides.beta
                                  ? ons_parameters_from_beta(*cfg.overrides.beta, D)
                                  : ons_parameters(bounds.G, D, cfg.sigma / (bounds.G * bounds.G));
      return Ons(set, p);
    }
    case Algo::Ogd: return Ogd(set, bounds.G);
  }
  throw ConfigError("unknown algorithm");
}

// ---------------------------------------------------------------------------
// Offline optimum

struct OfflineOptions {
  double tolerance = 1e-8;  // on the weighted-mean objective
  long max_iterations = 1000000;
  int perturbation_checks = 1000;
};

struct OfflineOptimum {
  Point x;
  double value = 0.0;  // sum over rounds of f_t(x)
  long iterations = 0;
};

namespace detail {

class WeightedObjective {
 public:
  WeightedObjective(const Dataset& data, LossFamily family, std::vector<double> weights)
      : data_(data), family_(family), weights_(std::move(weights)) {
    total_ = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  }

  double value(const Point& x) const {
    double v = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      if (weights_[i] != 0.0) v += weights_[i] * loss_value(family_, x, data_.samples[i]);
    }
    return v / total_;
  }

  Point gradient(const Point& x) const {
    Point g = Point::Zero(x.size());
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      if (weights_[i] != 0.0) g += weights_[i] * loss_gradient(family_, x, data_.samples[i]);
    }
    return g / total_;
  }

  double total_weight() const { return total_; }

 private:
  const Dataset& data_;
  LossFamily family_;
  std::vector<double> weights_;
  double total_ = 0.0;
};

// max over s in P of grad^T (x - s); upper-bounds the suboptimality of x.
inline double frank_wolfe_gap(const FeasibleSet& set, const Point& x, const Point& grad) {
  if (const auto* ball = std::get_if<BallSet>(&set)) return grad.dot(x) + ball->radius * grad.norm();
  return grad.dot(x) - grad.minCoeff();
}

}  // namespace detail

// min over x in P of sum_i weights_i f_i(x), by accelerated projected gradient
// with backtracking and restarts, certified by the Frank-Wolfe gap and then
// checked against random feasible perturbations of the minimiser.
inline OfflineOptimum offline_optimum(const Dataset& data, LossFamily family, const FeasibleSet& set,
                                      std::vector<double> weights, const OfflineOptions& opts = {}) {
  if (data.samples.empty()) throw DataError("offline_optimum: empty dataset");
  if (weights.size() != data.n()) throw ConfigError("offline_optimum: weight count mismatch");
  const detail::WeightedObjective objective(data, family, std::move(weights));
  auto project = [&](const Point& p) { return euclidean_project(set, p); };

  Rng rng(0x5eedULL);
  Point x = center(set);
  long iterations = 0;
  for (int attempt = 0;; ++attempt) {
    double lipschitz = 1.0;
    Point x_prev = x;
    double momentum = 1.0;
    double fx = objective.value(x);
    Point gx = objective.gradient(x);
    bool converged = false;
    while (iterations < opts.max_iterations) {
      const double gap = detail::frank_wolfe_gap(set, x, gx);
      if (gap <= opts.tolerance * std::max(1.0, std::abs(fx))) {
        converged = true;
        break;
      }
      ++iterations;
      const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
      const Point z = x + ((momentum - 1.0) / next_momentum) * (x - x_prev);
      const double fz = objective.value(z);
      const Point gz = objective.gradient(z);
      lipschitz *= 0.5;
      Point x_new;
      double f_new = 0.0;
      for (;;) {
        x_new = project(z - gz / lipschitz);
        f_new = objective.value(x_new);
        const Point step = x_new - z;
        if (f_new <= fz + gz.dot(step) + 0.5 * lipschitz * step.squaredNorm() + 1e-15 * std::abs(fz)) break;
        lipschitz *= 2.0;
        if (!std::isfinite(lipschitz)) throw NumericError("offline_optimum: step size collapsed");
      }
      if (f_new > fx) {
        momentum = 1.0;  // restart from the last good point
        x_prev = x;
        continue;
      }
      momentum = next_momentum;
      x_prev = std::move(x);
      x = std::move(x_new);
      fx = f_new;
      gx = objective.gradient(x);
    }
    if (!converged) {
      throw NumericError("offline_optimum: no convergence within " +
                         std::to_string(opts.max_iterations) + " iterations");
    }

    // random feasible perturbations at several scales must not improve on x
    const int d = static_cast<int>(x.size());
    const double scale = diameter(set);
    std::optional<Point> better;
    for (int k = 0; k < opts.perturbation_checks && !better; ++k) {
      const double radius = scale * std::pow(10.0, -(k % 8));
      const Point p = project(x + radius * sample_unit_ball(d, rng));
      if (objective.value(p) < fx - opts.tolerance * std::max(1.0, std::abs(fx))) better = p;
    }
    if (!better) return {x, fx * objective.total_weight(), iterations};
    if (attempt >= 10) throw NumericError("offline_optimum: perturbation check keeps failing");
    x = *better;
  }
}

// Weights for cyclic replay of `order` over T rounds: how often each sample occurs.
inline std::vector<double> replay_weights(std::size_t n, std::span<const std::size_t> order, long T) {
  std::vector<double> w(n, 0.0);
  const long full = T / static_cast<long>(order.size());
  const long partial = T % static_cast<long>(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    w[order[k]] += static_cast<double>(full + (static_cast<long>(k) < partial ? 1 : 0));
  }
  return w;
}

// ---------------------------------------------------------------------------
// Running one trial

inline std::vector<std::size_t> replay_order(std::size_t n, bool shuffle, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle) {
    Rng shuffle_rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
  }
  return order;
}

inline TrialResult run_trial(const ExperimentConfig& cfg, const Dataset& data, int trial_index) {
  check_compatibility(cfg);
  if (data.samples.empty()) throw DataError("empty dataset");
  const int d = data.d();
  for (const auto& s : data.samples) {
    if (s.z.size() != d) throw DataError("dataset rows have inconsistent dimensions");
  }
  const FeasibleSet set = make_feasible_set(cfg, d);
  const LossBounds bounds = resolve_bounds(cfg, data, set);
  const long T = cfg.horizon.resolve(data.n());
  const LossFamily family = loss_family(cfg.task);

  TrialResult result;
  result.seed = cfg.seed + static_cast<std::uint64_t>(trial_index);
  result.horizon = T;
  result.order = replay_order(data.n(), cfg.shuffle, result.seed);
  result.records.reserve(static_cast<std::size_t>(T));
  if (cfg.keep_queries) result.queries.reserve(static_cast<std::size_t>(T));

  AnyLearner learner = make_learner(cfg, set, bounds, std::max<long>(T, 2));
  Rng rng(result.seed);
  std::vector<std::size_t> played;
  played.reserve(static_cast<std::size_t>(T));

  for (long t = 1; t <= T; ++t) {
    const std::size_t index = result.order[static_cast<std::size_t>((t - 1) % static_cast<long>(data.n()))];
    const LossSample& sample = data.samples[index];
    IterationRecord rec;
    rec.t = t;
    std::visit(
        [&](auto& l) {
          using L = std::decay_t<decltype(l)>;
          if constexpr (BanditLearner<L>) {
            const Point x = l.predict(rng);
            rec.loss = loss_value(family, x, sample);
            rec.observation = observation_for(cfg.task, x, sample, rec.loss);
            l.update(rec.loss);
            if (cfg.keep_queries) result.queries.push_back(x);
          } else {
            const Point x = l.predict();
            rec.loss = loss_value(family, x, sample);
            rec.observation = observation_for(cfg.task, x, sample, rec.loss);
            l.update(loss_gradient(family, x, sample));
            if (cfg.keep_queries) result.queries.push_back(x);
          }
        },
        learner);
    result.records.push_back(rec);
    played.push_back(index);
  }
  running_metrics(result.records);
  if (const auto* l = std::get_if<Onseg>(&learner)) result.schedule = l->schedule();
  if (const auto* l = std::get_if<Ogdeg>(&learner)) result.schedule = l->schedule();

  if (cfg.compute_regret) {
    const OfflineOptimum opt =
        offline_optimum(data, family, set, replay_weights(data.n(), result.order, T));
    result.optimum = opt.x;
    result.optimum_value = opt.value;
    double cumulative = 0.0;
    for (std::size_t k = 0; k < result.records.size(); ++k) {
      cumulative += result.records[k].loss - loss_value(family, opt.x, data.samples[played[k]]);
      result.records[k].regret = cumulative;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Data loading and traces

inline Dataset synthetic_quadratic_dataset(const std::vector<double>& center_coords) {
  std::vector<double> c = center_coords;
  if (c.empty()) c = {0.3, -0.2};
  LossSample s;
  s.z = Eigen::Map<const Point>(c.data(), static_cast<Eigen::Index>(c.size()));
  Dataset data;
  data.samples.push_back(std::move(s));
  return data;
}

inline Dataset load_dataset(const ExperimentConfig& cfg) {
  switch (cfg.task) {
    case Task::SyntheticQuadratic:
      if (cfg.data_path.empty()) return synthetic_quadratic_dataset(cfg.center);
      return parse_libsvm(cfg.data_path);
    case Task::Portfolio:
      if (cfg.data_path.empty()) throw ConfigError("--data is required for the portfolio task");
      return parse_returns_csv(cfg.data_path);
    default:
      if (cfg.data_path.empty()) throw ConfigError("--data is required for this task");
      return parse_libsvm(cfg.data_path);
  }
}

inline void write_trace(std::span<const IterationRecord> records, std::ostream& out) {
  out << "t,loss,metric,regret\n";
  char buf[128];
  for (const auto& rec : records) {
    int n = std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g,", rec.t, rec.loss, rec.metric);
    out.write(buf, n);
    if (rec.regret) {
      n = std::snprintf(buf, sizeof buf, "%.17g", *rec.regret);
      out.write(buf, n);
    }
    out.put('\n');
  }
}

inline void write_trace(std::span<const IterationRecord> records, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  write_trace(records, out);
  if (!out) throw DataError("failed writing '" + path + "'");
}

// trace.csv -> trace.trial3.csv
inline std::string trial_path(const std::string& path, int trial, int trials) {
  if (trials <= 1) return path;
  std::filesystem::path p(path);
  const std::string stem = p.stem().string() + ".trial" + std::to_string(trial);
  return (p.parent_path() / (stem + p.extension().string())).string();
}

// Runs every trial; per-trial traces are written when cfg.out is set.
inline std::vector<TrialResult> run_experiment(const ExperimentConfig& cfg, const Dataset& data) {
  std::vector<TrialResult> results;
  for (int i = 0; i < cfg.trials; ++i) {
    results.push_back(run_trial(cfg, data, i));
    if (!cfg.out.empty()) write_trace(results.back().records, trial_path(cfg.out, i, cfg.trials));
  }
  return results;
}

inline std::vector<TrialResult> run_experiment(const ExperimentConfig& cfg) {
  return run_experiment(cfg, load_dataset(cfg));
}

}  // namespace onseg
