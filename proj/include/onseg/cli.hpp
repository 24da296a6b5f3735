#pragma once

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "onseg/experiment.hpp"

namespace onseg {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitDataError = 3;

// Environment variable naming the directory for traces written without --out.
inline constexpr const char* kOutputDirEnv = "ONSEG_OUTPUT_DIR";

namespace cli_detail {

// Raw flag values; unset members leave the JSON config or defaults alone.
struct FlagValues {
  std::optional<std::string> config;
  std::optional<std::string> task;
  std::optional<std::string> algo;
  std::optional<std::string> data;
  std::optional<std::string> geometry;
  std::optional<double> D;
  std::optional<double> r;
  std::optional<std::string> schedule;
  std::optional<double> delta;
  std::optional<double> gamma;
  std::optional<double> beta;
  std::optional<double> sigma;
  std::optional<double> F;
  std::optional<double> G;
  std::optional<double> L;
  std::optional<std::string> T;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<std::string> out;
  std::optional<std::string> center;
  bool shuffle = false;
  bool no_regret = false;
};

inline std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v = 0.0;
    if (!detail::parse_double(item, v)) throw ConfigError("invalid number '" + item + "' in list");
    values.push_back(v);
  }
  if (values.empty()) throw ConfigError("empty number list");
  return values;
}

inline std::vector<std::string> parse_word_list(const std::string& text) {
  std::vector<std::string> words;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) words.push_back(item);
  }
  return words;
}

inline void apply_json(ExperimentConfig& cfg, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "task") cfg.task = parse_task(value.get<std::string>());
      else if (key == "algo") cfg.algo = parse_algo(value.get<std::string>());
      else if (key == "data") cfg.data_path = value.get<std::string>();
      else if (key == "geometry") cfg.geometry = parse_geometry(value.get<std::string>());
      else if (key == "D") cfg.D = value.get<double>();
      else if (key == "r") cfg.r = value.get<double>();
      else if (key == "schedule") cfg.schedule = parse_schedule_kind(value.get<std::string>());
      else if (key == "delta") cfg.overrides.delta = value.get<double>();
      else if (key == "gamma") cfg.overrides.gamma = value.get<double>();
      else if (key == "beta") cfg.overrides.beta = value.get<double>();
      else if (key == "sigma") cfg.sigma = value.get<double>();
      else if (key == "F") cfg.F = value.get<double>();
      else if (key == "G") cfg.G = value.get<double>();
      else if (key == "L") cfg.L = value.get<double>();
      else if (key == "T") {
        cfg.horizon = value.is_number_integer() ? parse_horizon(std::to_string(value.get<long>()))
                                                : parse_horizon(value.get<std::string>());
      } else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "trials") cfg.trials = value.get<int>();
      else if (key == "out") cfg.out = value.get<std::string>();
      else if (key == "shuffle") cfg.shuffle = value.get<bool>();
      else if (key == "regret") cfg.compute_regret = value.get<bool>();
      else if (key == "center") cfg.center = value.get<std::vector<double>>();
      else throw ConfigError("unknown config key '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
  }
}

inline ExperimentConfig build_config(const FlagValues& f) {
  ExperimentConfig cfg;
  if (f.config) {
    std::ifstream in(*f.config);
    if (!in) throw ConfigError("cannot open config file '" + *f.config + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config file '" + *f.config + "': " + e.what());
    }
    apply_json(cfg, j);
  }
  if (f.task) cfg.task = parse_task(*f.task);
  if (f.algo) cfg.algo = parse_algo(*f.algo);
  if (f.data) cfg.data_path = *f.data;
  if (f.geometry) cfg.geometry = parse_geometry(*f.geometry);
  if (f.D) cfg.D = *f.D;
  if (f.r) cfg.r = *f.r;
  if (f.schedule) cfg.schedule = parse_schedule_kind(*f.schedule);
  if (f.delta) cfg.overrides.delta = *f.delta;
  if (f.gamma) cfg.overrides.gamma = *f.gamma;
  if (f.beta) cfg.overrides.beta = *f.beta;
  if (f.sigma) cfg.sigma = *f.sigma;
  if (f.F) cfg.F = *f.F;
  if (f.G) cfg.G = *f.G;
  if (f.L) cfg.L = *f.L;
  if (f.T) cfg.horizon = parse_horizon(*f.T);
  if (f.seed) cfg.seed = *f.seed;
  if (f.trials) cfg.trials = *f.trials;
  if (f.out) cfg.out = *f.out;
  if (f.center) cfg.center = parse_number_list(*f.center);
  if (f.shuffle) cfg.shuffle = true;
  if (f.no_regret) cfg.compute_regret = false;
  if (!(cfg.D > 0.0) || !(cfg.r > 0.0)) throw ConfigError("D and r must be positive");
  check_compatibility(cfg);
  return cfg;
}

inline void add_experiment_flags(CLI::App& app, FlagValues& f) {
  app.add_option("--config", f.config, "JSON file with any of the flags below as keys");
  app.add_option("--task", f.task, "regression | classification | portfolio | synthetic-quadratic");
  app.add_option("--algo", f.algo, "onseg | ogdeg | ons | ogd");
  app.add_option("--data", f.data, "libSVM file, or returns CSV for the portfolio task");
  app.add_option("--geometry", f.geometry, "auto | ball | simplex");
  app.add_option("--D", f.D, "ball diameter (default 10)");
  app.add_option("--r", f.r, "ball inner radius (default 1)");
  app.add_option("--schedule", f.schedule, "theorem1 (default) | theorem2 (Lipschitz)");
  app.add_option("--delta", f.delta, "override the perturbation radius");
  app.add_option("--gamma", f.gamma, "override the shrink factor");
  app.add_option("--beta", f.beta, "override beta (ONSEG and ONS)");
  app.add_option("--sigma", f.sigma, "niceness parameter (default 1)");
  app.add_option("--F", f.F, "override the loss bound");
  app.add_option("--G", f.G, "override the gradient bound");
  app.add_option("--L", f.L, "override the Lipschitz constant");
  app.add_option("--T", f.T, "horizon: N rounds or Kn (K passes over the data; default 150n)");
  app.add_option("--seed", f.seed, "base seed; trial i uses seed + i");
  app.add_option("--trials", f.trials, "number of trials");
  app.add_option("--out", f.out, "output CSV path");
  app.add_option("--center", f.center, "synthetic-quadratic minimiser, comma separated");
  app.add_flag("--shuffle", f.shuffle, "seeded shuffle of the replay order");
  app.add_flag("--no-regret", f.no_regret, "skip the offline optimum and regret column");
}

inline std::string default_output(const ExperimentConfig& cfg, const std::string& suffix) {
  std::string name = std::string(to_string(cfg.task)) + "_" + suffix + ".csv";
  if (const char* dir = std::getenv(kOutputDirEnv); dir != nullptr && *dir != '\0') {
    return (std::filesystem::path(dir) / name).string();
  }
  return name;
}

inline double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

inline void print_summary(std::ostream& os, const ExperimentConfig& cfg,
                          const std::vector<TrialResult>& results) {
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& last = results[i].records.back();
    os << to_string(cfg.algo) << " trial " << i << " seed " << results[i].seed << ": T=" << last.t
       << " metric=";
    if (cfg.task == Task::Portfolio) os << format_percent(last.metric);
    else os << last.metric;
    if (last.regret) os << " regret=" << *last.regret;
    os << '\n';
  }
}

inline int run_command(const FlagValues& f, std::ostream& out) {
  ExperimentConfig cfg = build_config(f);
  if (cfg.out.empty()) cfg.out = default_output(cfg, std::string(to_string(cfg.algo)));
  const auto results = run_experiment(cfg);
  print_summary(out, cfg, results);
  return kExitOk;
}

// One (metric, regret) column pair per algorithm; medians over trials.
inline int compare_command(const FlagValues& f, const std::string& algos_text, std::ostream& out) {
  ExperimentConfig base = build_config(f);
  const auto algos = parse_word_list(algos_text);
  if (algos.empty()) throw ConfigError("--algos needs at least one algorithm");
  for (const auto& name : algos) {
    ExperimentConfig cfg = base;
    cfg.algo = parse_algo(name);
    check_compatibility(cfg);
  }
  const Dataset data = load_dataset(base);
  std::string path = base.out.empty() ? default_output(base, "compare") : base.out;

  std::vector<std::vector<double>> columns;
  std::vector<std::string> header{"t"};
  long rounds = 0;
  for (const auto& name : algos) {
    ExperimentConfig cfg = base;
    cfg.algo = parse_algo(name);
    cfg.out.clear();
    const auto results = run_experiment(cfg, data);
    print_summary(out, cfg, results);
    rounds = results.front().horizon;
    std::vector<double> metric(static_cast<std::size_t>(rounds));
    std::vector<double> regret(static_cast<std::size_t>(rounds));
    for (long t = 0; t < rounds; ++t) {
      std::vector<double> m;
      std::vector<double> g;
      for (const auto& r : results) {
        m.push_back(r.records[static_cast<std::size_t>(t)].metric);
        g.push_back(r.records[static_cast<std::size_t>(t)].regret.value_or(std::nan("")));
      }
      metric[static_cast<std::size_t>(t)] = median(m);
      regret[static_cast<std::size_t>(t)] = median(g);
    }
    header.push_back(name + "_metric");
    header.push_back(name + "_regret");
    columns.push_back(std::move(metric));
    columns.push_back(std::move(regret));
  }

  std::ofstream csv(path, std::ios::binary);
  if (!csv) throw DataError("cannot open '" + path + "' for writing");
  for (std::size_t i = 0; i < header.size(); ++i) csv << (i ? "," : "") << header[i];
  csv << '\n';
  char buf[64];
  for (long t = 0; t < rounds; ++t) {
    csv << (t + 1);
    for (const auto& col : columns) {
      const double v = col[static_cast<std::size_t>(t)];
      if (std::isnan(v)) {
        csv << ',';
      } else {
        std::snprintf(buf, sizeof buf, ",%.17g", v);
        csv << buf;
      }
    }
    csv << '\n';
  }
  if (!csv) throw DataError("failed writing '" + path + "'");
  return kExitOk;
}

// Final metric and regret for every value of T or delta.
inline int sweep_command(const FlagValues& f, const std::string& over, const std::string& values_text,
                         std::ostream& out) {
  ExperimentConfig base = build_config(f);
  if (over != "T" && over != "delta") throw ConfigError("--over must be T or delta");
  const auto values = parse_number_list(values_text);
  if (over == "T") {
    for (double v : values) {
      if (v < 1 || v != std::floor(v)) throw ConfigError("T values must be positive integers");
    }
  }
  const Dataset data = load_dataset(base);
  std::string path = base.out.empty() ? default_output(base, "sweep") : base.out;
  std::ofstream csv(path, std::ios::binary);
  if (!csv) throw DataError("cannot open '" + path + "' for writing");
  csv << "parameter,value,trial,rounds,cumulative_loss,metric,regret\n";
  char buf[256];
  for (double v : values) {
    ExperimentConfig cfg = base;
    cfg.out.clear();
    if (over == "T") {
      cfg.horizon = Horizon{static_cast<long>(v), 0};
    } else {
      cfg.overrides.delta = v;
    }
    const auto results = run_experiment(cfg, data);
    for (std::size_t i = 0; i < results.size(); ++i) {
      double cumulative = 0.0;
      for (const auto& rec : results[i].records) cumulative += rec.loss;
      const auto& last = results[i].records.back();
      std::snprintf(buf, sizeof buf, "%s,%.17g,%zu,%ld,%.17g,%.17g,", over.c_str(), v, i, last.t,
                    cumulative, last.metric);
      csv << buf;
      if (last.regret) {
        std::snprintf(buf, sizeof buf, "%.17g", *last.regret);
        csv << buf;
      }
      csv << '\n';
    }
    out << over << '=' << v << " done\n";
  }
  if (!csv) throw DataError("failed writing '" + path + "'");
  return kExitOk;
}

inline int bounds_command(const FlagValues& f, std::ostream& out) {
  const ExperimentConfig cfg = build_config(f);
  const Dataset data = load_dataset(cfg);
  const FeasibleSet set = make_feasible_set(cfg, data.d());
  const LossBounds b = estimate_bounds(loss_family(cfg.task), data.samples, set);
  nlohmann::json j{{"task", to_string(cfg.task)}, {"n", data.n()}, {"d", data.d()},
                   {"F", b.F},  {"G", b.G},  {"L", b.L}};
  out << j.dump(2) << '\n';
  return kExitOk;
}

}  // namespace cli_detail

// Entry point of the `onseg` tool. Exit codes: 0 success, 2 configuration or
// usage error, 3 data error, 1 any other failure.
inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  CLI::App app{"Bandit convex optimisation benchmark harness"};
  app.require_subcommand(1);

  cli_detail::FlagValues run_flags;
  cli_detail::FlagValues compare_flags;
  cli_detail::FlagValues sweep_flags;
  cli_detail::FlagValues bounds_flags;
  std::string algos = "onseg,ogdeg";
  std::string over = "T";
  std::string values;

  auto* run = app.add_subcommand("run", "run one experiment and write its trace");
  cli_detail::add_experiment_flags(*run, run_flags);
  auto* compare = app.add_subcommand("compare", "run several algorithms on one task");
  cli_detail::add_experiment_flags(*compare, compare_flags);
  compare->add_option("--algos", algos, "comma separated algorithms");
  auto* sweep = app.add_subcommand("sweep", "grid over T or delta");
  cli_detail::add_experiment_flags(*sweep, sweep_flags);
  sweep->add_option("--over", over, "T | delta");
  sweep->add_option("--values", values, "comma separated values")->required();
  auto* bounds = app.add_subcommand("bounds", "print estimated F, G, L for a dataset");
  cli_detail::add_experiment_flags(*bounds, bounds_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitConfigError;
  }

  try {
    if (run->parsed()) return cli_detail::run_command(run_flags, out);
    if (compare->parsed()) return cli_detail::compare_command(compare_flags, algos, out);
    if (sweep->parsed()) return cli_detail::sweep_command(sweep_flags, over, values, out);
    if (bounds->parsed()) return cli_detail::bounds_command(bounds_flags, out);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitConfigError;
}

}  // namespace onseg
