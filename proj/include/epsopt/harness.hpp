#pragma once

#include <atomic>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "epsopt/common.hpp"
#include "epsopt/environment.hpp"
#include "epsopt/objective.hpp"
#include "epsopt/optimizer.hpp"
#include "epsopt/policies.hpp"

namespace epsopt {

// --- configuration -----------------------------------------------------------
//
// Flat-key text config: `key = value` lines, `#` comments. Lists are
// comma-separated. Unknown keys are rejected. All keys and defaults are
// listed in the README; `echo_config` prints the resolved values back.

struct ExperimentConfig {
  // instance
  std::vector<int> K_list = {5};
  int d = 8;
  int pool_size = 400;
  double noise_std = 1.0;
  double prior_mean = 0.0;
  double prior_var = 1.0;
  double norm_bound = 0.0;  // 0 means 4*d
  // plan
  std::vector<std::string> patterns = {"constant"};
  std::vector<double> N_list = {1000};
  std::vector<double> custom_fractions;  // overrides patterns when non-empty
  double forecast_noise = 0.0;           // Dirichlet multiplier; 0 = exact forecasts
  bool binomial_arrivals = true;
  // strategies
  std::vector<std::string> strategies = {"planner", "mpc", "simple_etc"};
  std::vector<double> eps_greedy_grid = {0.05, 0.01, 0.1, 0.5, 1.0};
  std::vector<double> theory_etc_grid = {0.05, 0.01, 0.1, 0.5, 1.0};
  double eps_min = 0.0;
  double eps_max = 1.0;
  // run
  int replications = 100;
  std::uint64_t seed = 1;
  int workers = 1;
  std::string out_dir = "out";
  // solver
  int sgd_steps = 300;
  double sgd_step_size = 0.05;  // on the per-sample scale; divided by total forecast
  double sgd_momentum = 0.0;
  int mc_paths = 1;
  int eval_paths = 256;
  int user_sample_size = 128;
  // Smoothing floor inside the sqrt of the variance gap. Larger than the
  // library default: receding-horizon re-solves warm-start at near-zero
  // schedules where the reparametrization gradient's noise scales like
  // 1/sqrt(floor), and 1e-4 keeps those solves stable.
  double sqrt_floor = 1e-4;
  double ridge_nu = 1.0;
  bool ridge_include_exploit = false;

  double resolved_norm_bound() const { return norm_bound > 0.0 ? norm_bound : 4.0 * d; }

  void validate() const {
    if (replications < 1) throw InputError("config: replications must be >= 1");
    if (d < 1 || pool_size < 1) throw InputError("config: d and pool_size must be >= 1");
    if (!(noise_std > 0.0)) throw InputError("config: noise_std must be > 0");
    if (!(prior_var > 0.0)) throw InputError("config: prior_var must be > 0");
    if (K_list.empty() || N_list.empty() || patterns.empty())
      throw InputError("config: K, N and pattern lists must be non-empty");
    for (int k : K_list)
      if (k < 1) throw InputError("config: K must be >= 1");
    for (double n : N_list)
      if (!(n >= 1.0)) throw InputError("config: N must be >= 1");
    if (!(0.0 <= eps_min && eps_min <= eps_max && eps_max <= 1.0))
      throw InputError("config: need 0 <= eps_min <= eps_max <= 1");
    if (sgd_steps < 1 || mc_paths < 1 || eval_paths < 1 || user_sample_size < 1)
      throw InputError("config: solver counts must be >= 1");
    if (!(sgd_step_size > 0.0)) throw InputError("config: sgd_step_size must be > 0");
    if (workers < 1) throw InputError("config: workers must be >= 1");
    if (strategies.empty()) throw InputError("config: strategies list is empty");
    for (const auto& s : strategies) {
      if (s != "planner" && s != "mpc" && s != "simple_etc" && s != "eps_greedy" &&
          s != "theory_etc" && s != "batched_ts")
        throw InputError("config: unknown strategy '" + s + "'");
    }
    if (custom_fractions.empty()) {
      for (const auto& p : patterns) arrival_pattern(p);  // throws on unknown names
    } else {
      double sum = 0.0;
      for (double f : custom_fractions) {
        if (!(f >= 0.0)) throw InputError("config: fractions must be >= 0");
        sum += f;
      }
      if (std::abs(sum - 1.0) > 1e-9) throw InputError("config: fractions must sum to 1");
    }
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    tok = trim(tok);
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (const std::exception&) {
    throw InputError("config: bad number for key '" + key + "': '" + v + "'");
  }
}

inline long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (const std::exception&) {
    throw InputError("config: bad integer for key '" + key + "': '" + v + "'");
  }
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw InputError("config: bad boolean for key '" + key + "': '" + v + "'");
}

inline std::uint64_t double_bits(double v) {
  std::uint64_t b;
  std::memcpy(&b, &v, sizeof(b));
  return b;
}

}  // namespace detail

inline ExperimentConfig load_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InputError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    if (val.empty()) throw InputError("config: empty value for key '" + key + "'");

    if (key == "K") {
      cfg.K_list.clear();
      for (const auto& t : detail::split_list(val))
        cfg.K_list.push_back(static_cast<int>(detail::to_int(key, t)));
    } else if (key == "d") {
      cfg.d = static_cast<int>(detail::to_int(key, val));
    } else if (key == "pool_size") {
      cfg.pool_size = static_cast<int>(detail::to_int(key, val));
    } else if (key == "noise_std") {
      cfg.noise_std = detail::to_double(key, val);
    } else if (key == "prior_mean") {
      cfg.prior_mean = detail::to_double(key, val);
    } else if (key == "prior_var") {
      cfg.prior_var = detail::to_double(key, val);
    } else if (key == "norm_bound") {
      cfg.norm_bound = detail::to_double(key, val);
    } else if (key == "pattern") {
      cfg.patterns = detail::split_list(val);
    } else if (key == "fractions") {
      cfg.custom_fractions.clear();
      for (const auto& t : detail::split_list(val))
        cfg.custom_fractions.push_back(detail::to_double(key, t));
    } else if (key == "N") {
      cfg.N_list.clear();
      for (const auto& t : detail::split_list(val)) cfg.N_list.push_back(detail::to_double(key, t));
    } else if (key == "forecast_noise") {
      cfg.forecast_noise = detail::to_double(key, val);
    } else if (key == "binomial_arrivals") {
      cfg.binomial_arrivals = detail::to_bool(key, val);
    } else if (key == "strategies") {
      cfg.strategies = detail::split_list(val);
    } else if (key == "eps_greedy_grid") {
      cfg.eps_greedy_grid.clear();
      for (const auto& t : detail::split_list(val))
        cfg.eps_greedy_grid.push_back(detail::to_double(key, t));
    } else if (key == "theory_etc_grid") {
      cfg.theory_etc_grid.clear();
      for (const auto& t : detail::split_list(val))
        cfg.theory_etc_grid.push_back(detail::to_double(key, t));
    } else if (key == "eps_min") {
      cfg.eps_min = detail::to_double(key, val);
    } else if (key == "eps_max") {
      cfg.eps_max = detail::to_double(key, val);
    } else if (key == "replications") {
      cfg.replications = static_cast<int>(detail::to_int(key, val));
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(detail::to_int(key, val));
    } else if (key == "workers") {
      cfg.workers = static_cast<int>(detail::to_int(key, val));
    } else if (key == "out_dir") {
      cfg.out_dir = val;
    } else if (key == "sgd_steps") {
      cfg.sgd_steps = static_cast<int>(detail::to_int(key, val));
    } else if (key == "sgd_step_size") {
      cfg.sgd_step_size = detail::to_double(key, val);
    } else if (key == "sgd_momentum") {
      cfg.sgd_momentum = detail::to_double(key, val);
    } else if (key == "mc_paths") {
      cfg.mc_paths = static_cast<int>(detail::to_int(key, val));
    } else if (key == "eval_paths") {
      cfg.eval_paths = static_cast<int>(detail::to_int(key, val));
    } else if (key == "user_sample_size") {
      cfg.user_sample_size = static_cast<int>(detail::to_int(key, val));
    } else if (key == "sqrt_floor") {
      cfg.sqrt_floor = detail::to_double(key, val);
    } else if (key == "ridge_nu") {
      cfg.ridge_nu = detail::to_double(key, val);
    } else if (key == "ridge_include_exploit") {
      cfg.ridge_include_exploit = detail::to_bool(key, val);
    } else {
      throw InputError("config: unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open '" + path + "'");
  return load_config(in);
}

inline void echo_config(const ExperimentConfig& cfg, std::ostream& out) {
  auto list_int = [](const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
  };
  auto list_dbl = [](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_sig(v[i]);
    return s;
  };
  auto list_str = [](const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
    return s;
  };
  out << "K = " << list_int(cfg.K_list) << "\n";
  out << "d = " << cfg.d << "\n";
  out << "pool_size = " << cfg.pool_size << "\n";
  out << "noise_std = " << format_sig(cfg.noise_std) << "\n";
  out << "prior_mean = " << format_sig(cfg.prior_mean) << "\n";
  out << "prior_var = " << format_sig(cfg.prior_var) << "\n";
  out << "norm_bound = " << format_sig(cfg.resolved_norm_bound()) << "\n";
  if (cfg.custom_fractions.empty())
    out << "pattern = " << list_str(cfg.patterns) << "\n";
  else
    out << "fractions = " << list_dbl(cfg.custom_fractions) << "\n";
  out << "N = " << list_dbl(cfg.N_list) << "\n";
  out << "forecast_noise = " << format_sig(cfg.forecast_noise) << "\n";
  out << "binomial_arrivals = " << (cfg.binomial_arrivals ? "true" : "false") << "\n";
  out << "strategies = " << list_str(cfg.strategies) << "\n";
  out << "eps_greedy_grid = " << list_dbl(cfg.eps_greedy_grid) << "\n";
  out << "theory_etc_grid = " << list_dbl(cfg.theory_etc_grid) << "\n";
  out << "eps_min = " << format_sig(cfg.eps_min) << "\n";
  out << "eps_max = " << format_sig(cfg.eps_max) << "\n";
  out << "replications = " << cfg.replications << "\n";
  out << "seed = " << cfg.seed << "\n";
  out << "workers = " << cfg.workers << "\n";
  out << "out_dir = " << cfg.out_dir << "\n";
  out << "sgd_steps = " << cfg.sgd_steps << "\n";
  out << "sgd_step_size = " << format_sig(cfg.sgd_step_size) << "\n";
  out << "sgd_momentum = " << format_sig(cfg.sgd_momentum) << "\n";
  out << "mc_paths = " << cfg.mc_paths << "\n";
  out << "eval_paths = " << cfg.eval_paths << "\n";
  out << "user_sample_size = " << cfg.user_sample_size << "\n";
  out << "sqrt_floor = " << format_sig(cfg.sqrt_floor) << "\n";
  out << "ridge_nu = " << format_sig(cfg.ridge_nu) << "\n";
  out << "ridge_include_exploit = " << (cfg.ridge_include_exploit ? "true" : "false") << "\n";
}

// --- sweep -------------------------------------------------------------------

struct CellSpec {
  std::string label;   // e.g. planner, eps_greedy(c=0.05)
  std::string kind;    // strategy family
  double param = 0.0;  // eps or c for swept strategies
  std::string sweep_group;  // non-empty for per-constant cells
  int K = 0;
  double N = 0.0;
  std::string pattern;
  std::vector<double> fractions;
  bool optimizer_strategy = false;
};

struct CellResult {
  CellSpec spec;
  int replications = 0;
  double mean_regret = 0.0;  // per-user cumulative regret, averaged over reps
  double se = 0.0;
  bool best_in_group = false;
  std::vector<double> rep_regret;                  // per-rep per-user regret
  std::vector<std::vector<double>> schedules;      // per-rep realized rates
  std::vector<std::pair<int, double>> convergence; // (step, objective), rep 0
  std::vector<std::string> failures;
};

struct SweepResult {
  std::vector<CellResult> cells;
};

namespace detail {

inline std::vector<CellSpec> enumerate_cells(const ExperimentConfig& cfg) {
  std::vector<CellSpec> cells;
  const std::vector<std::string> pats =
      cfg.custom_fractions.empty() ? cfg.patterns : std::vector<std::string>{"custom"};
  for (const auto& strategy : cfg.strategies)
    for (int K : cfg.K_list)
      for (double N : cfg.N_list)
        for (const auto& pat : pats) {
          CellSpec base;
          base.K = K;
          base.N = N;
          base.pattern = pat;
          base.fractions =
              cfg.custom_fractions.empty() ? arrival_pattern(pat) : cfg.custom_fractions;
          if (strategy == "eps_greedy" || strategy == "theory_etc") {
            const auto& grid =
                strategy == "eps_greedy" ? cfg.eps_greedy_grid : cfg.theory_etc_grid;
            for (double c : grid) {
              CellSpec cell = base;
              cell.kind = strategy;
              cell.param = c;
              cell.sweep_group = strategy;
              cell.label = strategy + "(c=" + format_sig(c) + ")";
              cells.push_back(cell);
            }
          } else {
            CellSpec cell = base;
            cell.kind = strategy;
            cell.label = strategy;
            cell.optimizer_strategy = (strategy == "planner" || strategy == "mpc");
            cells.push_back(cell);
          }
        }
  return cells;
}

struct RepOutcome {
  bool ok = false;
  std::string error;
  double per_user_regret = 0.0;
  double cumulative = 0.0;
  std::vector<double> rates;
  std::vector<std::pair<int, double>> convergence;
};

// Environment seed shared by all strategies in the same (K, N, pattern)
// cell so comparisons are paired.
inline std::uint64_t env_key(const ExperimentConfig& cfg, const CellSpec& cell) {
  return derive_seed(cfg.seed, tag_from("env"), static_cast<std::uint64_t>(cell.K),
                     double_bits(cell.N), tag_from(cell.pattern.c_str()));
}

inline RepOutcome run_replication(const ExperimentConfig& cfg, const CellSpec& cell, int rep,
                                  bool want_trace) {
  RepOutcome out;
  try {
    const std::uint64_t ekey = env_key(cfg, cell);
    const std::uint64_t rep_seed = derive_seed(ekey, tag_from("rep"), static_cast<std::uint64_t>(rep));

    // User pool is fixed per environment cell; items are redrawn per rep.
    const GaussianPosterior prior =
        make_prior(cell.K, cfg.d, cfg.prior_mean, cfg.prior_var, CovMode::Diagonal);
    BanditInstance instance;
    instance.noise_std = cfg.noise_std;
    {
      Rng rng_pool(derive_seed(ekey, tag_from("pool")));
      instance.user_pool =
          draw_user_pool(cfg.d, cfg.pool_size, cfg.resolved_norm_bound(), rng_pool);
      Rng rng_items(derive_seed(rep_seed, tag_from("items")));
      instance.items = draw_items(prior, rng_items);
    }

    BatchPlan plan = make_plan(cell.fractions, cell.N);
    if (cfg.binomial_arrivals) {
      Rng rng_arrivals(derive_seed(rep_seed, tag_from("arrivals")));
      plan.realized = sample_batch_sizes(static_cast<int>(cell.N), plan.fractions, rng_arrivals);
    } else {
      fill_realized_deterministic(plan);
    }

    // Forecasts handed to the planning strategies; optionally noisy.
    std::vector<double> forecasts = plan.forecast;
    if (cfg.forecast_noise > 0.0) {
      Rng rng_forecast(derive_seed(rep_seed, tag_from("forecast")));
      const std::vector<double> lam =
          noisy_forecast(plan.fractions, cfg.forecast_noise, rng_forecast);
      for (int t = 0; t < plan.horizon; ++t) forecasts[t] = cell.N * lam[t];
    }

    std::vector<UserEmbedding> user_sample(cfg.user_sample_size);
    {
      Rng rng_sample(derive_seed(rep_seed, tag_from("usersample")));
      for (auto& x : user_sample)
        x = instance.user_pool[rng_sample.uniform_int(
            0, static_cast<int>(instance.user_pool.size()) - 1)];
    }

    double total_forecast = 0.0;
    for (double n : forecasts) total_forecast += n;

    SolverConfig solver;
    solver.steps = cfg.sgd_steps;
    solver.step_size = cfg.sgd_step_size / std::max(1.0, total_forecast);
    solver.momentum = cfg.sgd_momentum;
    solver.box = {cfg.eps_min, cfg.eps_max};
    solver.eval_paths = cfg.eval_paths;

    ObjectiveConfig obj;
    obj.user_sample = user_sample;
    obj.batch_sizes = forecasts;
    obj.design = population_design(user_sample, cell.K, cfg.noise_std, /*diagonal=*/true);
    obj.mc_paths = cfg.mc_paths;
    obj.sqrt_floor = cfg.sqrt_floor;

    std::unique_ptr<ScheduleStrategy> strategy;
    if (cell.kind == "planner" || (want_trace && cell.kind == "mpc")) {
      SolverConfig s1 = solver;
      s1.seed = period_solver_seed(rep_seed, 1);
      const SolveResult solved = sgd_solve(prior, obj, s1, 1);
      if (want_trace)
        for (std::size_t k = 0; k < solved.objective_trace.size(); ++k)
          out.convergence.emplace_back(static_cast<int>(k), solved.objective_trace[k]);
      if (cell.kind == "planner")
        strategy = std::make_unique<PlannerStrategy>(cell.K, cfg.d, cfg.ridge_nu, solved.schedule,
                                                     cfg.ridge_include_exploit);
    }
    if (cell.kind == "mpc") {
      MpcConfig mpc;
      mpc.prior = prior;
      mpc.user_sample = user_sample;
      mpc.design = obj.design;
      mpc.forecasts = forecasts;
      mpc.solver = solver;
      mpc.mc_paths = cfg.mc_paths;
      mpc.sqrt_floor = cfg.sqrt_floor;
      mpc.ridge_nu = cfg.ridge_nu;
      mpc.ridge_include_exploit = cfg.ridge_include_exploit;
      mpc.noise_std = cfg.noise_std;
      mpc.seed = rep_seed;
      strategy = std::make_unique<MpcStrategy>(cell.K, cfg.d, std::move(mpc));
    } else if (cell.kind == "simple_etc") {
      strategy = std::make_unique<SimpleEtcStrategy>(cell.K, cfg.d, cfg.ridge_nu,
                                                     cfg.ridge_include_exploit);
    } else if (cell.kind == "eps_greedy") {
      strategy = std::make_unique<EpsGreedyStrategy>(cell.K, cfg.d, cfg.ridge_nu, cell.param,
                                                     cfg.ridge_include_exploit);
    } else if (cell.kind == "theory_etc") {
      strategy = std::make_unique<TheoryEtcStrategy>(cell.K, cfg.d, cfg.ridge_nu, cell.param,
                                                     cfg.ridge_include_exploit);
    } else if (cell.kind == "batched_ts") {
      strategy = std::make_unique<BatchedTsStrategy>(prior, cfg.noise_std);
    }
    if (!strategy) throw InputError("run_sweep: no strategy built for '" + cell.kind + "'");

    const EpisodeResult episode =
        run_episode(instance, *strategy, plan, derive_seed(rep_seed, tag_from("episode")));
    out.per_user_regret = episode.report.mean_per_user();
    out.cumulative = episode.report.cumulative;
    out.rates = episode.realized_rates;
    out.ok = true;
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

}  // namespace detail

/// Runs every cell x replication, deterministically for a given master seed
/// at any worker count. Replication failures are recorded per cell without
/// aborting the sweep.
inline SweepResult run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::vector<CellSpec> cells = detail::enumerate_cells(cfg);
  const int R = cfg.replications;
  std::vector<detail::RepOutcome> outcomes(cells.size() * R);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t task = next.fetch_add(1);
      if (task >= outcomes.size()) return;
      const std::size_t c = task / R;
      const int rep = static_cast<int>(task % R);
      outcomes[task] =
          detail::run_replication(cfg, cells[c], rep, /*want_trace=*/rep == 0 && cells[c].optimizer_strategy);
    }
  };
  const int n_threads = std::max(1, std::min<int>(cfg.workers, static_cast<int>(outcomes.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    for (int i = 0; i < n_threads; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  SweepResult result;
  result.cells.resize(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    CellResult& cell = result.cells[c];
    cell.spec = cells[c];
    cell.replications = R;
    double sum = 0.0, sum_sq = 0.0;
    int ok = 0;
    for (int rep = 0; rep < R; ++rep) {
      const detail::RepOutcome& o = outcomes[c * R + rep];
      if (!o.ok) {
        cell.failures.push_back("rep " + std::to_string(rep) + ": " + o.error);
        continue;
      }
      ++ok;
      sum += o.per_user_regret;
      sum_sq += o.per_user_regret * o.per_user_regret;
      cell.rep_regret.push_back(o.per_user_regret);
      if (cells[c].optimizer_strategy) cell.schedules.push_back(o.rates);
      if (rep == 0) cell.convergence = o.convergence;
    }
    if (ok > 0) {
      cell.mean_regret = sum / ok;
      const double var = std::max(0.0, sum_sq / ok - cell.mean_regret * cell.mean_regret);
      cell.se = ok > 1 ? std::sqrt(var / (ok - 1)) : 0.0;
    }
  }

  // Best-in-hindsight flag per sweep group within each (K, N, pattern).
  for (auto& cell : result.cells) {
    if (cell.spec.sweep_group.empty()) continue;
    bool best = true;
    for (const auto& other : result.cells) {
      if (other.spec.sweep_group != cell.spec.sweep_group || other.spec.K != cell.spec.K ||
          other.spec.N != cell.spec.N || other.spec.pattern != cell.spec.pattern)
        continue;
      if (other.mean_regret < cell.mean_regret) best = false;
    }
    cell.best_in_group = best;
  }
  return result;
}

/// Writes regret_table.csv, schedules.csv and convergence.csv into `dir`.
/// Numeric values use 6 significant digits; outputs are byte-identical for a
/// fixed master seed and config.
inline void emit_reports(const SweepResult& result, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("emit_reports: cannot create directory '" + dir + "'");

  auto open = [&](const std::string& name) {
    std::ofstream out(dir + "/" + name, std::ios::binary);
    if (!out) throw IoError("emit_reports: cannot write '" + dir + "/" + name + "'");
    return out;
  };

  {
    std::ofstream out = open("regret_table.csv");
    out << "strategy,K,N,pattern,mean_regret,se\n";
    for (const auto& cell : result.cells) {
      out << cell.spec.label << ',' << cell.spec.K << ',' << format_sig(cell.spec.N) << ','
          << cell.spec.pattern << ',' << format_sig(cell.mean_regret) << ','
          << format_sig(cell.se) << "\n";
    }
    // Best-in-hindsight summary rows for swept strategies.
    for (const auto& cell : result.cells) {
      if (!cell.best_in_group) continue;
      out << cell.spec.sweep_group << "*," << cell.spec.K << ',' << format_sig(cell.spec.N) << ','
          << cell.spec.pattern << ',' << format_sig(cell.mean_regret) << ','
          << format_sig(cell.se) << "\n";
    }
  }
  {
    std::ofstream out = open("schedules.csv");
    out << "strategy,K,N,pattern,replication\n";
    for (const auto& cell : result.cells) {
      for (std::size_t rep = 0; rep < cell.schedules.size(); ++rep) {
        out << cell.spec.label << ',' << cell.spec.K << ',' << format_sig(cell.spec.N) << ','
            << cell.spec.pattern << ',' << rep;
        for (double r : cell.schedules[rep]) out << ',' << format_sig(r);
        out << "\n";
      }
    }
  }
  {
    std::ofstream out = open("convergence.csv");
    out << "strategy,K,N,pattern,step,objective\n";
    for (const auto& cell : result.cells) {
      for (const auto& [step, obj] : cell.convergence) {
        out << cell.spec.label << ',' << cell.spec.K << ',' << format_sig(cell.spec.N) << ','
            << cell.spec.pattern << ',' << step << ',' << format_sig(obj) << "\n";
      }
    }
  }
}

}  // namespace epsopt
