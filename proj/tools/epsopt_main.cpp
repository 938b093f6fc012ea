// Command-line front end: `run` executes a sweep from a config file, `solve`
// prints one planner schedule, `simulate` plays a single episode, `check`
// runs a quick invariant battery.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "epsopt/epsopt.hpp"

namespace {

using namespace epsopt;

ExperimentConfig load_with_overrides(const std::string& config_path, std::uint64_t* seed,
                                     int* workers, std::string* out_dir) {
  ExperimentConfig cfg =
      config_path.empty() ? ExperimentConfig{} : load_config_file(config_path);
  if (seed) cfg.seed = *seed;
  if (workers) cfg.workers = *workers;
  if (out_dir) cfg.out_dir = *out_dir;
  if (const char* env = std::getenv("EPSOPT_OUT")) cfg.out_dir = env;
  cfg.validate();
  return cfg;
}

// One planner cell built exactly like the sweep's first replication.
struct SolveSetup {
  GaussianPosterior prior;
  ObjectiveConfig obj;
  SolverConfig solver;
  BanditInstance instance;
  BatchPlan plan;
};

SolveSetup build_setup(const ExperimentConfig& cfg) {
  SolveSetup s;
  const int K = cfg.K_list.front();
  const double N = cfg.N_list.front();
  const std::vector<double> fractions =
      cfg.custom_fractions.empty() ? arrival_pattern(cfg.patterns.front()) : cfg.custom_fractions;

  s.prior = make_prior(K, cfg.d, cfg.prior_mean, cfg.prior_var, CovMode::Diagonal);
  Rng rng_pool(derive_seed(cfg.seed, tag_from("pool")));
  s.instance.noise_std = cfg.noise_std;
  s.instance.user_pool = draw_user_pool(cfg.d, cfg.pool_size, cfg.resolved_norm_bound(), rng_pool);
  Rng rng_items(derive_seed(cfg.seed, tag_from("items")));
  s.instance.items = draw_items(s.prior, rng_items);

  s.plan = make_plan(fractions, N);
  if (cfg.binomial_arrivals) {
    Rng rng_arrivals(derive_seed(cfg.seed, tag_from("arrivals")));
    s.plan.realized = sample_batch_sizes(static_cast<int>(N), fractions, rng_arrivals);
  } else {
    fill_realized_deterministic(s.plan);
  }

  Rng rng_sample(derive_seed(cfg.seed, tag_from("usersample")));
  s.obj.user_sample.resize(cfg.user_sample_size);
  for (auto& x : s.obj.user_sample)
    x = s.instance.user_pool[rng_sample.uniform_int(
        0, static_cast<int>(s.instance.user_pool.size()) - 1)];
  s.obj.batch_sizes = s.plan.forecast;
  s.obj.design = population_design(s.obj.user_sample, K, cfg.noise_std, /*diagonal=*/true);
  s.obj.mc_paths = cfg.mc_paths;
  s.obj.sqrt_floor = cfg.sqrt_floor;

  double total = 0.0;
  for (double n : s.plan.forecast) total += n;
  s.solver.steps = cfg.sgd_steps;
  s.solver.step_size = cfg.sgd_step_size / std::max(1.0, total);
  s.solver.momentum = cfg.sgd_momentum;
  s.solver.box = {cfg.eps_min, cfg.eps_max};
  s.solver.eval_paths = cfg.eval_paths;
  s.solver.seed = period_solver_seed(cfg.seed, 1);
  return s;
}

int cmd_run(const ExperimentConfig& cfg) {
  std::cout << "# resolved config\n";
  echo_config(cfg, std::cout);
  const SweepResult result = run_sweep(cfg);
  emit_reports(result, cfg.out_dir);
  int failures = 0;
  for (const auto& cell : result.cells) failures += static_cast<int>(cell.failures.size());
  std::cout << "wrote " << cfg.out_dir << "/regret_table.csv, schedules.csv, convergence.csv\n";
  if (failures > 0) std::cout << failures << " replication failure(s) recorded\n";
  return 0;
}

int cmd_solve(const ExperimentConfig& cfg) {
  const SolveSetup s = build_setup(cfg);
  const SolveResult solved = sgd_solve(s.prior, s.obj, s.solver, 1);
  std::cout << "schedule:";
  for (double r : solved.schedule.rates) std::cout << ' ' << format_sig(r);
  std::cout << "\nfinal objective (held-out estimate): " << format_sig(solved.final_objective)
            << "\n";
  std::filesystem::create_directories(cfg.out_dir);
  std::ofstream trace(cfg.out_dir + "/solve_trace.csv", std::ios::binary);
  write_trace_csv(solved, trace);
  std::cout << "wrote " << cfg.out_dir << "/solve_trace.csv\n";
  return 0;
}

int cmd_simulate(const ExperimentConfig& cfg, const std::string& strategy_name) {
  const SolveSetup s = build_setup(cfg);
  const int K = cfg.K_list.front();
  std::unique_ptr<ScheduleStrategy> strategy;
  MpcStrategy* mpc_ptr = nullptr;
  if (strategy_name == "planner") {
    const SolveResult solved = sgd_solve(s.prior, s.obj, s.solver, 1);
    strategy = std::make_unique<PlannerStrategy>(K, cfg.d, cfg.ridge_nu, solved.schedule);
  } else if (strategy_name == "mpc") {
    MpcConfig mpc;
    mpc.prior = s.prior;
    mpc.user_sample = s.obj.user_sample;
    mpc.design = s.obj.design;
    mpc.forecasts = s.plan.forecast;
    mpc.solver = s.solver;
    mpc.mc_paths = cfg.mc_paths;
    mpc.sqrt_floor = cfg.sqrt_floor;
    mpc.ridge_nu = cfg.ridge_nu;
    mpc.noise_std = cfg.noise_std;
    mpc.seed = cfg.seed;
    auto owned = std::make_unique<MpcStrategy>(K, cfg.d, std::move(mpc));
    mpc_ptr = owned.get();
    strategy = std::move(owned);
  } else if (strategy_name == "simple_etc") {
    strategy = std::make_unique<SimpleEtcStrategy>(K, cfg.d, cfg.ridge_nu);
  } else if (strategy_name == "eps_greedy") {
    strategy = std::make_unique<EpsGreedyStrategy>(K, cfg.d, cfg.ridge_nu,
                                                   cfg.eps_greedy_grid.front());
  } else if (strategy_name == "theory_etc") {
    strategy = std::make_unique<TheoryEtcStrategy>(K, cfg.d, cfg.ridge_nu,
                                                   cfg.theory_etc_grid.front());
  } else if (strategy_name == "batched_ts") {
    strategy = std::make_unique<BatchedTsStrategy>(s.prior, cfg.noise_std);
  } else {
    std::cerr << "unknown strategy '" << strategy_name << "'\n";
    return 2;
  }

  const EpisodeResult episode =
      run_episode(s.instance, *strategy, s.plan, derive_seed(cfg.seed, tag_from("episode")));
  std::filesystem::create_directories(cfg.out_dir);
  std::ofstream log(cfg.out_dir + "/interactions.csv", std::ios::binary);
  write_interaction_log(episode, s.instance, log);
  if (mpc_ptr != nullptr) {
    std::ofstream trail(cfg.out_dir + "/posterior_trail.txt", std::ios::binary);
    for (const auto& snap : mpc_ptr->posterior_trail()) save_posterior(snap, trail);
    save_posterior(mpc_ptr->posterior(), trail);
    std::cout << "wrote " << cfg.out_dir << "/posterior_trail.txt\n";
  }

  std::cout << "strategy: " << strategy->name() << "\n";
  std::cout << "period regret:";
  for (double r : episode.report.period_regret) std::cout << ' ' << format_sig(r);
  std::cout << "\nrates:";
  for (double r : episode.realized_rates) std::cout << ' ' << format_sig(r);
  std::cout << "\ncumulative regret: " << format_sig(episode.report.cumulative)
            << " (per user " << format_sig(episode.report.mean_per_user()) << ")\n";
  std::cout << "wrote " << cfg.out_dir << "/interactions.csv\n";
  return 0;
}

bool check(const std::string& label, bool ok, int& failures) {
  std::cout << (ok ? "PASS " : "FAIL ") << label << "\n";
  if (!ok) ++failures;
  return ok;
}

int cmd_check(std::uint64_t seed) {
  int failures = 0;
  Rng rng(seed);

  {  // regret nonnegativity on random instances
    bool ok = true;
    for (int trial = 0; trial < 200; ++trial) {
      const int K = rng.uniform_int(1, 5), d = rng.uniform_int(1, 6);
      ItemEmbeddings items;
      items.theta.resize(K, d);
      for (int a = 0; a < K; ++a)
        for (int j = 0; j < d; ++j) items.theta(a, j) = rng.normal();
      Vec x(d), p(K);
      for (int j = 0; j < d; ++j) x[j] = rng.normal();
      double sum = 0.0;
      for (int a = 0; a < K; ++a) sum += (p[a] = rng.uniform01());
      p /= sum;
      if (per_user_regret(x, p, items) < -1e-12) ok = false;
    }
    check("per-user regret nonnegative on random instances", ok, failures);
  }
  {  // projection idempotence and feasibility
    Box box{0.05, 1.0};
    const std::vector<double> v = project({-0.2, 0.02, 0.5, 1.3}, box);
    bool ok = v == std::vector<double>{0.05, 0.05, 0.5, 1.0} && project(v, box) == v;
    check("projection clamps and is idempotent", ok, failures);
  }
  {  // combined-batch vs sequential posterior update
    const GaussianPosterior prior = make_prior(2, 3, 0.0, 1.0, CovMode::Full);
    std::vector<InteractionRecord> batch(6);
    for (auto& r : batch) {
      Vec x(3);
      for (int j = 0; j < 3; ++j) x[j] = rng.normal();
      r = {x, rng.uniform_int(0, 1), rng.normal(), true};
    }
    const GaussianPosterior combined = posterior_update(prior, batch, 1.0);
    const GaussianPosterior seq = posterior_update(
        posterior_update(prior, std::span(batch).subspan(0, 3), 1.0),
        std::span(batch).subspan(3), 1.0);
    bool ok = true;
    for (int a = 0; a < 2; ++a)
      if ((combined.mean[a] - seq.mean[a]).cwiseAbs().maxCoeff() > 1e-10) ok = false;
    check("sequential posterior updates match the combined batch", ok, failures);
  }
  {  // schedule feasibility through the solver
    const GaussianPosterior prior = make_prior(2, 2, 0.0, 1.0);
    ObjectiveConfig obj;
    obj.user_sample = {Vec::Unit(2, 0), Vec::Unit(2, 1)};
    obj.batch_sizes = {50.0, 50.0};
    obj.design = population_design(obj.user_sample, 2, 1.0);
    SolverConfig solver;
    solver.steps = 40;
    solver.step_size = 0.001;
    solver.box = {0.05, 0.9};
    solver.seed = seed;
    const SolveResult solved = sgd_solve(prior, obj, solver, 1);
    bool ok = true;
    for (const auto& it : solved.iterate_trace)
      for (double r : it)
        if (r < 0.05 - 1e-15 || r > 0.9 + 1e-15) ok = false;
    check("every solver iterate stays inside the box", ok, failures);
  }
  {  // posterior snapshot round-trip
    GaussianPosterior post = make_prior(3, 2, 0.25, 2.0);
    std::ostringstream os;
    save_posterior(post, os);
    std::istringstream is(os.str());
    const GaussianPosterior loaded = load_posterior(is);
    bool ok = loaded.period == post.period && loaded.items() == 3;
    for (int a = 0; a < 3 && ok; ++a)
      ok = (loaded.mean[a] - post.mean[a]).cwiseAbs().maxCoeff() == 0.0 &&
           (loaded.diag_precision[a] - post.diag_precision[a]).cwiseAbs().maxCoeff() == 0.0;
    check("posterior snapshot round-trips", ok, failures);
  }

  std::cout << (failures == 0 ? "all checks passed\n" : "checks FAILED\n");
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"batched linear-bandit exploration-schedule toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir, strategy = "planner";
  std::uint64_t seed = 0;
  int workers = 0;
  bool have_seed = false, have_workers = false, have_out = false;

  auto add_common = [&](CLI::App* sub, bool need_config) {
    auto* c = sub->add_option("--config", config_path, "path to a flat-key config file");
    if (need_config) c->required();
    sub->add_option("--seed", seed, "master seed override")->each([&](const std::string&) {
      have_seed = true;
    });
    sub->add_option("--workers", workers, "worker threads")->each([&](const std::string&) {
      have_workers = true;
    });
    sub->add_option("--out", out_dir, "output directory")->each([&](const std::string&) {
      have_out = true;
    });
  };

  CLI::App* run = app.add_subcommand("run", "run the configured sweep and emit reports");
  add_common(run, true);
  CLI::App* solve = app.add_subcommand("solve", "solve one planner schedule and print it");
  add_common(solve, true);
  CLI::App* simulate = app.add_subcommand("simulate", "play one episode with a chosen strategy");
  add_common(simulate, true);
  simulate->add_option("--strategy", strategy, "strategy name");
  CLI::App* chk = app.add_subcommand("check", "run the invariant battery");
  chk->add_option("--seed", seed, "seed for the battery")->each([&](const std::string&) {
    have_seed = true;
  });

  CLI11_PARSE(app, argc, argv);

  try {
    if (chk->parsed()) return cmd_check(have_seed ? seed : 1234);
    ExperimentConfig cfg = load_with_overrides(config_path, have_seed ? &seed : nullptr,
                                               have_workers ? &workers : nullptr,
                                               have_out ? &out_dir : nullptr);
    if (run->parsed()) return cmd_run(cfg);
    if (solve->parsed()) return cmd_solve(cfg);
    if (simulate->parsed()) return cmd_simulate(cfg, strategy);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
