#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "epsopt/optimizer.hpp"
#include "epsopt/posterior.hpp"

using namespace epsopt;

namespace {

// The fixed T = 2 instance used for grid-oracle comparisons: d = 2, K = 2
// with distinct prior means, eight fixed users, arrivals (60, 140).
struct GridInstance {
  GaussianPosterior prior;
  ObjectiveConfig obj;
};

GridInstance grid_instance() {
  GridInstance g;
  g.prior = make_prior(2, 2, 0.0, 1.0);
  g.prior.mean[0] << 0.3, 0.1;
  g.prior.mean[1] << 0.0, 0.2;
  Rng rng(20240305);
  g.obj.user_sample.resize(8);
  for (auto& x : g.obj.user_sample) {
    Vec v(2);
    v << rng.normal(), rng.normal();
    x = v;
  }
  g.obj.batch_sizes = {60.0, 140.0};
  g.obj.design = population_design(g.obj.user_sample, 2, 1.0, /*diagonal=*/true);
  g.obj.mc_paths = 4;
  return g;
}

}  // namespace

TEST_CASE("projection clamps elementwise") {
  CHECK(project({-0.2, 1.3}, {0.0, 1.0}) == std::vector<double>{0.0, 1.0});
  CHECK(project({0.02, 0.5}, {0.05, 1.0}) == std::vector<double>{0.05, 0.5});
  const std::vector<double> feasible = {0.1, 0.9};
  CHECK(project(feasible, {0.0, 1.0}) == feasible);  // idempotent on feasible points
  CHECK_THROWS_AS(project({0.5}, Box{0.4, 0.2}), InputError);
}

TEST_CASE("solver iterates stay feasible and respect the seed") {
  GridInstance g = grid_instance();
  SolverConfig solver;
  solver.steps = 60;
  solver.step_size = 0.05 / 200.0;
  solver.box = {0.05, 0.95};
  solver.seed = 5;
  const SolveResult a = sgd_solve(g.prior, g.obj, solver, 1);
  for (const auto& it : a.iterate_trace)
    for (double r : it) {
      CHECK(r >= 0.05);
      CHECK(r <= 0.95);
    }
  const SolveResult b = sgd_solve(g.prior, g.obj, solver, 1);
  CHECK(a.schedule.rates == b.schedule.rates);
  CHECK(a.final_objective == b.final_objective);
}

TEST_CASE("zero step size returns the initialization") {
  GridInstance g = grid_instance();
  SolverConfig solver;
  solver.steps = 10;
  solver.step_size = 0.0;
  solver.seed = 3;
  const SolveResult r = sgd_solve(g.prior, g.obj, solver, 1);
  CHECK(r.schedule.rates == std::vector<double>{0.5, 0.5});

  solver.warm_start = {0.2, 0.8};
  const SolveResult w = sgd_solve(g.prior, g.obj, solver, 1);
  CHECK(w.schedule.rates == std::vector<double>{0.2, 0.8});
}

TEST_CASE("single remaining period drives the rate to the lower bound") {
  GridInstance g = grid_instance();
  g.obj.batch_sizes = {150.0};
  SolverConfig solver;
  solver.steps = 200;
  solver.step_size = 0.05 / 150.0;
  solver.box = {0.0, 1.0};
  solver.seed = 6;
  const SolveResult r = sgd_solve(g.prior, g.obj, solver, 1);
  REQUIRE(r.schedule.rates.size() == 1);
  CHECK(r.schedule.rates[0] <= 0.01);
}

TEST_CASE("single item: iterates stay put statistically") {
  GridInstance g = grid_instance();
  g.prior = make_prior(1, 2, 0.2, 1.0);
  SolverConfig solver;
  solver.steps = 120;
  solver.step_size = 0.05 / 200.0;
  solver.seed = 7;
  const SolveResult r = sgd_solve(g.prior, g.obj, solver, 1);
  for (double rate : r.schedule.rates) {
    CHECK(rate >= 0.0);
    CHECK(rate <= 1.0);
  }
  // evaluate start and end iterates on a common seed with many paths
  ObjectiveConfig eval = g.obj;
  eval.mc_paths = 4000;
  ExplorationSchedule start{1, r.iterate_trace.front()};
  const double j0 = objective_value(start, g.prior, eval, 99);
  const double j1 = objective_value(r.schedule, g.prior, eval, 99);
  // per-path std is bounded by a few units here; 3 SE with 4000 paths
  CHECK(std::abs(j1 - j0) <= 3.0 * 200.0 / std::sqrt(4000.0));
}

TEST_CASE("objective trend over the solve is nonincreasing within noise") {
  GridInstance g = grid_instance();
  SolverConfig solver;
  solver.steps = 200;
  solver.step_size = 0.05 / 200.0;
  solver.seed = 11;
  const SolveResult r = sgd_solve(g.prior, g.obj, solver, 1);

  ObjectiveConfig eval = g.obj;
  eval.mc_paths = 1;
  auto value_se = [&](const std::vector<double>& rates, double& se) {
    ExplorationSchedule sched{1, rates};
    const int paths = 3000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < paths; ++i) {
      const double v =
          objective_value(sched, g.prior, eval, derive_seed(123, static_cast<std::uint64_t>(i)));
      sum += v;
      sum_sq += v * v;
    }
    const double mean = sum / paths;
    se = std::sqrt(std::max(0.0, sum_sq / paths - mean * mean) / paths);
    return mean;
  };
  double se0 = 0.0, se_mid = 0.0, se_end = 0.0;
  const double j0 = value_se(r.iterate_trace[0], se0);
  const double j_mid = value_se(r.iterate_trace[solver.steps / 2], se_mid);
  const double j_end = value_se(r.iterate_trace[solver.steps], se_end);
  CHECK(j_mid <= j0 + 3.0 * std::sqrt(se0 * se0 + se_mid * se_mid));
  CHECK(j_end <= j_mid + 3.0 * std::sqrt(se_mid * se_mid + se_end * se_end));
}

TEST_CASE("momentum variant stays feasible and deterministic") {
  GridInstance g = grid_instance();
  SolverConfig solver;
  solver.steps = 80;
  solver.step_size = 0.02 / 200.0;
  solver.momentum = 0.9;
  solver.box = {0.0, 1.0};
  solver.seed = 21;
  const SolveResult a = sgd_solve(g.prior, g.obj, solver, 1);
  const SolveResult b = sgd_solve(g.prior, g.obj, solver, 1);
  CHECK(a.schedule.rates == b.schedule.rates);
  for (const auto& it : a.iterate_trace)
    for (double r : it) {
      CHECK(r >= 0.0);
      CHECK(r <= 1.0);
    }
}

TEST_CASE("non-finite gradients abort with a diagnostic") {
  GridInstance g = grid_instance();
  const double inf = std::numeric_limits<double>::infinity();
  g.obj.batch_sizes = {inf, inf};  // blows up the direct gradient terms
  SolverConfig solver;
  solver.steps = 3;
  solver.step_size = 1.0;
  solver.seed = 2;
  CHECK_THROWS_AS(sgd_solve(g.prior, g.obj, solver, 1), NumericalError);
}

TEST_CASE("trace CSV has one row per step") {
  GridInstance g = grid_instance();
  SolverConfig solver;
  solver.steps = 5;
  solver.step_size = 0.0001;
  solver.seed = 8;
  const SolveResult r = sgd_solve(g.prior, g.obj, solver, 1);
  std::ostringstream os;
  write_trace_csv(r, os);
  int lines = 0;
  std::string line;
  std::istringstream is(os.str());
  while (std::getline(is, line)) ++lines;
  CHECK(lines == 1 + 5);
}
