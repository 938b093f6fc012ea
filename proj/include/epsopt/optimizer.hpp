#pragma once

#include <cmath>
#include <ostream>
#include <vector>

#include "epsopt/common.hpp"
#include "epsopt/objective.hpp"

namespace epsopt {

/// Feasible box for every coordinate of an exploration schedule.
struct Box {
  double lo = 0.0;
  double hi = 1.0;

  void validate() const {
    if (!(0.0 <= lo && lo <= hi && hi <= 1.0))
      throw InputError("Box: need 0 <= lo <= hi <= 1");
  }
};

/// Elementwise clamp onto the box.
inline std::vector<double> project(std::vector<double> v, const Box& box) {
  box.validate();
  for (double& x : v) x = std::min(box.hi, std::max(box.lo, x));
  return v;
}

struct SolverConfig {
  int steps = 300;          // L
  double step_size = 0.05;  // alpha
  Box box;
  // Initialization: warm_start when non-empty, otherwise a constant fill.
  // NaN init_value means "midpoint of the box".
  std::vector<double> warm_start;
  double init_value = std::numeric_limits<double>::quiet_NaN();
  double momentum = 0.0;          // optional, 0.9 typical when enabled
  bool decay_after_half = true;   // 1/sqrt(k) step decay after L/2
  int eval_paths = 256;           // held-out final objective estimate
  std::uint64_t seed = 0;

  void validate() const {
    if (steps < 1) throw InputError("SolverConfig: L >= 1 required");
    if (!(step_size >= 0.0)) throw InputError("SolverConfig: step size must be >= 0");
    box.validate();
  }
};

struct SolveResult {
  ExplorationSchedule schedule;
  double final_objective = 0.0;          // evaluated on a held-out seed
  std::vector<double> objective_trace;   // per-step MC objective at the iterate
  std::vector<std::vector<double>> iterate_trace;  // schedule after each step
};

/// Algorithm: L iterations of eps <- Proj_box(eps - alpha * grad J(eps)),
/// with fresh Z draws every step and exactly L steps (no early stopping).
inline SolveResult sgd_solve(const GaussianPosterior& post, const ObjectiveConfig& cfg,
                             const SolverConfig& solver, int start_period = 1) {
  solver.validate();
  const int H = static_cast<int>(cfg.batch_sizes.size());
  if (H < 1) throw InputError("sgd_solve: empty horizon");

  ExplorationSchedule sched;
  sched.start_period = start_period;
  if (!solver.warm_start.empty()) {
    if (static_cast<int>(solver.warm_start.size()) != H)
      throw InputError("sgd_solve: warm start length != horizon");
    sched.rates = solver.warm_start;
  } else {
    const double fill = std::isnan(solver.init_value)
                            ? 0.5 * (solver.box.lo + solver.box.hi)
                            : solver.init_value;
    sched.rates.assign(H, fill);
  }
  sched.rates = project(std::move(sched.rates), solver.box);

  SolveResult out;
  out.objective_trace.reserve(solver.steps);
  out.iterate_trace.reserve(solver.steps + 1);
  out.iterate_trace.push_back(sched.rates);

  std::vector<double> velocity(H, 0.0);
  const int half = solver.steps / 2;
  for (int k = 0; k < solver.steps; ++k) {
    const std::uint64_t step_seed =
        derive_seed(solver.seed, tag_from("sgd.step"), static_cast<std::uint64_t>(k));
    const ObjectiveEval eval = objective_eval(sched, post, cfg, step_seed, /*want_gradient=*/true);
    out.objective_trace.push_back(eval.value);
    double alpha = solver.step_size;
    if (solver.decay_after_half && k >= half) alpha /= std::sqrt(static_cast<double>(k - half + 1));
    for (int l = 0; l < H; ++l) {
      if (!std::isfinite(eval.gradient[l]))
        throw NumericalError("sgd_solve: non-finite gradient at step " + std::to_string(k) +
                             ", coordinate " + std::to_string(l));
      velocity[l] = solver.momentum * velocity[l] + eval.gradient[l];
      sched.rates[l] -= alpha * velocity[l];
    }
    sched.rates = project(std::move(sched.rates), solver.box);
    out.iterate_trace.push_back(sched.rates);
  }

  ObjectiveConfig eval_cfg = cfg;
  eval_cfg.mc_paths = solver.eval_paths;
  out.final_objective = objective_value(sched, post, eval_cfg,
                                        derive_seed(solver.seed, tag_from("sgd.eval")));
  out.schedule = std::move(sched);
  return out;
}

/// Per-step trace as CSV: step, objective, then the schedule coordinates.
inline void write_trace_csv(const SolveResult& result, std::ostream& out) {
  const int H = result.schedule.horizon();
  out << "step,objective";
  for (int l = 0; l < H; ++l) out << ",eps_" << (l + 1);
  out << "\n";
  for (std::size_t k = 0; k < result.objective_trace.size(); ++k) {
    out << k << ',' << format_sig(result.objective_trace[k]);
    for (int l = 0; l < H; ++l) out << ',' << format_sig(result.iterate_trace[k][l]);
    out << "\n";
  }
}

}  // namespace epsopt
