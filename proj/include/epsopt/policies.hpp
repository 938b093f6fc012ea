#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "epsopt/common.hpp"
#include "epsopt/model.hpp"
#include "epsopt/objective.hpp"
#include "epsopt/optimizer.hpp"
#include "epsopt/posterior.hpp"

namespace epsopt {

struct Assignment {
  int action = 0;
  bool explored = false;
};

/// Ridge solution over explore-group rows assigned item a:
/// (X'X + nu I)^-1 X'R; the zero vector when no rows match.
inline Vec ridge_fit(std::span<const InteractionRecord> history, int a, double nu, int d) {
  if (!(nu > 0.0)) throw InputError("ridge_fit: nu must be > 0");
  Mat xtx = Mat::Zero(d, d);
  Vec xtr = Vec::Zero(d);
  for (const auto& r : history) {
    if (!r.explored || r.action != a) continue;
    xtx.noalias() += r.x * r.x.transpose();
    xtr += r.reward * r.x;
  }
  xtx.diagonal().array() += nu;
  return Eigen::LLT<Mat>(xtx).solve(xtr);
}

namespace detail {
inline std::uint64_t hash_double(std::uint64_t h, double v) {
  std::uint64_t bits;
  static_assert(sizeof(bits) == sizeof(v));
  std::memcpy(&bits, &v, sizeof(bits));
  return splitmix64(h ^ bits);
}
inline std::uint64_t hash_vec(std::uint64_t h, const Vec& v) {
  for (int i = 0; i < v.size(); ++i) h = hash_double(h, v[i]);
  return h;
}
inline std::uint64_t hash_mat(std::uint64_t h, const Mat& m) {
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) h = hash_double(h, m(i, j));
  return h;
}
}  // namespace detail

/// Incremental per-item ridge state. Estimates refresh only when new rows
/// arrive, so assignments within a period all see the same coefficients.
class RidgeAccumulator {
 public:
  RidgeAccumulator(int K, int d, double nu, bool include_exploit = false)
      : nu_(nu), include_exploit_(include_exploit), xtx_(K, Mat::Zero(d, d)),
        xtr_(K, Vec::Zero(d)), estimates_(Mat::Zero(K, d)) {
    if (!(nu > 0.0)) throw InputError("RidgeAccumulator: nu must be > 0");
  }

  void add(std::span<const InteractionRecord> records) {
    bool any = false;
    for (const auto& r : records) {
      if (!r.explored && !include_exploit_) continue;
      xtx_[r.action].noalias() += r.x * r.x.transpose();
      xtr_[r.action] += r.reward * r.x;
      any = true;
    }
    if (any) refit();
  }

  /// K x d matrix of coefficients, row a = theta_hat_a.
  const Mat& estimates() const { return estimates_; }

  void set_estimates(const Mat& theta_hat) { estimates_ = theta_hat; }

  std::uint64_t fingerprint() const {
    std::uint64_t h = 0x9d3f;
    for (const auto& m : xtx_) h = detail::hash_mat(h, m);
    for (const auto& v : xtr_) h = detail::hash_vec(h, v);
    h = detail::hash_mat(h, estimates_);
    return h;
  }

 private:
  void refit() {
    for (std::size_t a = 0; a < xtx_.size(); ++a) {
      Mat reg = xtx_[a];
      reg.diagonal().array() += nu_;
      estimates_.row(a) = Eigen::LLT<Mat>(reg).solve(xtr_[a]);
    }
  }

  double nu_;
  bool include_exploit_;
  std::vector<Mat> xtx_;
  std::vector<Vec> xtr_;
  Mat estimates_;
};

/// One user under the uniform-exploration policy: with probability eps a
/// uniformly random item (explore group), otherwise the greedy item under
/// theta_hat with ties to the lowest index.
inline Assignment uniform_policy_assign(const UserEmbedding& x, double eps, const Mat& theta_hat,
                                        Rng& rng) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw InputError("uniform_policy_assign: eps outside [0,1]");
  const int K = static_cast<int>(theta_hat.rows());
  if (rng.uniform01() < eps) return {rng.uniform_int(0, K - 1), true};
  int best = 0;
  double best_val = theta_hat.row(0).dot(x);
  for (int a = 1; a < K; ++a) {
    const double v = theta_hat.row(a).dot(x);
    if (v > best_val) {
      best_val = v;
      best = a;
    }
  }
  return {best, false};
}

/// Explore-then-commit fractional rate: spend the remaining budget on this
/// batch, clamped to [0,1]. An empty batch explores nothing.
inline double etc_rate(double budget, double spent, double n_t) {
  if (!(budget >= 0.0)) throw InputError("etc_rate: budget must be >= 0");
  if (n_t <= 0.0) return 0.0;
  return clamp01((budget - spent) / n_t);
}

/// Theory-guided ETC budget B = c d^{1/3} N^{2/3}.
inline double theory_etc_budget(double c, double d, double N) {
  if (!(c > 0.0)) throw InputError("theory_etc_budget: c must be > 0");
  return c * std::cbrt(d) * std::cbrt(N) * std::cbrt(N);
}

/// One posterior draw shared by the whole batch; every user gets the item
/// maximizing x' theta_tilde_a.
inline std::vector<int> batched_ts_assign(const GaussianPosterior& post,
                                          std::span<const UserEmbedding> users, Rng& rng) {
  const int K = post.items();
  const int d = post.dim();
  Mat theta(K, d);
  for (int a = 0; a < K; ++a) {
    Vec z(d);
    for (int j = 0; j < d; ++j) z[j] = rng.normal();
    if (post.mode == CovMode::Diagonal) {
      theta.row(a) =
          post.mean[a] + post.diag_precision[a].cwiseInverse().cwiseSqrt().cwiseProduct(z);
    } else {
      Eigen::LLT<Mat> llt(post.covariance(a));
      theta.row(a) = post.mean[a] + Mat(llt.matrixL()) * z;
    }
  }
  std::vector<int> actions(users.size());
  for (std::size_t i = 0; i < users.size(); ++i) {
    int best = 0;
    double best_val = theta.row(0).dot(users[i]);
    for (int a = 1; a < K; ++a) {
      const double v = theta.row(a).dot(users[i]);
      if (v > best_val) {
        best_val = v;
        best = a;
      }
    }
    actions[i] = best;
  }
  return actions;
}

// --- schedule strategies ----------------------------------------------------

/// A policy advanced period by period: assign the current batch, then receive
/// the batch's outcomes once, at the period boundary. Single-owner mutable
/// state; run distinct replications on distinct instances.
class ScheduleStrategy {
 public:
  virtual ~ScheduleStrategy() = default;
  virtual std::string name() const = 0;

  /// Called once before the first period. `horizon` is the plan's T and
  /// `total_scale` its N.
  virtual void begin(int horizon, double total_scale) {
    horizon_ = horizon;
    total_scale_ = total_scale;
    period_ = 1;
    realized_rates_.clear();
  }

  virtual std::vector<Assignment> assign_batch(std::span<const UserEmbedding> users, Rng& rng) = 0;

  virtual void end_period(std::span<const InteractionRecord> records) = 0;

  /// Exploration rate deployed in each elapsed period (0 for policies without
  /// a uniform-exploration branch).
  const std::vector<double>& realized_rates() const { return realized_rates_; }

  /// Hash of the assignment-relevant estimator state; must not change between
  /// period boundaries (batched-feedback contract).
  virtual std::uint64_t estimator_fingerprint() const = 0;

  int current_period() const { return period_; }

 protected:
  int horizon_ = 0;
  double total_scale_ = 0.0;
  int period_ = 1;
  std::vector<double> realized_rates_;
};

/// Common machinery for uniform-exploration strategies with ridge-greedy
/// exploitation: subclasses only pick the per-period rate.
class UniformExplorationStrategy : public ScheduleStrategy {
 public:
  UniformExplorationStrategy(int K, int d, double nu, bool include_exploit = false)
      : ridge_(K, d, nu, include_exploit) {}

  void begin(int horizon, double total_scale) override {
    ScheduleStrategy::begin(horizon, total_scale);
    spent_ = 0.0;
  }

  std::vector<Assignment> assign_batch(std::span<const UserEmbedding> users, Rng& rng) override {
    const double eps = rate_for(period_, static_cast<double>(users.size()));
    if (!(eps >= 0.0 && eps <= 1.0))
      throw NumericalError(name() + ": emitted rate outside [0,1]");
    realized_rates_.push_back(eps);
    spent_ += eps * static_cast<double>(users.size());
    std::vector<Assignment> out(users.size());
    for (std::size_t i = 0; i < users.size(); ++i)
      out[i] = uniform_policy_assign(users[i], eps, ridge_.estimates(), rng);
    return out;
  }

  void end_period(std::span<const InteractionRecord> records) override {
    ridge_.add(records);
    ++period_;
  }

  std::uint64_t estimator_fingerprint() const override { return ridge_.fingerprint(); }

  RidgeAccumulator& ridge() { return ridge_; }

 protected:
  virtual double rate_for(int period, double n_t) = 0;

  double spent_ = 0.0;  // sum of eps_s * n_s over elapsed periods

 private:
  RidgeAccumulator ridge_;
};

class EpsGreedyStrategy : public UniformExplorationStrategy {
 public:
  EpsGreedyStrategy(int K, int d, double nu, double eps, bool include_exploit = false)
      : UniformExplorationStrategy(K, d, nu, include_exploit), eps_(eps) {
    if (!(eps >= 0.0 && eps <= 1.0)) throw InputError("EpsGreedy: eps outside [0,1]");
  }
  std::string name() const override { return "eps_greedy"; }

 protected:
  double rate_for(int, double) override { return eps_; }

 private:
  double eps_;
};

class TheoryEtcStrategy : public UniformExplorationStrategy {
 public:
  TheoryEtcStrategy(int K, int d, double nu, double c, bool include_exploit = false)
      : UniformExplorationStrategy(K, d, nu, include_exploit), c_(c), d_(d) {}
  std::string name() const override { return "theory_etc"; }

  void begin(int horizon, double total_scale) override {
    UniformExplorationStrategy::begin(horizon, total_scale);
    budget_ = theory_etc_budget(c_, static_cast<double>(d_), total_scale);
    spent_ = 0.0;
  }

 protected:
  double rate_for(int, double n_t) override { return etc_rate(budget_, spent_, n_t); }

 private:
  double c_;
  int d_;
  double budget_ = 0.0;
};

class SimpleEtcStrategy : public UniformExplorationStrategy {
 public:
  SimpleEtcStrategy(int K, int d, double nu, bool include_exploit = false)
      : UniformExplorationStrategy(K, d, nu, include_exploit) {}
  std::string name() const override { return "simple_etc"; }

 protected:
  double rate_for(int period, double) override { return period == 1 ? 1.0 : 0.0; }
};

/// Deploys a precomputed schedule open-loop (a one-shot optimizer solve, a
/// fixed benchmark schedule, ...).
class PlannerStrategy : public UniformExplorationStrategy {
 public:
  PlannerStrategy(int K, int d, double nu, ExplorationSchedule schedule,
                  bool include_exploit = false)
      : UniformExplorationStrategy(K, d, nu, include_exploit), schedule_(std::move(schedule)) {}
  std::string name() const override { return "planner"; }

  void begin(int horizon, double total_scale) override {
    UniformExplorationStrategy::begin(horizon, total_scale);
    if (schedule_.horizon() != horizon)
      throw InputError("planner: schedule horizon does not match the plan");
  }

  const ExplorationSchedule& schedule() const { return schedule_; }

 protected:
  double rate_for(int period, double) override { return schedule_.rates[period - 1]; }

 private:
  ExplorationSchedule schedule_;
};

/// Seed for the schedule solve issued at a given period. Shared between the
/// planner (period 1) and the MPC controller so that, with identical inputs,
/// their first solves coincide.
inline std::uint64_t period_solver_seed(std::uint64_t base, int period) {
  return derive_seed(base, tag_from("schedule.solver"), static_cast<std::uint64_t>(period));
}

struct MpcConfig {
  GaussianPosterior prior;
  std::vector<UserEmbedding> user_sample;
  DesignMatrix design;
  std::vector<double> forecasts;  // one per period, full horizon
  SolverConfig solver;
  int mc_paths = 1;
  double sqrt_floor = 1e-12;
  double ridge_nu = 1.0;
  bool ridge_include_exploit = false;
  double noise_std = 1.0;
  std::uint64_t seed = 0;  // base for per-period solver seeds
};

/// Receding-horizon controller: re-solves the schedule on the current
/// posterior every period, deploys only the first rate, and folds the
/// period's explore data back into the belief. A failed solve falls back to
/// the previous plan's rate for the period and is logged.
class MpcStrategy : public UniformExplorationStrategy {
 public:
  MpcStrategy(int K, int d, MpcConfig cfg)
      : UniformExplorationStrategy(K, d, cfg.ridge_nu, cfg.ridge_include_exploit),
        cfg_(std::move(cfg)), posterior_(cfg_.prior) {}

  std::string name() const override { return "mpc"; }

  void begin(int horizon, double total_scale) override {
    UniformExplorationStrategy::begin(horizon, total_scale);
    if (static_cast<int>(cfg_.forecasts.size()) != horizon)
      throw InputError("mpc: forecast horizon does not match the plan");
    posterior_ = cfg_.prior;
    previous_plan_.clear();
    planned_.clear();
    trail_.clear();
    faults_.clear();
  }

  void end_period(std::span<const InteractionRecord> records) override {
    posterior_ = posterior_update(posterior_, records, cfg_.noise_std);
    UniformExplorationStrategy::end_period(records);
  }

  std::uint64_t estimator_fingerprint() const override {
    std::uint64_t h = UniformExplorationStrategy::estimator_fingerprint();
    for (int a = 0; a < posterior_.items(); ++a) h = detail::hash_vec(h, posterior_.mean[a]);
    return h;
  }

  const GaussianPosterior& posterior() const { return posterior_; }
  const std::vector<GaussianPosterior>& posterior_trail() const { return trail_; }
  const std::vector<std::vector<double>>& plans() const { return planned_; }
  const std::vector<std::string>& faults() const { return faults_; }

 protected:
  double rate_for(int period, double) override {
    trail_.push_back(posterior_);
    const int remaining = horizon_ - period + 1;
    ObjectiveConfig obj;
    obj.user_sample = cfg_.user_sample;
    obj.batch_sizes.assign(cfg_.forecasts.begin() + (period - 1), cfg_.forecasts.end());
    obj.design = cfg_.design;
    obj.mc_paths = cfg_.mc_paths;
    obj.sqrt_floor = cfg_.sqrt_floor;

    SolverConfig solver = cfg_.solver;
    solver.seed = period_solver_seed(cfg_.seed, period);
    if (!previous_plan_.empty()) {
      // Warm start: drop the consumed first coordinate, replicate the last.
      std::vector<double> warm(previous_plan_.begin() + 1, previous_plan_.end());
      if (static_cast<int>(warm.size()) < remaining)
        warm.push_back(previous_plan_.back());
      warm.resize(remaining, previous_plan_.back());
      solver.warm_start = std::move(warm);
    }

    double rate;
    try {
      SolveResult solved = sgd_solve(posterior_, obj, solver, period);
      previous_plan_ = solved.schedule.rates;
      rate = previous_plan_.front();
    } catch (const NumericalError& e) {
      faults_.push_back("period " + std::to_string(period) + ": " + e.what());
      if (previous_plan_.size() > 1) previous_plan_.erase(previous_plan_.begin());
      rate = previous_plan_.empty() ? 0.5 * (cfg_.solver.box.lo + cfg_.solver.box.hi)
                                    : previous_plan_.front();
    }
    planned_.push_back(previous_plan_);
    return rate;
  }

 private:
  MpcConfig cfg_;
  GaussianPosterior posterior_;
  std::vector<double> previous_plan_;
  std::vector<std::vector<double>> planned_;
  std::vector<GaussianPosterior> trail_;
  std::vector<std::string> faults_;
};

/// Batched Thompson sampling: one posterior draw per period assigns the whole
/// batch; the update consumes all batch data.
class BatchedTsStrategy : public ScheduleStrategy {
 public:
  BatchedTsStrategy(GaussianPosterior prior, double noise_std)
      : prior_(std::move(prior)), posterior_(prior_), noise_std_(noise_std) {}

  std::string name() const override { return "batched_ts"; }

  void begin(int horizon, double total_scale) override {
    ScheduleStrategy::begin(horizon, total_scale);
    posterior_ = prior_;
  }

  std::vector<Assignment> assign_batch(std::span<const UserEmbedding> users, Rng& rng) override {
    realized_rates_.push_back(0.0);
    const std::vector<int> actions = batched_ts_assign(posterior_, users, rng);
    std::vector<Assignment> out(users.size());
    for (std::size_t i = 0; i < users.size(); ++i) out[i] = {actions[i], false};
    return out;
  }

  void end_period(std::span<const InteractionRecord> records) override {
    posterior_ = posterior_update(posterior_, records, noise_std_, UpdateData::AllData);
    ++period_;
  }

  std::uint64_t estimator_fingerprint() const override {
    std::uint64_t h = 0xb5;
    for (int a = 0; a < posterior_.items(); ++a) h = detail::hash_vec(h, posterior_.mean[a]);
    return h;
  }

  const GaussianPosterior& posterior() const { return posterior_; }

 private:
  GaussianPosterior prior_;
  GaussianPosterior posterior_;
  double noise_std_;
};

// --- standalone MPC loop ----------------------------------------------------

/// Environment callbacks for driving the controller without coupling it to a
/// concrete simulator.
struct EnvHooks {
  std::function<std::vector<UserEmbedding>(int period, Rng&)> draw_batch;
  std::function<double(const UserEmbedding&, int action, Rng&)> draw_reward;
};

struct MpcRunArtifacts {
  std::vector<double> realized_rates;
  std::vector<std::vector<double>> plans;
  std::vector<GaussianPosterior> posterior_trail;
  std::vector<InteractionRecord> log;
  std::vector<std::string> faults;
};

inline MpcRunArtifacts mpc_controller(int K, int d, const MpcConfig& cfg, const EnvHooks& hooks,
                                      std::uint64_t seed) {
  MpcStrategy strategy(K, d, cfg);
  const int T = static_cast<int>(cfg.forecasts.size());
  double total = 0.0;
  for (double n : cfg.forecasts) total += n;
  strategy.begin(T, total);

  MpcRunArtifacts out;
  for (int t = 1; t <= T; ++t) {
    Rng rng_users(derive_seed(seed, tag_from("mpc.users"), static_cast<std::uint64_t>(t)));
    Rng rng_policy(derive_seed(seed, tag_from("mpc.policy"), static_cast<std::uint64_t>(t)));
    Rng rng_reward(derive_seed(seed, tag_from("mpc.reward"), static_cast<std::uint64_t>(t)));
    const std::vector<UserEmbedding> users = hooks.draw_batch(t, rng_users);
    const std::vector<Assignment> assigned = strategy.assign_batch(users, rng_policy);
    std::vector<InteractionRecord> records(users.size());
    for (std::size_t i = 0; i < users.size(); ++i) {
      records[i] = {users[i], assigned[i].action,
                    hooks.draw_reward(users[i], assigned[i].action, rng_reward),
                    assigned[i].explored};
    }
    strategy.end_period(records);
    out.log.insert(out.log.end(), records.begin(), records.end());
  }
  out.realized_rates = strategy.realized_rates();
  out.plans = strategy.plans();
  out.posterior_trail = strategy.posterior_trail();
  out.posterior_trail.push_back(strategy.posterior());
  out.faults = strategy.faults();
  return out;
}

}  // namespace epsopt
