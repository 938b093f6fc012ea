#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "epsopt/common.hpp"
#include "epsopt/model.hpp"
#include "epsopt/policies.hpp"
#include "epsopt/posterior.hpp"
#include "epsopt/rng.hpp"

namespace epsopt {

/// Arrival plan over the horizon: fractions lambda_t of the total scale N,
/// forecast sizes handed to planning strategies, and the realized sizes the
/// simulation actually plays out.
struct BatchPlan {
  int horizon = 0;
  double total_scale = 0.0;        // N
  std::vector<double> fractions;   // lambda, sums to 1
  std::vector<double> forecast;    // n-hat per period (possibly noisy)
  std::vector<int> realized;       // n_t per period

  void validate() const {
    if (horizon < 1 || static_cast<int>(fractions.size()) != horizon)
      throw InputError("BatchPlan: fractions length must equal horizon");
    double sum = 0.0;
    for (double f : fractions) {
      if (!(f >= 0.0)) throw InputError("BatchPlan: negative fraction");
      sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw InputError("BatchPlan: fractions must sum to 1");
    if (static_cast<int>(realized.size()) != horizon)
      throw InputError("BatchPlan: realized sizes missing");
    for (int n : realized)
      if (n < 0) throw InputError("BatchPlan: negative batch size");
  }
};

/// Named arrival patterns. Each keeps its native horizon.
inline std::vector<double> arrival_pattern(const std::string& name) {
  if (name == "increasing") return {0.02, 0.18, 0.20, 0.20, 0.20, 0.20};
  if (name == "spike") return {0.05, 0.35, 0.20, 0.20, 0.20};
  if (name == "constant") return std::vector<double>(10, 0.10);
  throw InputError("arrival_pattern: unknown pattern '" + name + "'");
}

/// Independent Binomial(N, lambda_t) draws.
inline std::vector<int> sample_batch_sizes(int N, const std::vector<double>& fractions, Rng& rng) {
  if (N < 1) throw InputError("sample_batch_sizes: N >= 1 required");
  std::vector<int> out(fractions.size());
  for (std::size_t t = 0; t < fractions.size(); ++t) out[t] = rng.binomial(N, fractions[t]);
  return out;
}

/// Dirichlet draw with parameter concentration * lambda; zero entries are
/// floored at 1e-6 before scaling so the distribution stays proper.
inline std::vector<double> noisy_forecast(const std::vector<double>& fractions,
                                          double concentration, Rng& rng) {
  if (!(concentration > 0.0)) throw InputError("noisy_forecast: concentration must be > 0");
  std::vector<double> draw(fractions.size());
  double sum = 0.0;
  for (std::size_t t = 0; t < fractions.size(); ++t) {
    const double param = concentration * std::max(fractions[t], 1e-6);
    draw[t] = rng.gamma(param);
    sum += draw[t];
  }
  if (sum <= 0.0) throw NumericalError("noisy_forecast: degenerate Dirichlet draw");
  for (double& v : draw) v /= sum;
  return draw;
}

/// Builds a plan from a pattern (or explicit fractions) with forecasts
/// N * lambda_t. Realized sizes must be filled afterwards, either by
/// `sample_batch_sizes` or deterministically via `round`.
inline BatchPlan make_plan(const std::vector<double>& fractions, double N) {
  BatchPlan plan;
  plan.horizon = static_cast<int>(fractions.size());
  plan.total_scale = N;
  plan.fractions = fractions;
  plan.forecast.resize(plan.horizon);
  for (int t = 0; t < plan.horizon; ++t) plan.forecast[t] = N * fractions[t];
  return plan;
}

inline void fill_realized_deterministic(BatchPlan& plan) {
  plan.realized.resize(plan.horizon);
  for (int t = 0; t < plan.horizon; ++t)
    plan.realized[t] = static_cast<int>(std::lround(plan.forecast[t]));
}

/// Item embeddings drawn from the given prior, one per item.
inline ItemEmbeddings draw_items(const GaussianPosterior& prior, Rng& rng) {
  ItemEmbeddings items;
  items.theta.resize(prior.items(), prior.dim());
  for (int a = 0; a < prior.items(); ++a) {
    Vec z(prior.dim());
    for (int j = 0; j < prior.dim(); ++j) z[j] = rng.normal();
    if (prior.mode == CovMode::Diagonal) {
      items.theta.row(a) =
          prior.mean[a] + prior.diag_precision[a].cwiseInverse().cwiseSqrt().cwiseProduct(z);
    } else {
      Eigen::LLT<Mat> llt(prior.covariance(a));
      items.theta.row(a) = prior.mean[a] + Mat(llt.matrixL()) * z;
    }
  }
  return items;
}

/// Users iid standard normal, squared norms kept under `norm_bound` by
/// rejection.
inline std::vector<UserEmbedding> draw_user_pool(int d, int pool_size, double norm_bound,
                                                 Rng& rng) {
  std::vector<UserEmbedding> pool;
  pool.reserve(pool_size);
  while (static_cast<int>(pool.size()) < pool_size) {
    Vec x(d);
    for (int j = 0; j < d; ++j) x[j] = rng.normal();
    if (x.squaredNorm() <= norm_bound) pool.push_back(std::move(x));
  }
  return pool;
}

/// Synthetic world matched to the Bayesian model: when priors agree, the
/// environment's item draw and the planner's belief coincide.
inline BanditInstance synth_instance(int K, int d, int pool_size,
                                     const GaussianPosterior& prior, double norm_bound,
                                     double noise_std, Rng& rng) {
  if (K < 1 || d < 1 || pool_size < 1) throw InputError("synth_instance: sizes must be >= 1");
  if (prior.items() != K || prior.dim() != d)
    throw InputError("synth_instance: prior shape mismatch");
  BanditInstance inst;
  inst.noise_std = noise_std;
  inst.items = draw_items(prior, rng);
  inst.user_pool = draw_user_pool(d, pool_size, norm_bound, rng);
  return inst;
}

/// Per-episode regret accounting. Regret is exact against the oracle: each
/// assigned user contributes r*(x) - x' theta_{A} with no reward noise.
struct RegretReport {
  std::vector<double> period_regret;  // sum over the period's users
  std::vector<int> period_users;
  double cumulative = 0.0;

  double mean_per_user() const {
    const int total = std::accumulate(period_users.begin(), period_users.end(), 0);
    return total > 0 ? cumulative / total : 0.0;
  }
};

struct EpisodeResult {
  std::vector<InteractionRecord> records;
  std::vector<int> record_period;  // period of each record (1-based)
  RegretReport report;
  std::vector<double> realized_rates;
};

/// Runs one batched episode: per period, draw the batch from the pool (with
/// replacement), let the strategy assign, draw noisy rewards, account regret,
/// and only then feed the batch back to the strategy.
inline EpisodeResult run_episode(const BanditInstance& instance, ScheduleStrategy& strategy,
                                 const BatchPlan& plan, std::uint64_t seed) {
  plan.validate();
  strategy.begin(plan.horizon, plan.total_scale);
  EpisodeResult out;
  out.report.period_regret.assign(plan.horizon, 0.0);
  out.report.period_users.assign(plan.horizon, 0);
  const int pool = static_cast<int>(instance.user_pool.size());

  for (int t = 1; t <= plan.horizon; ++t) {
    const int n_t = plan.realized[t - 1];
    Rng rng_users(derive_seed(seed, tag_from("episode.users"), static_cast<std::uint64_t>(t)));
    Rng rng_policy(derive_seed(seed, tag_from("episode.policy"), static_cast<std::uint64_t>(t)));
    Rng rng_reward(derive_seed(seed, tag_from("episode.reward"), static_cast<std::uint64_t>(t)));

    std::vector<UserEmbedding> users(n_t);
    for (int i = 0; i < n_t; ++i) users[i] = instance.user_pool[rng_users.uniform_int(0, pool - 1)];

    const std::uint64_t pre_fingerprint = strategy.estimator_fingerprint();
    const std::vector<Assignment> assigned = strategy.assign_batch(users, rng_policy);
    if (strategy.estimator_fingerprint() != pre_fingerprint)
      throw NumericalError("run_episode: estimator changed within a period");
    if (static_cast<int>(assigned.size()) != n_t)
      throw NumericalError("run_episode: strategy returned wrong batch size");

    std::vector<InteractionRecord> records(n_t);
    for (int i = 0; i < n_t; ++i) {
      const double reward = sample_reward(users[i], assigned[i].action, instance, rng_reward);
      records[i] = {users[i], assigned[i].action, reward, assigned[i].explored};
      out.report.period_regret[t - 1] +=
          oracle_value(users[i], instance.items) -
          expected_reward(users[i], assigned[i].action, instance.items);
    }
    out.report.period_users[t - 1] = n_t;
    strategy.end_period(records);
    out.records.insert(out.records.end(), records.begin(), records.end());
    out.record_period.insert(out.record_period.end(), n_t, t);
  }
  out.report.cumulative =
      std::accumulate(out.report.period_regret.begin(), out.report.period_regret.end(), 0.0);
  out.realized_rates = strategy.realized_rates();
  for (double r : out.realized_rates)
    if (!(r >= 0.0 && r <= 1.0)) throw NumericalError("run_episode: rate outside [0,1]");
  return out;
}

/// CSV export: period, user row index, action, reward, explore flag, running
/// regret.
inline void write_interaction_log(const EpisodeResult& episode, const BanditInstance& instance,
                                  std::ostream& out) {
  out << "period,user,action,reward,explored,running_regret\n";
  double running = 0.0;
  for (std::size_t i = 0; i < episode.records.size(); ++i) {
    const auto& r = episode.records[i];
    running += oracle_value(r.x, instance.items) - expected_reward(r.x, r.action, instance.items);
    out << episode.record_period[i] << ',' << i << ',' << (r.action + 1) << ','
        << format_sig(r.reward) << ',' << (r.explored ? 1 : 0) << ',' << format_sig(running)
        << "\n";
  }
}

}  // namespace epsopt
