#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "epsopt/common.hpp"
#include "epsopt/posterior.hpp"
#include "epsopt/rng.hpp"

namespace epsopt {

/// Per-period exploration rates for periods startPeriod..T.
struct ExplorationSchedule {
  int start_period = 1;
  std::vector<double> rates;

  int horizon() const { return static_cast<int>(rates.size()); }
};

/// Inputs of the schedule objective: a fixed sample of user embeddings, the
/// batch-size forecasts for the remaining periods, the population design
/// matrix, and Monte-Carlo controls.
struct ObjectiveConfig {
  std::vector<UserEmbedding> user_sample;  // m >= 1 embeddings
  std::vector<double> batch_sizes;         // forecast n for each scheduled period
  DesignMatrix design;                     // population design, typically diagonal
  int mc_paths = 1;                        // P
  double sqrt_floor = 1e-12;               // tau, keeps sqrt-gap gradients finite
  std::uint64_t seed = 0;

  void validate(const ExplorationSchedule& sched) const {
    if (user_sample.empty()) throw InputError("ObjectiveConfig: need m >= 1 user embeddings");
    if (batch_sizes.size() != sched.rates.size())
      throw InputError("ObjectiveConfig: batchSizes not aligned with schedule");
    for (double n : batch_sizes)
      if (!(n >= 0.0)) throw InputError("ObjectiveConfig: negative batch size");
    if (mc_paths < 1) throw InputError("ObjectiveConfig: mcPaths >= 1 required");
    if (!(sqrt_floor > 0.0)) throw InputError("ObjectiveConfig: sqrtFloor must be > 0");
  }
};

/// A simulated belief trajectory over the remaining horizon: the
/// deterministic covariance path and one reparameterized draw of the
/// posterior means, with the standard-normal draws that produced it.
struct PosteriorPath {
  int start_period = 1;
  CovMode mode = CovMode::Diagonal;
  std::vector<std::vector<Vec>> variances;    // [s][a] diagonal entries (diag mode)
  std::vector<std::vector<Mat>> covariances;  // [s][a] (full mode)
  std::vector<std::vector<Vec>> means;        // [s][a] sampled beta
  std::vector<std::vector<Vec>> noise;        // [s][a] Z draws
};

namespace detail {

// Prefix sums c_s = sum_{l<s} eps_l * n_l; c_0 = 0.
inline std::vector<double> info_prefix(const ExplorationSchedule& sched,
                                       const std::vector<double>& batch_sizes) {
  std::vector<double> c(sched.rates.size(), 0.0);
  for (std::size_t s = 1; s < c.size(); ++s)
    c[s] = c[s - 1] + sched.rates[s - 1] * batch_sizes[s - 1];
  return c;
}

// Symmetric PSD square root; eigenvalues below -floor are a numerical error,
// small negatives are clamped to zero.
inline Mat psd_sqrt(const Mat& g, double floor) {
  Eigen::SelfAdjointEigenSolver<Mat> es(g);
  if (es.info() != Eigen::Success) throw NumericalError("psd_sqrt: eigendecomposition failed");
  Vec vals = es.eigenvalues();
  for (int j = 0; j < vals.size(); ++j) {
    if (vals[j] < -floor) throw NumericalError("psd_sqrt: negative variance gap beyond floor");
    vals[j] = std::sqrt(std::max(0.0, vals[j]));
  }
  return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace detail

/// Deterministic covariance path under the population-design approximation:
///   Sigma_{s,a}^-1 = Sigma_{t,a}^-1 + sum_{l=t}^{s-1} eps_l n_l I.
/// The first entry (s = t) is the conditioning covariance itself.
inline PosteriorPath covariance_path(const GaussianPosterior& post,
                                     const ExplorationSchedule& sched,
                                     const ObjectiveConfig& cfg) {
  cfg.validate(sched);
  const int H = sched.horizon();
  const int K = post.items();
  const int d = post.dim();
  const auto c = detail::info_prefix(sched, cfg.batch_sizes);
  PosteriorPath path;
  path.start_period = sched.start_period;
  path.mode = post.mode;
  if (post.mode == CovMode::Diagonal) {
    path.variances.assign(H, std::vector<Vec>(K));
    for (int s = 0; s < H; ++s)
      for (int a = 0; a < K; ++a) {
        Vec var(d);
        for (int j = 0; j < d; ++j)
          var[j] = 1.0 / (post.diag_precision[a][j] + c[s] * cfg.design.diag_entry(j));
        path.variances[s][a] = var;
      }
  } else {
    const Mat design = cfg.design.dense();
    path.covariances.assign(H, std::vector<Mat>(K));
    for (int s = 0; s < H; ++s)
      for (int a = 0; a < K; ++a) {
        Eigen::LLT<Mat> llt(Mat(post.precision[a] + c[s] * design));
        if (llt.info() != Eigen::Success)
          throw NumericalError("covariance_path: non-PD precision for item " + std::to_string(a));
        path.covariances[s][a] = llt.solve(Mat::Identity(d, d));
      }
  }
  return path;
}

/// Draws one belief trajectory: beta_{s,a} = beta_{t,a} +
/// (Sigma_{t,a} - Sigma_{s,a} + tau I)^{1/2} Z_{s,a} with independent
/// standard-normal Z per period and item.
inline PosteriorPath sample_posterior_path(const GaussianPosterior& post,
                                           const ExplorationSchedule& sched,
                                           const ObjectiveConfig& cfg, Rng& rng) {
  PosteriorPath path = covariance_path(post, sched, cfg);
  const int H = sched.horizon();
  const int K = post.items();
  const int d = post.dim();
  path.means.assign(H, std::vector<Vec>(K));
  path.noise.assign(H, std::vector<Vec>(K));
  for (int s = 0; s < H; ++s)
    for (int a = 0; a < K; ++a) {
      Vec z(d);
      for (int j = 0; j < d; ++j) z[j] = rng.normal();
      path.noise[s][a] = z;
      if (post.mode == CovMode::Diagonal) {
        const Vec prior_var = post.diag_precision[a].cwiseInverse();
        Vec beta(d);
        for (int j = 0; j < d; ++j) {
          const double gap = prior_var[j] - path.variances[s][a][j] + cfg.sqrt_floor;
          if (gap < 0.0)
            throw NumericalError("sample_posterior_path: negative variance gap beyond floor");
          beta[j] = post.mean[a][j] + std::sqrt(gap) * z[j];
        }
        path.means[s][a] = beta;
      } else {
        const Mat gap = post.covariance(a) - path.covariances[s][a] +
                        cfg.sqrt_floor * Mat::Identity(d, d);
        path.means[s][a] = post.mean[a] + detail::psd_sqrt(gap, cfg.sqrt_floor) * z;
      }
    }
  return path;
}

/// Value and gradient of the Monte-Carlo schedule objective
///   J(eps) = -(1/P) sum_paths sum_s n_s (1/m) sum_i
///              [ eps_s x_i' beta_bar + (1 - eps_s) max_a x_i' beta_{s,a} ]
/// with beta_bar the item-averaged conditioning mean. Minimizing J minimizes
/// Bayesian regret; the schedule-free oracle term is reported separately by
/// the regret estimator below. Value and gradient share the same draws
/// (common random numbers); the gradient requires diagonal mode.
struct ObjectiveEval {
  double value = 0.0;
  std::vector<double> gradient;
};

inline ObjectiveEval objective_eval(const ExplorationSchedule& sched,
                                    const GaussianPosterior& post, const ObjectiveConfig& cfg,
                                    std::uint64_t seed, bool want_gradient) {
  cfg.validate(sched);
  if (want_gradient && post.mode != CovMode::Diagonal)
    throw InputError("objective gradient: full mode supports value evaluation only");
  const int H = sched.horizon();
  const int K = post.items();
  const int d = post.dim();
  const int m = static_cast<int>(cfg.user_sample.size());
  const auto& n = cfg.batch_sizes;

  Mat users(m, d);
  for (int i = 0; i < m; ++i) users.row(i) = cfg.user_sample[i];

  Vec beta_bar = Vec::Zero(d);
  for (int a = 0; a < K; ++a) beta_bar += post.mean[a];
  beta_bar /= static_cast<double>(K);
  const Vec base_score = users * beta_bar;  // x_i' beta_bar

  const auto c = detail::info_prefix(sched, n);

  // Diagonal-mode path quantities, recomputed per path below.
  std::vector<Vec> prior_var(K);
  if (post.mode == CovMode::Diagonal)
    for (int a = 0; a < K; ++a) prior_var[a] = post.diag_precision[a].cwiseInverse();

  ObjectiveEval out;
  out.gradient.assign(want_gradient ? H : 0, 0.0);
  std::vector<double> chain(H, 0.0);  // A_s accumulators, reused per path
  Mat betas(K, d), weights(K, d), scores(m, K);
  const double mean_base = base_score.mean();

  for (int p = 0; p < cfg.mc_paths; ++p) {
    Rng rng(derive_seed(seed, tag_from("objective.path"), static_cast<std::uint64_t>(p)));
    double value_p = 0.0;
    std::fill(chain.begin(), chain.end(), 0.0);

    if (post.mode == CovMode::Diagonal) {
      for (int s = 0; s < H; ++s) {
        for (int a = 0; a < K; ++a)
          for (int j = 0; j < d; ++j) {
            const double z = rng.normal();
            const double var = 1.0 / (post.diag_precision[a][j] + c[s] * cfg.design.diag_entry(j));
            const double gap = prior_var[a][j] - var + cfg.sqrt_floor;
            if (gap < 0.0)
              throw NumericalError("objective: negative variance gap beyond floor");
            betas(a, j) = post.mean[a][j] + std::sqrt(gap) * z;
            if (want_gradient)
              weights(a, j) = z * cfg.design.diag_entry(j) * var * var / (2.0 * std::sqrt(gap));
          }
        scores.noalias() = users * betas.transpose();  // m x K
        double max_sum = 0.0, q_sum = 0.0;
        for (int i = 0; i < m; ++i) {
          int best = 0;
          double best_val = scores(i, 0);
          for (int a = 1; a < K; ++a)
            if (scores(i, a) > best_val) {
              best_val = scores(i, a);
              best = a;
            }
          max_sum += best_val;
          if (want_gradient) q_sum += users.row(i).dot(weights.row(best));
        }
        const double mean_max = max_sum / m;
        value_p -= n[s] * (sched.rates[s] * mean_base + (1.0 - sched.rates[s]) * mean_max);
        if (want_gradient) {
          out.gradient[s] += n[s] * (mean_max - mean_base);         // direct term
          chain[s] = -n[s] * (1.0 - sched.rates[s]) * (q_sum / m);  // downstream factor
        }
      }
      if (want_gradient) {
        double suffix = 0.0;
        for (int l = H - 1; l >= 0; --l) {
          out.gradient[l] += n[l] * suffix;
          suffix += chain[l];
        }
      }
    } else {
      const Mat design = cfg.design.dense();
      std::vector<double> running(m);
      for (int s = 0; s < H; ++s) {
        for (int a = 0; a < K; ++a) {
          Vec z(d);
          for (int j = 0; j < d; ++j) z[j] = rng.normal();
          Eigen::LLT<Mat> llt(Mat(post.precision[a] + c[s] * design));
          if (llt.info() != Eigen::Success)
            throw NumericalError("objective: non-PD precision for item " + std::to_string(a));
          const Mat gap = post.covariance(a) - llt.solve(Mat::Identity(d, d)) +
                          cfg.sqrt_floor * Mat::Identity(d, d);
          const Vec beta = post.mean[a] + detail::psd_sqrt(gap, cfg.sqrt_floor) * z;
          const Vec sc = users * beta;
          for (int i = 0; i < m; ++i)
            running[i] = (a == 0) ? sc[i] : std::max(running[i], sc[i]);
        }
        double max_sum = 0.0;
        for (int i = 0; i < m; ++i) max_sum += running[i];
        value_p -= n[s] * (sched.rates[s] * mean_base + (1.0 - sched.rates[s]) * (max_sum / m));
      }
    }
    out.value += value_p;
  }
  out.value /= cfg.mc_paths;
  if (want_gradient)
    for (double& g : out.gradient) g /= cfg.mc_paths;
  return out;
}

inline double objective_value(const ExplorationSchedule& sched, const GaussianPosterior& post,
                              const ObjectiveConfig& cfg, std::uint64_t seed) {
  return objective_eval(sched, post, cfg, seed, /*want_gradient=*/false).value;
}

inline std::vector<double> objective_gradient(const ExplorationSchedule& sched,
                                              const GaussianPosterior& post,
                                              const ObjectiveConfig& cfg, std::uint64_t seed) {
  return objective_eval(sched, post, cfg, seed, /*want_gradient=*/true).gradient;
}

// --- Bayesian-regret Monte Carlo ------------------------------------------
//
// Estimates the full Bayesian regret
//   J = n E[r*(X)] - sum_s n_s E[ eps_s X'beta_bar + (1-eps_s) max_a X'beta_{s,a} ]
// either with stochastic empirical designs (Bernoulli explore flags,
// uniform item draws; the exact expression) or with the deterministic
// population-design path (the differentiable approximation). Both variants
// share the Z and theta draws at a common seed so their gap isolates the
// design-matrix approximation.

enum class DesignSource { StochasticEmpirical, DeterministicPopulation };

struct BayesRegretConfig {
  std::vector<double> batch_sizes;  // n_l for the scheduled periods
  int paths = 1000;
  double sqrt_floor = 1e-12;
  double noise_std = 1.0;
  std::uint64_t seed = 0;
  DesignSource source = DesignSource::StochasticEmpirical;
  bool include_oracle = true;  // add the schedule-free n E[r*(X)] term
};

struct RegretEstimate {
  double mean = 0.0;
  double se = 0.0;
  int paths = 0;
};

inline RegretEstimate estimate_bayes_regret(const GaussianPosterior& post,
                                            const ExplorationSchedule& sched,
                                            std::span<const UserEmbedding> pool,
                                            const BayesRegretConfig& cfg) {
  const int H = sched.horizon();
  if (static_cast<int>(cfg.batch_sizes.size()) != H)
    throw InputError("estimate_bayes_regret: batch sizes not aligned with schedule");
  if (pool.empty()) throw InputError("estimate_bayes_regret: empty user pool");
  const int K = post.items();
  const int d = post.dim();
  const int m = static_cast<int>(pool.size());

  Mat users(m, d);
  for (int i = 0; i < m; ++i) users.row(i) = pool[i];

  std::vector<Mat> prior_cov(K), prior_prec(K), prior_chol(K);
  for (int a = 0; a < K; ++a) {
    prior_cov[a] = post.covariance(a);
    prior_prec[a] = post.mode == CovMode::Diagonal ? Mat(post.diag_precision[a].asDiagonal())
                                                   : post.precision[a];
    Eigen::LLT<Mat> llt(prior_cov[a]);
    if (llt.info() != Eigen::Success)
      throw NumericalError("estimate_bayes_regret: prior covariance not PD");
    prior_chol[a] = llt.matrixL();
  }

  Vec beta_bar = Vec::Zero(d);
  for (int a = 0; a < K; ++a) beta_bar += post.mean[a];
  beta_bar /= static_cast<double>(K);
  const double mean_base = (users * beta_bar).mean();

  std::vector<long> n_int(H);
  double n_total = 0.0;
  for (int s = 0; s < H; ++s) {
    n_int[s] = std::lround(cfg.batch_sizes[s]);
    n_total += static_cast<double>(n_int[s]);
  }

  const Mat pop_design = population_design(pool, K, cfg.noise_std, /*diagonal=*/false).full;
  const double inv_s2 = 1.0 / (cfg.noise_std * cfg.noise_std);

  double sum = 0.0, sum_sq = 0.0;
  for (int p = 0; p < cfg.paths; ++p) {
    Rng rng_z(derive_seed(cfg.seed, tag_from("regret.z"), static_cast<std::uint64_t>(p)));
    Rng rng_theta(derive_seed(cfg.seed, tag_from("regret.theta"), static_cast<std::uint64_t>(p)));
    Rng rng_design(derive_seed(cfg.seed, tag_from("regret.design"), static_cast<std::uint64_t>(p)));

    // Cumulative designs per item along the horizon.
    std::vector<Mat> cum(K, Mat::Zero(d, d));
    double value = 0.0;

    if (cfg.include_oracle) {
      double oracle = 0.0;
      Mat theta(K, d);
      for (int a = 0; a < K; ++a) {
        Vec z(d);
        for (int j = 0; j < d; ++j) z[j] = rng_theta.normal();
        theta.row(a) = post.mean[a] + prior_chol[a] * z;
      }
      const Mat sc = users * theta.transpose();
      for (int i = 0; i < m; ++i) oracle += sc.row(i).maxCoeff();
      value += n_total * (oracle / m);
    }

    for (int s = 0; s < H; ++s) {
      // Sample beta_{s,a} from its marginal given the cumulative design.
      double max_sum = 0.0;
      std::vector<double> running(m, 0.0);
      for (int a = 0; a < K; ++a) {
        Vec z(d);
        for (int j = 0; j < d; ++j) z[j] = rng_z.normal();
        Eigen::LLT<Mat> llt(Mat(prior_prec[a] + cum[a]));
        if (llt.info() != Eigen::Success)
          throw NumericalError("estimate_bayes_regret: non-PD precision");
        const Mat cov_s = llt.solve(Mat::Identity(d, d));
        const Mat gap = prior_cov[a] - cov_s + cfg.sqrt_floor * Mat::Identity(d, d);
        const Vec beta = post.mean[a] + detail::psd_sqrt(gap, cfg.sqrt_floor) * z;
        const Vec sc = users * beta;
        for (int i = 0; i < m; ++i)
          running[i] = (a == 0) ? sc[i] : std::max(running[i], sc[i]);
      }
      for (int i = 0; i < m; ++i) max_sum += running[i];
      value -= n_int[s] * (sched.rates[s] * mean_base + (1.0 - sched.rates[s]) * (max_sum / m));

      // Accumulate this period's design for future periods.
      if (cfg.source == DesignSource::StochasticEmpirical) {
        for (long i = 0; i < n_int[s]; ++i) {
          const bool explored = rng_design.bernoulli(sched.rates[s]);
          if (!explored) continue;
          const int a = rng_design.uniform_int(0, K - 1);
          const int u = rng_design.uniform_int(0, m - 1);
          cum[a].noalias() += inv_s2 * users.row(u).transpose() * users.row(u);
        }
      } else {
        const Mat add = sched.rates[s] * static_cast<double>(n_int[s]) * pop_design;
        for (int a = 0; a < K; ++a) cum[a] += add;
      }
    }
    sum += value;
    sum_sq += value * value;
  }
  RegretEstimate out;
  out.paths = cfg.paths;
  out.mean = sum / cfg.paths;
  const double var = std::max(0.0, sum_sq / cfg.paths - out.mean * out.mean);
  out.se = std::sqrt(var / cfg.paths);
  return out;
}

/// Debug dump of a sampled path as a sequence of posterior snapshots.
inline void dump_path(const PosteriorPath& path, std::ostream& out) {
  const int H = static_cast<int>(path.means.size());
  for (int s = 0; s < H; ++s) {
    GaussianPosterior snap;
    snap.period = path.start_period + s;
    snap.mode = path.mode;
    snap.mean = path.means[s];
    if (path.mode == CovMode::Diagonal) {
      snap.diag_precision.resize(path.means[s].size());
      for (std::size_t a = 0; a < path.means[s].size(); ++a)
        snap.diag_precision[a] = path.variances[s][a].cwiseInverse();
    } else {
      snap.precision.resize(path.means[s].size());
      for (std::size_t a = 0; a < path.means[s].size(); ++a) {
        Eigen::LLT<Mat> llt(path.covariances[s][a]);
        snap.precision[a] =
            llt.solve(Mat::Identity(path.covariances[s][a].rows(), path.covariances[s][a].cols()));
      }
    }
    save_posterior(snap, out);
  }
}

}  // namespace epsopt
