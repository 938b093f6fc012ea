#pragma once

#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "epsopt/common.hpp"
#include "epsopt/model.hpp"

namespace epsopt {

enum class CovMode { Diagonal, Full };

/// Which interaction records a posterior update may consume. Explore-only is
/// the default: the belief conditions exclusively on uniformly-assigned data.
/// AllData exists for batched Thompson sampling, which updates on the whole
/// batch.
enum class UpdateData { ExploreOnly, AllData };

/// Information matrix. Either the per-item empirical accumulation
/// I_{t,a} = s^-2 sum_i xi_i 1{A_i=a} x_i x_i', or the population limit
/// of one uniformly-explored sample, s^-2 K^-1 E[XX']. Diagonal variants
/// keep only the d diagonal entries.
struct DesignMatrix {
  enum class Kind { Population, Empirical };

  Kind kind = Kind::Population;
  bool diagonal = false;
  Mat full;  // d x d when !diagonal
  Vec diag;  // d when diagonal

  int dim() const { return diagonal ? static_cast<int>(diag.size()) : static_cast<int>(full.rows()); }
  double diag_entry(int j) const { return diagonal ? diag[j] : full(j, j); }

  /// The dense matrix view regardless of storage.
  Mat dense() const { return diagonal ? Mat(diag.asDiagonal()) : full; }
};

/// Gaussian belief over the K item embeddings at the start of period
/// `period`, block-diagonal across items. Covariances are held as
/// precisions: the conjugate recursion is additive in precision, so updates
/// accumulate and inversion happens once per covariance query.
struct GaussianPosterior {
  int period = 1;
  CovMode mode = CovMode::Diagonal;
  std::vector<Vec> mean;            // K vectors of dim d
  std::vector<Vec> diag_precision;  // diagonal mode: K vectors of dim d
  std::vector<Mat> precision;       // full mode: K matrices d x d

  int items() const { return static_cast<int>(mean.size()); }
  int dim() const { return mean.empty() ? 0 : static_cast<int>(mean[0].size()); }

  Vec covariance_diag(int a) const {
    if (mode == CovMode::Diagonal) return diag_precision[a].cwiseInverse();
    return covariance(a).diagonal();
  }

  Mat covariance(int a) const {
    if (mode == CovMode::Diagonal) return Mat(diag_precision[a].cwiseInverse().asDiagonal());
    Eigen::LLT<Mat> llt(precision[a]);
    if (llt.info() != Eigen::Success)
      throw NumericalError("posterior covariance not PD for item " + std::to_string(a));
    return llt.solve(Mat::Identity(dim(), dim()));
  }
};

/// Prior with beta_1 = mean0 (broadcast to every item) and
/// Sigma_1 = diag(variance0).
inline GaussianPosterior make_prior(int K, int d, const Vec& mean0, const Vec& variance0,
                                    CovMode mode = CovMode::Diagonal) {
  if (K < 1 || d < 1) throw InputError("make_prior: need K >= 1 and d >= 1");
  if (mean0.size() != d || variance0.size() != d) throw InputError("make_prior: dimension mismatch");
  for (int j = 0; j < d; ++j)
    if (!(variance0[j] > 0.0)) throw InputError("make_prior: prior variance must be > 0");
  GaussianPosterior post;
  post.period = 1;
  post.mode = mode;
  post.mean.assign(K, mean0);
  if (mode == CovMode::Diagonal) {
    post.diag_precision.assign(K, variance0.cwiseInverse());
  } else {
    post.precision.assign(K, Mat(variance0.cwiseInverse().asDiagonal()));
  }
  return post;
}

inline GaussianPosterior make_prior(int K, int d, double mean0, double variance0,
                                    CovMode mode = CovMode::Diagonal) {
  return make_prior(K, d, Vec::Constant(d, mean0), Vec::Constant(d, variance0), mode);
}

/// Empirical design for item a over one batch: only explore-group rows with
/// A_i = a contribute (unless `data` says otherwise).
inline DesignMatrix empirical_design(std::span<const InteractionRecord> batch, int a,
                                     double noise_std, int d, bool diagonal = false,
                                     UpdateData data = UpdateData::ExploreOnly) {
  DesignMatrix out;
  out.kind = DesignMatrix::Kind::Empirical;
  out.diagonal = diagonal;
  const double w = 1.0 / (noise_std * noise_std);
  if (diagonal) {
    out.diag = Vec::Zero(d);
    for (const auto& r : batch)
      if ((r.explored || data == UpdateData::AllData) && r.action == a)
        out.diag += w * r.x.cwiseAbs2();
  } else {
    out.full = Mat::Zero(d, d);
    for (const auto& r : batch)
      if ((r.explored || data == UpdateData::AllData) && r.action == a)
        out.full.noalias() += w * r.x * r.x.transpose();
  }
  return out;
}

/// Population design s^-2 K^-1 E[XX'], with the plug-in empirical second
/// moment of `user_sample` standing in for E[XX'].
inline DesignMatrix population_design(std::span<const UserEmbedding> user_sample, int K,
                                      double noise_std, bool diagonal = true) {
  if (user_sample.empty()) throw InputError("population_design: empty user sample");
  if (K < 1) throw InputError("population_design: K >= 1 required");
  const int d = static_cast<int>(user_sample[0].size());
  const double w = 1.0 / (noise_std * noise_std * K * static_cast<double>(user_sample.size()));
  DesignMatrix out;
  out.kind = DesignMatrix::Kind::Population;
  out.diagonal = diagonal;
  if (diagonal) {
    out.diag = Vec::Zero(d);
    for (const auto& x : user_sample) out.diag += w * x.cwiseAbs2();
  } else {
    out.full = Mat::Zero(d, d);
    for (const auto& x : user_sample) out.full.noalias() += w * x * x.transpose();
  }
  return out;
}

/// Exact conjugate batch update. For each item,
///   Sigma_{t+1,a}^-1 = Sigma_{t,a}^-1 + I_{t,a}
///   beta_{t+1,a}     = Sigma_{t+1,a} (Sigma_{t,a}^-1 beta_{t,a} + s^-2 sum xi 1{A=a} R x)
/// and the period advances by one. An empty batch only advances the period.
inline GaussianPosterior posterior_update(const GaussianPosterior& post,
                                          std::span<const InteractionRecord> batch,
                                          double noise_std,
                                          UpdateData data = UpdateData::ExploreOnly) {
  GaussianPosterior next = post;
  next.period = post.period + 1;
  const int d = post.dim();
  const double w = 1.0 / (noise_std * noise_std);
  for (int a = 0; a < post.items(); ++a) {
    Vec b = Vec::Zero(d);
    for (const auto& r : batch)
      if ((r.explored || data == UpdateData::AllData) && r.action == a) b += w * r.reward * r.x;
    const DesignMatrix design =
        empirical_design(batch, a, noise_std, d, post.mode == CovMode::Diagonal, data);
    if (post.mode == CovMode::Diagonal) {
      const Vec new_prec = post.diag_precision[a] + design.diag;
      for (int j = 0; j < d; ++j)
        if (!(new_prec[j] > 0.0))
          throw NumericalError("posterior_update: nonpositive precision for item " +
                               std::to_string(a));
      next.diag_precision[a] = new_prec;
      next.mean[a] =
          (post.diag_precision[a].cwiseProduct(post.mean[a]) + b).cwiseQuotient(new_prec);
    } else {
      const Mat new_prec = post.precision[a] + design.full;
      Eigen::LLT<Mat> llt(new_prec);
      if (llt.info() != Eigen::Success)
        throw NumericalError("posterior_update: covariance inversion failed for item " +
                             std::to_string(a));
      next.precision[a] = new_prec;
      next.mean[a] = llt.solve(post.precision[a] * post.mean[a] + b);
    }
  }
  return next;
}

/// x' beta_{t,a}.
inline double posterior_predictive_mean(const GaussianPosterior& post, const UserEmbedding& x,
                                        int a) {
  if (a < 0 || a >= post.items()) throw InputError("posterior_predictive_mean: item out of range");
  if (x.size() != post.dim()) throw InputError("posterior_predictive_mean: dimension mismatch");
  return post.mean[a].dot(x);
}

// --- snapshot text format (v1), used for MPC checkpointing -----------------
//
//   epsopt.posterior.v1
//   period <t>
//   items <K> dim <d> mode <diag|full>
//   item <a>
//   mean <d reals>
//   cov  <d reals>            (diag mode: one row; full mode: d rows)

inline void save_posterior(const GaussianPosterior& post, std::ostream& out) {
  out << "epsopt.posterior.v1\n";
  out << "period " << post.period << "\n";
  out << "items " << post.items() << " dim " << post.dim() << " mode "
      << (post.mode == CovMode::Diagonal ? "diag" : "full") << "\n";
  for (int a = 0; a < post.items(); ++a) {
    out << "item " << a << "\n";
    out << "mean";
    for (int j = 0; j < post.dim(); ++j) out << ' ' << format_exact(post.mean[a][j]);
    out << "\n";
    if (post.mode == CovMode::Diagonal) {
      const Vec cov = post.covariance_diag(a);
      out << "cov";
      for (int j = 0; j < post.dim(); ++j) out << ' ' << format_exact(cov[j]);
      out << "\n";
    } else {
      const Mat cov = post.covariance(a);
      for (int i = 0; i < post.dim(); ++i) {
        out << "cov";
        for (int j = 0; j < post.dim(); ++j) out << ' ' << format_exact(cov(i, j));
        out << "\n";
      }
    }
  }
}

inline GaussianPosterior load_posterior(std::istream& in) {
  auto fail = [](const std::string& what) -> void { throw IoError("posterior snapshot: " + what); };
  std::string line, word;
  if (!std::getline(in, line) || line != "epsopt.posterior.v1") fail("bad or missing version line");
  GaussianPosterior post;
  int K = 0, d = 0;
  {
    std::getline(in, line);
    std::istringstream ls(line);
    if (!(ls >> word >> post.period) || word != "period") fail("expected period line");
  }
  {
    std::getline(in, line);
    std::istringstream ls(line);
    std::string mode;
    if (!(ls >> word >> K) || word != "items") fail("expected items line");
    if (!(ls >> word >> d) || word != "dim") fail("expected dim field");
    if (!(ls >> word >> mode) || word != "mode") fail("expected mode field");
    post.mode = (mode == "diag") ? CovMode::Diagonal : CovMode::Full;
    if (mode != "diag" && mode != "full") fail("unknown mode '" + mode + "'");
  }
  post.mean.assign(K, Vec::Zero(d));
  if (post.mode == CovMode::Diagonal)
    post.diag_precision.assign(K, Vec::Ones(d));
  else
    post.precision.assign(K, Mat::Identity(d, d));

  auto read_tagged_row = [&](const std::string& tag, Vec& row) {
    if (!std::getline(in, line)) fail("truncated snapshot");
    std::istringstream ls(line);
    if (!(ls >> word) || word != tag) fail("expected '" + tag + "' row");
    row.resize(d);
    for (int j = 0; j < d; ++j)
      if (!(ls >> row[j])) fail("short '" + tag + "' row");
  };

  for (int a = 0; a < K; ++a) {
    int idx = -1;
    if (!std::getline(in, line)) fail("truncated snapshot");
    {
      std::istringstream ls(line);
      if (!(ls >> word >> idx) || word != "item" || idx != a) fail("expected item header");
    }
    Vec row;
    read_tagged_row("mean", row);
    post.mean[a] = row;
    if (post.mode == CovMode::Diagonal) {
      read_tagged_row("cov", row);
      for (int j = 0; j < d; ++j)
        if (!(row[j] > 0.0)) fail("nonpositive covariance entry");
      post.diag_precision[a] = row.cwiseInverse();
    } else {
      Mat cov(d, d);
      for (int i = 0; i < d; ++i) {
        read_tagged_row("cov", row);
        cov.row(i) = row;
      }
      Eigen::LLT<Mat> llt(cov);
      if (llt.info() != Eigen::Success) fail("covariance not PD");
      post.precision[a] = llt.solve(Mat::Identity(d, d));
    }
  }
  return post;
}

}  // namespace epsopt
