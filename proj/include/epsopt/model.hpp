#pragma once

#include <istream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "epsopt/common.hpp"
#include "epsopt/rng.hpp"

namespace epsopt {

/// User feature vector. Frozen inputs; the model never learns these.
using UserEmbedding = Vec;

/// Ground-truth item embeddings, one d-vector per item (row a of `theta`).
struct ItemEmbeddings {
  Mat theta;  // K x d

  int items() const { return static_cast<int>(theta.rows()); }
  int dim() const { return static_cast<int>(theta.cols()); }

  void validate() const {
    if (items() < 1 || dim() < 1) throw InputError("ItemEmbeddings: need K >= 1 and d >= 1");
    if (!all_finite(theta)) throw InputError("ItemEmbeddings: non-finite entry");
  }
};

/// A fully specified bandit world: truth embeddings, the finite user pool
/// that stands in for the user distribution, and the reward-noise scale.
struct BanditInstance {
  ItemEmbeddings items;
  std::vector<UserEmbedding> user_pool;
  double noise_std = 1.0;

  void validate(double norm_bound = std::numeric_limits<double>::infinity()) const {
    items.validate();
    if (user_pool.empty()) throw InputError("BanditInstance: empty user pool");
    if (!(noise_std > 0.0)) throw InputError("BanditInstance: noiseStd must be > 0");
    for (const auto& x : user_pool) {
      if (x.size() != items.dim()) throw InputError("BanditInstance: user dimension mismatch");
      if (!all_finite(x)) throw InputError("BanditInstance: non-finite user embedding");
      if (x.squaredNorm() > norm_bound)
        throw InputError("BanditInstance: user squared norm exceeds bound");
    }
  }
};

/// One user interaction. `explored` is the xi flag: true when the action came
/// from the uniform-exploration branch.
struct InteractionRecord {
  UserEmbedding x;
  int action = 0;  // 0-based item index
  double reward = 0.0;
  bool explored = false;
};

inline void check_action(int a, const ItemEmbeddings& items) {
  if (a < 0 || a >= items.items()) throw InputError("item index out of range");
}

/// x' theta_a, the noiseless reward.
inline double expected_reward(const UserEmbedding& x, int a, const ItemEmbeddings& items) {
  check_action(a, items);
  if (x.size() != items.dim()) throw InputError("expected_reward: dimension mismatch");
  return items.theta.row(a).dot(x);
}

/// Noisy observation x' theta_a + eta, eta ~ N(0, noise_std^2).
inline double sample_reward(const UserEmbedding& x, int a, const BanditInstance& instance,
                            Rng& rng) {
  return expected_reward(x, a, instance.items) + instance.noise_std * rng.normal();
}

/// Index of the best item for x; ties broken toward the lowest index.
inline int argmax_item(const UserEmbedding& x, const ItemEmbeddings& items) {
  if (x.size() != items.dim()) throw InputError("argmax_item: dimension mismatch");
  int best = 0;
  double best_val = items.theta.row(0).dot(x);
  for (int a = 1; a < items.items(); ++a) {
    const double v = items.theta.row(a).dot(x);
    if (v > best_val) {
      best_val = v;
      best = a;
    }
  }
  return best;
}

/// max_a x' theta_a.
inline double oracle_value(const UserEmbedding& x, const ItemEmbeddings& items) {
  return expected_reward(x, argmax_item(x, items), items);
}

/// Regret of a randomized assignment: oracle value minus the expected reward
/// under `action_dist`. Nonnegative for every valid distribution.
inline double per_user_regret(const UserEmbedding& x, const Vec& action_dist,
                              const ItemEmbeddings& items) {
  if (action_dist.size() != items.items())
    throw InputError("per_user_regret: distribution length != K");
  double sum = 0.0;
  for (int a = 0; a < action_dist.size(); ++a) {
    if (!(action_dist[a] >= 0.0)) throw InputError("per_user_regret: negative probability");
    sum += action_dist[a];
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw InputError("per_user_regret: probabilities must sum to 1 (got " + format_sig(sum, 12) +
                     ")");
  double mean = 0.0;
  for (int a = 0; a < items.items(); ++a) mean += action_dist[a] * expected_reward(x, a, items);
  return oracle_value(x, items) - mean;
}

namespace detail {
inline double parse_real_strict(const std::string& tok) {
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    throw InputError("embedding file: bad number '" + tok + "'");
  }
  if (pos != tok.size()) throw InputError("embedding file: bad number '" + tok + "'");
  if (!std::isfinite(v)) throw InputError("embedding file: NaN/Inf rejected");
  return v;
}
}  // namespace detail

/// Parses the embedding text format: a header `d=<int> K=<int>`, then K item
/// rows of d reals, then one row of d reals per user until EOF. NaN/Inf are
/// rejected; the user norm bound is checked at ingestion (no rescaling).
inline BanditInstance load_embeddings(std::istream& in, double noise_std = 1.0,
                                      double norm_bound = std::numeric_limits<double>::infinity()) {
  std::string header;
  if (!std::getline(in, header)) throw InputError("embedding file: missing header");
  int d = -1, K = -1;
  {
    std::istringstream hs(header);
    std::string tok;
    while (hs >> tok) {
      if (tok.rfind("d=", 0) == 0)
        d = std::stoi(tok.substr(2));
      else if (tok.rfind("K=", 0) == 0)
        K = std::stoi(tok.substr(2));
      else
        throw InputError("embedding file: unexpected header token '" + tok + "'");
    }
  }
  if (d < 1 || K < 1) throw InputError("embedding file: header must give d>=1 and K>=1");

  auto read_row = [&](const std::string& line) {
    std::istringstream ls(line);
    Vec row(d);
    std::string tok;
    for (int j = 0; j < d; ++j) {
      if (!(ls >> tok)) throw InputError("embedding file: short row");
      row[j] = detail::parse_real_strict(tok);
    }
    if (ls >> tok) throw InputError("embedding file: row has more than d entries");
    return row;
  };

  BanditInstance inst;
  inst.items.theta.resize(K, d);
  inst.noise_std = noise_std;
  std::string line;
  int items_read = 0;
  while (items_read < K && std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    inst.items.theta.row(items_read++) = read_row(line);
  }
  if (items_read < K) throw InputError("embedding file: fewer than K item rows");
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    inst.user_pool.push_back(read_row(line));
  }
  inst.validate(norm_bound);
  return inst;
}

}  // namespace epsopt
