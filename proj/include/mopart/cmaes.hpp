#ifndef MOPART_CMAES_HPP
#define MOPART_CMAES_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mopart/partition.hpp"
#include "mopart/rng.hpp"

namespace mopart {

// Canonical (mu/mu_w, lambda) covariance-matrix-adaptation state. The
// decomposition C = B diag(D^2) B^T is refreshed after every update with
// eigenvalues floored at 1e-12 so the distribution stays usable.
struct CmaesState {
  Eigen::VectorXd mean;
  double sigma = 0.3;
  Eigen::MatrixXd C;
  Eigen::VectorXd p_sigma, p_c;
  int generation = 0;
  int lambda = 0, mu = 0;
  Eigen::VectorXd weights;  // size mu, positive, non-increasing, sums to 1
  double mu_eff = 0.0, c_sigma = 0.0, d_sigma = 0.0, c_c = 0.0, c1 = 0.0,
         c_mu = 0.0, chi_n = 0.0;
  Eigen::MatrixXd B;  // eigenbasis of C
  Eigen::VectorXd D;  // sqrt of C's eigenvalues

  std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }
};

inline int cmaes_default_lambda(std::size_t d) {
  return 4 + static_cast<int>(std::floor(3.0 * std::log(static_cast<double>(d))));
}

namespace detail {

inline void cmaes_refresh_decomposition(CmaesState& st) {
  st.C = 0.5 * (st.C + st.C.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(st.C);
  Eigen::VectorXd evals = eig.eigenvalues().cwiseMax(1e-12);
  st.B = eig.eigenvectors();
  st.D = evals.cwiseSqrt();
  st.C = st.B * evals.asDiagonal() * st.B.transpose();
}

}  // namespace detail

inline CmaesState cmaes_init(const DesignVector& mean, double sigma,
                             int lambda = 0) {
  const std::size_t d = mean.size();
  if (d == 0) throw std::invalid_argument("cmaes_init: empty mean");
  if (!(sigma > 0.0)) throw std::invalid_argument("cmaes_init: sigma <= 0");
  CmaesState st;
  st.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), d);
  st.sigma = sigma;
  st.lambda = lambda > 0 ? lambda : cmaes_default_lambda(d);
  if (st.lambda < 2) throw std::invalid_argument("cmaes_init: lambda < 2");
  st.mu = st.lambda / 2;
  st.weights.resize(st.mu);
  for (int i = 0; i < st.mu; ++i)
    st.weights[i] = std::log(st.mu + 0.5) - std::log(i + 1.0);
  st.weights /= st.weights.sum();
  st.mu_eff = 1.0 / st.weights.squaredNorm();
  const double dn = static_cast<double>(d);
  st.c_sigma = (st.mu_eff + 2.0) / (dn + st.mu_eff + 5.0);
  st.d_sigma = 1.0 +
               2.0 * std::max(0.0, std::sqrt((st.mu_eff - 1.0) / (dn + 1.0)) -
                                       1.0) +
               st.c_sigma;
  st.c_c = (4.0 + st.mu_eff / dn) / (dn + 4.0 + 2.0 * st.mu_eff / dn);
  st.c1 = 2.0 / ((dn + 1.3) * (dn + 1.3) + st.mu_eff);
  st.c_mu = std::min(1.0 - st.c1,
                     2.0 * (st.mu_eff - 2.0 + 1.0 / st.mu_eff) /
                         ((dn + 2.0) * (dn + 2.0) + st.mu_eff));
  st.chi_n = std::sqrt(dn) * (1.0 - 1.0 / (4.0 * dn) + 1.0 / (21.0 * dn * dn));
  st.C = Eigen::MatrixXd::Identity(d, d);
  st.p_sigma = Eigen::VectorXd::Zero(d);
  st.p_c = Eigen::VectorXd::Zero(d);
  detail::cmaes_refresh_decomposition(st);
  return st;
}

// Initialization anchored to a tree leaf: mean at the centroid of the
// leaf's samples, step size at 0.3 of the mean domain width.
inline CmaesState cmaes_init_for_leaf(const PartitionTree& tree,
                                      std::size_t leaf_id, int lambda = 0) {
  const TreeNode& leaf = tree.node(leaf_id);
  if (leaf.sample_ids.empty())
    throw std::invalid_argument("cmaes_init_for_leaf: empty leaf");
  const std::size_t d = tree.domain().dimension();
  DesignVector mean(d, 0.0);
  for (std::uint64_t sid : leaf.sample_ids) {
    const auto& x = tree.sample_by_id(sid).x;
    for (std::size_t i = 0; i < d; ++i) mean[i] += x[i];
  }
  double width = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    mean[i] /= static_cast<double>(leaf.sample_ids.size());
    width += tree.domain().relaxed_upper(i) - tree.domain().relaxed_lower(i);
  }
  return cmaes_init(mean, 0.3 * width / static_cast<double>(d), lambda);
}

struct CmaesAsk {
  std::vector<DesignVector> candidates;
  std::vector<bool> penalized;  // clamped into the domain after cap exhaustion
};

// Draws q candidates from the current search distribution, constrained to
// the leaf's region. Out-of-box or out-of-region draws are resampled under a
// shared total-draw cap; once the cap is spent a draw is snapped into the
// domain and marked penalized. Categorical encodings are decoded by
// round-to-nearest before the region test, so returned candidates are
// always valid domain points.
inline CmaesAsk cmaes_ask(const CmaesState& st, const PartitionTree& tree,
                          std::size_t leaf_id, std::size_t q, std::size_t cap,
                          std::uint64_t rng_seed,
                          const std::function<bool(const DesignVector&)>&
                              reject = nullptr) {
  if (q == 0) throw std::invalid_argument("cmaes_ask: q == 0");
  if (cap < q) throw std::invalid_argument("cmaes_ask: cap < q");
  const SearchDomain& domain = tree.domain();
  const std::size_t d = st.dim();
  if (d != domain.dimension())
    throw std::invalid_argument("cmaes_ask: dimension mismatch");
  SplitMix64 rng(rng_seed);
  CmaesAsk out;
  std::size_t draws = 0;

  auto in_box = [&](const Eigen::VectorXd& x) {
    for (std::size_t i = 0; i < d; ++i)
      if (x[i] < domain.relaxed_lower(i) || x[i] > domain.relaxed_upper(i))
        return false;
    return true;
  };

  for (std::size_t slot = 0; slot < q; ++slot) {
    DesignVector chosen;
    bool penal = true;
    for (;;) {
      Eigen::VectorXd z(d);
      for (std::size_t i = 0; i < d; ++i) z[i] = rng.normal();
      Eigen::VectorXd x =
          st.mean + st.sigma * (st.B * (st.D.asDiagonal() * z));
      ++draws;
      DesignVector decoded =
          domain.snap(DesignVector(x.data(), x.data() + d));
      const bool ok = in_box(x) && tree.region_membership(leaf_id, decoded) &&
                      !(reject && reject(decoded));
      if (ok) {
        chosen = std::move(decoded);
        penal = false;
        break;
      }
      if (draws >= cap) {  // spend the remaining budget on a snapped draw
        chosen = std::move(decoded);
        penal = true;
        break;
      }
    }
    out.candidates.push_back(std::move(chosen));
    out.penalized.push_back(penal);
  }
  return out;
}

// Standard CMA-ES update from an evaluated population. Fitness is minimized;
// ties resolve by input index. The population size must equal lambda.
inline void cmaes_tell(CmaesState& st,
                       const std::vector<std::pair<DesignVector, double>>&
                           evaluated) {
  if (evaluated.size() != static_cast<std::size_t>(st.lambda))
    throw std::invalid_argument("cmaes_tell: population size != lambda");
  const std::size_t d = st.dim();
  for (const auto& [x, f] : evaluated)
    if (x.size() != d)
      throw std::invalid_argument("cmaes_tell: dimension mismatch");

  std::vector<std::size_t> order(evaluated.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return evaluated[a].second < evaluated[b].second;
                   });

  const Eigen::VectorXd mean_old = st.mean;
  Eigen::MatrixXd Y(d, st.mu);  // selected steps in sigma units
  for (int i = 0; i < st.mu; ++i) {
    const auto& x = evaluated[order[i]].first;
    Eigen::Map<const Eigen::VectorXd> xv(x.data(), d);
    Y.col(i) = (xv - mean_old) / st.sigma;
  }
  const Eigen::VectorXd y_w = Y * st.weights;
  st.mean = mean_old + st.sigma * y_w;

  // C^{-1/2} = B D^{-1} B^T via the cached decomposition.
  const Eigen::VectorXd c_inv_sqrt_yw =
      st.B * st.D.cwiseInverse().asDiagonal() * (st.B.transpose() * y_w);
  st.p_sigma = (1.0 - st.c_sigma) * st.p_sigma +
               std::sqrt(st.c_sigma * (2.0 - st.c_sigma) * st.mu_eff) *
                   c_inv_sqrt_yw;

  const double ps_norm = st.p_sigma.norm();
  const double denom = std::sqrt(
      1.0 - std::pow(1.0 - st.c_sigma, 2.0 * (st.generation + 1)));
  const bool h_sigma =
      ps_norm / denom <
      (1.4 + 2.0 / (static_cast<double>(d) + 1.0)) * st.chi_n;

  st.p_c = (1.0 - st.c_c) * st.p_c +
           (h_sigma ? std::sqrt(st.c_c * (2.0 - st.c_c) * st.mu_eff) : 0.0) *
               y_w;

  Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < st.mu; ++i)
    rank_mu.noalias() += st.weights[i] * Y.col(i) * Y.col(i).transpose();
  const double c1a =
      st.c1 * (1.0 - (h_sigma ? 0.0 : 1.0) * st.c_c * (2.0 - st.c_c));
  st.C = (1.0 - c1a - st.c_mu) * st.C +
         st.c1 * (st.p_c * st.p_c.transpose()) + st.c_mu * rank_mu;

  st.sigma *= std::exp((st.c_sigma / st.d_sigma) * (ps_norm / st.chi_n - 1.0));
  ++st.generation;
  detail::cmaes_refresh_decomposition(st);
}

}  // namespace mopart

#endif  // MOPART_CMAES_HPP
