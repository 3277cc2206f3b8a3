#ifndef MOPART_GP_HPP
#define MOPART_GP_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mopart/core.hpp"

namespace mopart {

// Raised when the kernel matrix stays non-positive-definite after the
// jitter escalation ladder. Callers are expected to fall back to a
// non-surrogate sampling strategy.
struct GpFitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Single-output Gaussian-process regressor with an isotropic RBF kernel.
// Hyperparameters (lengthscale, signal variance) are fit by fixed-step
// gradient ascent on the log marginal likelihood; observation noise is a
// fixed jitter that escalates tenfold when the Cholesky factorization
// fails, up to three times.
class GpRegressor {
 public:
  struct Posterior {
    double mean = 0.0;
    double var = 0.0;
  };

  static GpRegressor fit(const std::vector<DesignVector>& X,
                         const std::vector<double>& y, int ascent_steps = 50,
                         double init_lengthscale = 0.5,
                         double init_jitter = 1e-6) {
    const std::size_t n = X.size();
    if (n == 0 || y.size() != n)
      throw std::invalid_argument("GpRegressor::fit: empty or ragged data");
    const std::size_t d = X[0].size();
    for (const auto& row : X)
      if (row.size() != d)
        throw std::invalid_argument("GpRegressor::fit: ragged inputs");

    GpRegressor m;
    m.X_.resize(n, d);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) m.X_(i, j) = X[i][j];
    Eigen::VectorXd yv(n);
    for (std::size_t i = 0; i < n; ++i) yv[i] = y[i];
    m.mean_y_ = yv.mean();
    const Eigen::VectorXd yc = yv.array() - m.mean_y_;

    Eigen::MatrixXd d2(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      d2(i, i) = 0.0;
      for (std::size_t j = i + 1; j < n; ++j) {
        const double s = (m.X_.row(i) - m.X_.row(j)).squaredNorm();
        d2(i, j) = s;
        d2(j, i) = s;
      }
    }

    constexpr double kLogLo = -6.907755278982137;  // ln 1e-3
    constexpr double kLogHi = 6.907755278982137;   // ln 1e3
    double log_ell = std::log(init_lengthscale);
    double log_sf2 = 0.0;
    m.jitter_ = init_jitter;
    int escalations = 0;

    Eigen::MatrixXd K(n, n);
    Eigen::LLT<Eigen::MatrixXd> llt;
    auto factor = [&](double ell, double sf2) {
      const Eigen::MatrixXd ks =
          sf2 * (-d2.array() / (2.0 * ell * ell)).exp().matrix();
      for (;;) {
        K = ks;
        K.diagonal().array() += m.jitter_;
        llt.compute(K);
        if (llt.info() == Eigen::Success) return ks;
        if (escalations >= 3)
          throw GpFitError("GpRegressor: kernel matrix not PD after jitter escalation");
        m.jitter_ *= 10.0;
        ++escalations;
      }
    };

    for (int step = 0; step < ascent_steps; ++step) {
      const double ell = std::exp(log_ell), sf2 = std::exp(log_sf2);
      const Eigen::MatrixXd ks = factor(ell, sf2);
      const Eigen::VectorXd alpha = llt.solve(yc);
      const Eigen::MatrixXd kinv =
          llt.solve(Eigen::MatrixXd::Identity(n, n));
      const Eigen::MatrixXd g = alpha * alpha.transpose() - kinv;
      const double grad_sf2 = 0.5 * g.cwiseProduct(ks).sum();
      const Eigen::MatrixXd dk_ell =
          ks.cwiseProduct((d2.array() / (ell * ell)).matrix());
      const double grad_ell = 0.5 * g.cwiseProduct(dk_ell).sum();
      // Fixed-rate ascent with a per-step trust bound keeps the fit stable
      // when the trace terms grow with n.
      auto bounded = [](double v) { return std::clamp(v, -0.5, 0.5); };
      log_ell = std::clamp(log_ell + bounded(0.1 * grad_ell), kLogLo, kLogHi);
      log_sf2 = std::clamp(log_sf2 + bounded(0.1 * grad_sf2), kLogLo, kLogHi);
    }

    m.ell_ = std::exp(log_ell);
    m.sf2_ = std::exp(log_sf2);
    factor(m.ell_, m.sf2_);
    m.L_ = llt.matrixL();
    m.alpha_ = llt.solve(yc);
    return m;
  }

  Posterior predict(const DesignVector& x) const {
    const std::size_t n = static_cast<std::size_t>(X_.rows());
    if (x.size() != static_cast<std::size_t>(X_.cols()))
      throw std::invalid_argument("GpRegressor::predict: dimension mismatch");
    Eigen::Map<const Eigen::RowVectorXd> xv(x.data(), x.size());
    Eigen::VectorXd kstar(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double s = (X_.row(i) - xv).squaredNorm();
      kstar[i] = sf2_ * std::exp(-s / (2.0 * ell_ * ell_));
    }
    Posterior p;
    p.mean = mean_y_ + kstar.dot(alpha_);
    const Eigen::VectorXd v = L_.triangularView<Eigen::Lower>().solve(kstar);
    p.var = std::max(0.0, sf2_ + jitter_ - v.squaredNorm());
    return p;
  }

  double lengthscale() const { return ell_; }
  double signal_variance() const { return sf2_; }
  double jitter() const { return jitter_; }
  std::size_t num_train() const { return static_cast<std::size_t>(X_.rows()); }

 private:
  GpRegressor() = default;
  Eigen::MatrixXd X_;
  Eigen::MatrixXd L_;
  Eigen::VectorXd alpha_;
  double mean_y_ = 0.0;
  double ell_ = 0.5;
  double sf2_ = 1.0;
  double jitter_ = 1e-6;
};

}  // namespace mopart

#endif  // MOPART_GP_HPP
