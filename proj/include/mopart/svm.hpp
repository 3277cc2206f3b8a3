#ifndef MOPART_SVM_HPP
#define MOPART_SVM_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mopart/core.hpp"

namespace mopart {

enum class Label { good, bad };

// Raised when a node's sample set cannot be split into two classes.
class NotSplittableError : public std::runtime_error {
 public:
  explicit NotSplittableError(const std::string& what)
      : std::runtime_error(what) {}
};

struct KernelSpec {
  enum class Kind { linear, poly, rbf };
  Kind kind = Kind::rbf;
  int degree = 3;                      // poly
  double coef0 = 1.0;                  // poly
  std::optional<double> gamma;         // rbf; empty means "scale"

  static KernelSpec linear() { return {Kind::linear, 3, 1.0, {}}; }
  static KernelSpec poly(int degree = 3, double coef0 = 1.0) {
    if (degree < 2) throw std::invalid_argument("poly kernel: degree < 2");
    return {Kind::poly, degree, coef0, {}};
  }
  static KernelSpec rbf() { return {Kind::rbf, 3, 1.0, {}}; }
  static KernelSpec rbf(double gamma) {
    if (!(gamma > 0.0)) throw std::invalid_argument("rbf kernel: gamma <= 0");
    return {Kind::rbf, 3, 1.0, gamma};
  }
};

// Per-dimension affine map onto [0,1] from the domain bounds (continuous
// relaxation for categorical domains), applied before any kernel evaluation.
// Scaling from bounds rather than sample statistics keeps region geometry
// stable as the archive grows.
struct FeatureScaler {
  std::vector<double> lo, inv_span;

  static FeatureScaler from_domain(const SearchDomain& domain) {
    FeatureScaler s;
    const std::size_t d = domain.dimension();
    s.lo.resize(d);
    s.inv_span.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
      s.lo[i] = domain.relaxed_lower(i);
      s.inv_span[i] = 1.0 / (domain.relaxed_upper(i) - s.lo[i]);
    }
    return s;
  }

  static FeatureScaler identity(std::size_t d) {
    FeatureScaler s;
    s.lo.assign(d, 0.0);
    s.inv_span.assign(d, 1.0);
    return s;
  }

  DesignVector apply(const DesignVector& x) const {
    if (x.size() != lo.size())
      throw std::invalid_argument("FeatureScaler: dimension mismatch");
    DesignVector z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      z[i] = (x[i] - lo[i]) * inv_span[i];
    return z;
  }
};

namespace detail {

inline double dot(const DesignVector& a, const DesignVector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double sq_dist(const DesignVector& a, const DesignVector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline double kernel_eval(const KernelSpec& k, double gamma,
                          const DesignVector& a, const DesignVector& b) {
  switch (k.kind) {
    case KernelSpec::Kind::linear:
      return dot(a, b);
    case KernelSpec::Kind::poly:
      return std::pow(dot(a, b) + k.coef0, k.degree);
    case KernelSpec::Kind::rbf:
    default:
      return std::exp(-gamma * sq_dist(a, b));
  }
}

}  // namespace detail

// Trained soft-margin classifier. Support vectors are stored pre-scaled;
// queries are scaled on entry. decision_value > 0 classifies good, with
// exact zero resolved to bad.
struct SvmModel {
  std::vector<DesignVector> support_x;  // scaled
  std::vector<double> alpha_y;          // dual coefficient times label
  double bias = 0.0;
  KernelSpec kernel;
  double gamma = 1.0;  // resolved at training time
  FeatureScaler scaling;

  double decision_value(const DesignVector& x) const {
    const DesignVector z = scaling.apply(x);
    double f = bias;
    for (std::size_t i = 0; i < support_x.size(); ++i)
      f += alpha_y[i] * detail::kernel_eval(kernel, gamma, support_x[i], z);
    return f;
  }

  Label predict(const DesignVector& x) const {
    return decision_value(x) > 0.0 ? Label::good : Label::bad;
  }
};

inline double decision_value(const SvmModel& m, const DesignVector& x) {
  return m.decision_value(x);
}
inline Label predict(const SvmModel& m, const DesignVector& x) {
  return m.predict(x);
}

// SMO trainer. Deterministic by construction: the first index is chosen by
// an in-order KKT scan, the second maximizes |E_i - E_j| with ties broken by
// lowest index. max_passes counts consecutive full sweeps without an alpha
// update; a hard cap on total sweeps guarantees termination.
inline SvmModel train_svm(const std::vector<DesignVector>& X,
                          const std::vector<Label>& y,
                          const KernelSpec& kernel,
                          const FeatureScaler& scaling, double c_reg = 1.0,
                          double tol = 1e-3, int max_passes = 10) {
  const std::size_t n = X.size();
  if (n < 2) throw std::invalid_argument("train_svm: fewer than 2 samples");
  if (y.size() != n)
    throw std::invalid_argument("train_svm: label count mismatch");
  if (!(c_reg > 0.0)) throw std::invalid_argument("train_svm: c_reg <= 0");
  bool has_good = false, has_bad = false;
  for (Label l : y) (l == Label::good ? has_good : has_bad) = true;
  if (!has_good || !has_bad)
    throw NotSplittableError("train_svm: single-class input");

  std::vector<DesignVector> Z(n);
  for (std::size_t i = 0; i < n; ++i) Z[i] = scaling.apply(X[i]);
  for (std::size_t i = 1; i < n; ++i)
    if (Z[i].size() != Z[0].size())
      throw std::invalid_argument("train_svm: ragged design vectors");

  double gamma = 1.0;
  if (kernel.kind == KernelSpec::Kind::rbf) {
    if (kernel.gamma) {
      gamma = *kernel.gamma;
    } else {
      // "scale": 1 / (d * var) with var taken over all scaled entries.
      const std::size_t d = Z[0].size();
      double mean = 0.0, count = static_cast<double>(n * d);
      for (const auto& z : Z)
        for (double v : z) mean += v;
      mean /= count;
      double var = 0.0;
      for (const auto& z : Z)
        for (double v : z) var += (v - mean) * (v - mean);
      var /= count;
      gamma = var > 0.0 ? 1.0 / (static_cast<double>(d) * var) : 1.0;
    }
  }

  std::vector<double> yv(n);
  for (std::size_t i = 0; i < n; ++i) yv[i] = y[i] == Label::good ? 1.0 : -1.0;

  // Kernel matrix cached when affordable, computed on demand otherwise.
  const bool cache = n <= 2048;
  std::vector<double> K;
  if (cache) {
    K.resize(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j)
        K[i * n + j] = K[j * n + i] =
            detail::kernel_eval(kernel, gamma, Z[i], Z[j]);
  }
  auto kij = [&](std::size_t i, std::size_t j) {
    return cache ? K[i * n + j]
                 : detail::kernel_eval(kernel, gamma, Z[i], Z[j]);
  };

  std::vector<double> alpha(n, 0.0);
  double b = 0.0;
  // Error cache E_k = f(x_k) - y_k, maintained incrementally.
  std::vector<double> E(n);
  for (std::size_t k = 0; k < n; ++k) E[k] = -yv[k];

  int passes = 0, sweeps = 0;
  const int max_sweeps = 1000;
  while (passes < max_passes && sweeps < max_sweeps) {
    ++sweeps;
    std::size_t changed = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double ri = E[i] * yv[i];
      if (!((ri < -tol && alpha[i] < c_reg) || (ri > tol && alpha[i] > 0.0)))
        continue;

      // Second choice: maximize |E_i - E_j|, lowest index on tie.
      std::size_t j = i == 0 ? 1 : 0;
      double best = -1.0;
      for (std::size_t k = 0; k < n; ++k) {
        if (k == i) continue;
        const double gap = std::abs(E[i] - E[k]);
        if (gap > best) {
          best = gap;
          j = k;
        }
      }

      const double ai_old = alpha[i], aj_old = alpha[j];
      double L, H;
      if (yv[i] != yv[j]) {
        L = std::max(0.0, aj_old - ai_old);
        H = std::min(c_reg, c_reg + aj_old - ai_old);
      } else {
        L = std::max(0.0, ai_old + aj_old - c_reg);
        H = std::min(c_reg, ai_old + aj_old);
      }
      if (L >= H) continue;

      const double eta = 2.0 * kij(i, j) - kij(i, i) - kij(j, j);
      if (eta >= 0.0) continue;

      double aj = aj_old - yv[j] * (E[i] - E[j]) / eta;
      aj = std::clamp(aj, L, H);
      if (std::abs(aj - aj_old) < 1e-5) continue;
      const double ai = ai_old + yv[i] * yv[j] * (aj_old - aj);

      const double b1 = b - E[i] - yv[i] * (ai - ai_old) * kij(i, i) -
                        yv[j] * (aj - aj_old) * kij(i, j);
      const double b2 = b - E[j] - yv[i] * (ai - ai_old) * kij(i, j) -
                        yv[j] * (aj - aj_old) * kij(j, j);
      double b_new;
      if (ai > 0.0 && ai < c_reg)
        b_new = b1;
      else if (aj > 0.0 && aj < c_reg)
        b_new = b2;
      else
        b_new = 0.5 * (b1 + b2);

      const double db = b_new - b;
      alpha[i] = ai;
      alpha[j] = aj;
      b = b_new;
      for (std::size_t k = 0; k < n; ++k)
        E[k] += yv[i] * (ai - ai_old) * kij(i, k) +
                yv[j] * (aj - aj_old) * kij(j, k) + db;
      ++changed;
    }
    passes = changed == 0 ? passes + 1 : 0;
  }

  SvmModel model;
  model.kernel = kernel;
  model.gamma = gamma;
  model.scaling = scaling;
  model.bias = b;
  for (std::size_t i = 0; i < n; ++i)
    if (alpha[i] > 1e-12) {
      model.support_x.push_back(Z[i]);
      model.alpha_y.push_back(alpha[i] * yv[i]);
    }
  return model;
}

inline SvmModel train_svm(const std::vector<DesignVector>& X,
                          const std::vector<Label>& y,
                          const KernelSpec& kernel, double c_reg = 1.0,
                          double tol = 1e-3, int max_passes = 10) {
  if (X.empty()) throw std::invalid_argument("train_svm: fewer than 2 samples");
  return train_svm(X, y, kernel, FeatureScaler::identity(X[0].size()), c_reg,
                   tol, max_passes);
}

}  // namespace mopart

#endif  // MOPART_SVM_HPP
