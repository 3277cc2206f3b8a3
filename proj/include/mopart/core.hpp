#ifndef MOPART_CORE_HPP
#define MOPART_CORE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "mopart/rng.hpp"

namespace mopart {

// Design points and objective vectors are plain double vectors. Categorical
// encodings are stored as integer codes widened to double. Every objective
// component is to be MAXIMIZED; minimized raw objectives are sign-flipped by
// the normalizer.
using DesignVector = std::vector<double>;
using ObjectiveVector = std::vector<double>;

enum class DomainKind { continuous_box, categorical_vector };

// Either a continuous box [lower, upper]^d or a vector of categorical
// positions where position i takes integer codes 0..cardinalities[i]-1.
// Mixed domains are not supported.
class SearchDomain {
 public:
  static SearchDomain continuous_box(std::vector<double> lower,
                                     std::vector<double> upper) {
    if (lower.size() != upper.size() || lower.empty())
      throw std::invalid_argument("continuous_box: bound lengths differ");
    for (std::size_t i = 0; i < lower.size(); ++i)
      if (!(lower[i] < upper[i]))
        throw std::invalid_argument("continuous_box: lower >= upper at dim " +
                                    std::to_string(i));
    SearchDomain d;
    d.kind_ = DomainKind::continuous_box;
    d.lower_ = std::move(lower);
    d.upper_ = std::move(upper);
    return d;
  }

  static SearchDomain categorical(std::vector<int> cardinalities) {
    if (cardinalities.empty())
      throw std::invalid_argument("categorical: empty cardinality vector");
    for (std::size_t i = 0; i < cardinalities.size(); ++i)
      if (cardinalities[i] < 2)
        throw std::invalid_argument("categorical: cardinality < 2 at dim " +
                                    std::to_string(i));
    SearchDomain d;
    d.kind_ = DomainKind::categorical_vector;
    d.cards_ = std::move(cardinalities);
    return d;
  }

  DomainKind kind() const { return kind_; }

  std::size_t dimension() const {
    return kind_ == DomainKind::continuous_box ? lower_.size() : cards_.size();
  }

  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }
  const std::vector<int>& cardinalities() const { return cards_; }

  // Lower/upper corner of the continuous relaxation. For categorical domains
  // this is [0, card-1] per dimension; used for feature scaling and for
  // continuous optimizers operating on encodings.
  double relaxed_lower(std::size_t i) const {
    return kind_ == DomainKind::continuous_box ? lower_[i] : 0.0;
  }
  double relaxed_upper(std::size_t i) const {
    return kind_ == DomainKind::continuous_box
               ? upper_[i]
               : static_cast<double>(cards_[i] - 1);
  }

  // True iff every component lies within bounds (inclusive) for boxes, or is
  // an integer code in range for categorical vectors.
  bool contains(const DesignVector& x) const {
    if (x.size() != dimension())
      throw std::invalid_argument("domain_contains: dimension mismatch");
    if (kind_ == DomainKind::continuous_box) {
      for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] < lower_[i] || x[i] > upper_[i]) return false;
      return true;
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] != std::floor(x[i])) return false;
      if (x[i] < 0.0 || x[i] > static_cast<double>(cards_[i] - 1)) return false;
    }
    return true;
  }

  // Rounds to the nearest valid point: clamps to the box, or clamps and
  // rounds to the nearest integer code.
  DesignVector snap(DesignVector x) const {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double lo = relaxed_lower(i), hi = relaxed_upper(i);
      x[i] = std::clamp(x[i], lo, hi);
      if (kind_ == DomainKind::categorical_vector) x[i] = std::round(x[i]);
    }
    return x;
  }

 private:
  DomainKind kind_ = DomainKind::continuous_box;
  std::vector<double> lower_, upper_;
  std::vector<int> cards_;
};

inline bool domain_contains(const SearchDomain& domain, const DesignVector& x) {
  return domain.contains(x);
}

// Uniform draw over the domain: componentwise U[lower, upper) for boxes,
// uniform integer code for categorical vectors.
inline DesignVector uniform_in_domain(const SearchDomain& domain,
                                      SplitMix64& rng) {
  const std::size_t d = domain.dimension();
  DesignVector x(d);
  if (domain.kind() == DomainKind::continuous_box) {
    for (std::size_t i = 0; i < d; ++i)
      x[i] = rng.uniform(domain.lower()[i], domain.upper()[i]);
  } else {
    for (std::size_t i = 0; i < d; ++i)
      x[i] = static_cast<double>(
          rng.below(static_cast<std::uint64_t>(domain.cardinalities()[i])));
  }
  return x;
}

struct EvaluatedSample {
  std::uint64_t id = 0;
  DesignVector x;
  ObjectiveVector v;
};

// Ordered sample store. Insertion order is preserved and ids are strictly
// increasing. Duplicate design vectors are kept but excluded from the dedup
// view used by dominance and hypervolume computations.
class Archive {
 public:
  Archive(SearchDomain domain, std::size_t num_objectives)
      : domain_(std::move(domain)), m_(num_objectives) {
    if (m_ < 2)
      throw std::invalid_argument("Archive: at least two objectives required");
  }

  std::uint64_t add(DesignVector x, ObjectiveVector v) {
    if (!domain_.contains(x))
      throw std::invalid_argument("Archive::add: x outside domain");
    if (v.size() != m_)
      throw std::invalid_argument("Archive::add: objective count mismatch");
    for (double c : v)
      if (!std::isfinite(c))
        throw std::invalid_argument("Archive::add: non-finite objective");
    const std::uint64_t id = next_id_++;
    auto [it, inserted] = seen_.try_emplace(x, id);
    if (!inserted) ++duplicate_count_;
    samples_.push_back(EvaluatedSample{id, std::move(x), std::move(v)});
    return id;
  }

  const std::vector<EvaluatedSample>& samples() const { return samples_; }
  const EvaluatedSample& sample(std::size_t i) const { return samples_[i]; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  std::size_t num_objectives() const { return m_; }
  const SearchDomain& domain() const { return domain_; }
  std::size_t duplicate_count() const { return duplicate_count_; }

  bool is_duplicate_design(const DesignVector& x) const {
    return seen_.count(x) > 0;
  }

  // Indices of the first occurrence of each unique design vector, in
  // insertion order.
  std::vector<std::size_t> dedup_view() const {
    std::vector<std::size_t> keep;
    keep.reserve(samples_.size());
    std::map<DesignVector, bool> seen;
    for (std::size_t i = 0; i < samples_.size(); ++i)
      if (seen.try_emplace(samples_[i].x, true).second) keep.push_back(i);
    return keep;
  }

  std::vector<EvaluatedSample> dedup_samples() const {
    std::vector<EvaluatedSample> out;
    for (std::size_t i : dedup_view()) out.push_back(samples_[i]);
    return out;
  }

 private:
  SearchDomain domain_;
  std::size_t m_;
  std::vector<EvaluatedSample> samples_;
  std::map<DesignVector, std::uint64_t> seen_;
  std::uint64_t next_id_ = 0;
  std::size_t duplicate_count_ = 0;
};

enum class Direction { maximize, minimize };

struct ObjectiveSpec {
  std::string name;
  Direction direction = Direction::maximize;
  double raw_min = 0.0;
  double raw_max = 1.0;
  double target_lo = 0.0;
  double target_hi = 1.0;
};

// Per-objective affine min-max normalization. Maximize objectives map
// raw_min -> target_lo and raw_max -> target_hi; minimize objectives map
// raw_min -> target_hi and raw_max -> target_lo, so larger normalized values
// are always better. Raw values outside the declared range are clamped.
class NormalizationSpec {
 public:
  NormalizationSpec() = default;

  explicit NormalizationSpec(std::vector<ObjectiveSpec> objectives)
      : objectives_(std::move(objectives)) {
    for (const auto& o : objectives_) {
      if (!(o.raw_min < o.raw_max))
        throw std::invalid_argument("NormalizationSpec: raw_min >= raw_max");
      if (!(o.target_lo < o.target_hi))
        throw std::invalid_argument("NormalizationSpec: target lo >= hi");
    }
  }

  std::size_t size() const { return objectives_.size(); }
  const std::vector<ObjectiveSpec>& objectives() const { return objectives_; }

  ObjectiveVector normalize(const std::vector<double>& raw,
                            bool* clamped = nullptr) const {
    if (raw.size() != objectives_.size())
      throw std::invalid_argument("normalize_objectives: length mismatch");
    if (clamped) *clamped = false;
    ObjectiveVector out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const auto& o = objectives_[i];
      double r = raw[i];
      if (r < o.raw_min || r > o.raw_max) {
        r = std::clamp(r, o.raw_min, o.raw_max);
        if (clamped) *clamped = true;
      }
      const double t = (r - o.raw_min) / (o.raw_max - o.raw_min);
      const double span = o.target_hi - o.target_lo;
      out[i] = o.direction == Direction::maximize
                   ? o.target_lo + t * span
                   : o.target_hi - t * span;
    }
    return out;
  }

  // Inverse of normalize on the target range.
  std::vector<double> denormalize(const ObjectiveVector& v) const {
    if (v.size() != objectives_.size())
      throw std::invalid_argument("denormalize: length mismatch");
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto& o = objectives_[i];
      const double span = o.target_hi - o.target_lo;
      const double t = o.direction == Direction::maximize
                           ? (v[i] - o.target_lo) / span
                           : (o.target_hi - v[i]) / span;
      out[i] = o.raw_min + t * (o.raw_max - o.raw_min);
    }
    return out;
  }

  // Componentwise lower end of each target range; the default hypervolume
  // reference point for normalized objectives.
  std::vector<double> reference_floor() const {
    std::vector<double> r(objectives_.size());
    for (std::size_t i = 0; i < objectives_.size(); ++i)
      r[i] = objectives_[i].target_lo;
    return r;
  }

 private:
  std::vector<ObjectiveSpec> objectives_;
};

inline ObjectiveVector normalize_objectives(const std::vector<double>& raw,
                                            const NormalizationSpec& spec,
                                            bool* clamped = nullptr) {
  return spec.normalize(raw, clamped);
}

}  // namespace mopart

#endif  // MOPART_CORE_HPP
