#ifndef MOPART_BENCHMARKS_HPP
#define MOPART_BENCHMARKS_HPP

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "mopart/core.hpp"
#include "mopart/hypervolume.hpp"
#include "mopart/rng.hpp"

namespace mopart {

struct BenchmarkParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EvaluationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Branin in its standard published form on u in [-5,10], v in [0,15].
inline double branin(double u, double v) {
  constexpr double pi = 3.141592653589793238462643383279502884;
  const double a = 1.0, b = 5.1 / (4.0 * pi * pi), c = 5.0 / pi, r = 6.0,
               s = 10.0, t = 1.0 / (8.0 * pi);
  const double inner = v - b * u * u + c * u - r;
  return a * inner * inner + s * (1.0 - t) * std::cos(u) + s;
}

// Currin exponential on [0,1]^2; the x2 = 0 singularity is removable and
// evaluates to its limit (leading factor -> 1).
inline double currin(double x1, double x2) {
  const double factor =
      x2 == 0.0 ? 1.0 : 1.0 - std::exp(-1.0 / (2.0 * x2));
  const double num = 2300.0 * x1 * x1 * x1 + 1900.0 * x1 * x1 + 2092.0 * x1 +
                     60.0;
  const double den = 100.0 * x1 * x1 * x1 + 500.0 * x1 * x1 + 4.0 * x1 + 20.0;
  return factor * num / den;
}

struct ContinuousBenchmark {
  std::string name;
  SearchDomain domain;
  NormalizationSpec norm;
  std::function<ObjectiveVector(const DesignVector&)> evaluate_raw;
};

struct TabularBenchmark {
  std::string name;
  SearchDomain domain;
  NormalizationSpec norm;
  std::unordered_map<std::uint64_t, ObjectiveVector> rows;  // by encoding index
  std::optional<double> hv_max;
  bool complete = false;
};

// Little-endian mixed-radix row index of a categorical encoding.
inline std::uint64_t encoding_index(const SearchDomain& domain,
                                    const DesignVector& x) {
  if (!domain.contains(x))
    throw std::invalid_argument("encoding_index: x outside domain");
  std::uint64_t idx = 0, radix = 1;
  for (std::size_t i = 0; i < x.size(); ++i) {
    idx += static_cast<std::uint64_t>(x[i]) * radix;
    radix *= static_cast<std::uint64_t>(domain.cardinalities()[i]);
  }
  return idx;
}

inline DesignVector decode_index(const SearchDomain& domain,
                                 std::uint64_t idx) {
  DesignVector x(domain.dimension());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto card = static_cast<std::uint64_t>(domain.cardinalities()[i]);
    x[i] = static_cast<double>(idx % card);
    idx /= card;
  }
  return x;
}

namespace detail {

inline std::optional<double> tabular_hv_max(const TabularBenchmark& tb) {
  if (!tb.complete) return std::nullopt;
  std::vector<ObjectiveVector> pts;
  pts.reserve(tb.rows.size());
  for (std::uint64_t idx = 0; idx < tb.rows.size(); ++idx)
    pts.push_back(tb.norm.normalize(tb.rows.at(idx)));
  return hypervolume(pts, tb.norm.reference_floor());
}

}  // namespace detail

// Deterministic NAS-like table: additive per-position scores plus pairwise
// interactions define quality; additive per-code costs define cost. All
// draws come from one SplitMix64 stream in a fixed order, and every
// summation runs in a fixed index order, so tables are bitwise reproducible.
inline TabularBenchmark gen_synthetic_nas(std::uint64_t seed, int dims = 6,
                                          int card = 5) {
  if (dims < 2) throw std::invalid_argument("gen_synthetic_nas: dims < 2");
  if (card < 2) throw std::invalid_argument("gen_synthetic_nas: card < 2");
  long double budget = 1.0L;
  for (int i = 0; i < dims; ++i) budget *= card;
  if (budget > 1e7L)
    throw std::invalid_argument(
        "gen_synthetic_nas: card^dims exceeds the 1e7 enumeration budget");
  const std::uint64_t n_rows = static_cast<std::uint64_t>(budget);

  SplitMix64 rng(seed);
  std::vector<std::vector<double>> S(dims, std::vector<double>(card));
  for (int i = 0; i < dims; ++i)
    for (int c = 0; c < card; ++c) S[i][c] = rng.uniform();
  // T[i][j] laid out for i<j only, indexed [ci][cj].
  std::vector<std::vector<std::vector<std::vector<double>>>> T(
      dims, std::vector<std::vector<std::vector<double>>>(dims));
  for (int i = 0; i < dims; ++i)
    for (int j = i + 1; j < dims; ++j) {
      T[i][j].assign(card, std::vector<double>(card));
      for (int ci = 0; ci < card; ++ci)
        for (int cj = 0; cj < card; ++cj)
          T[i][j][ci][cj] = rng.uniform(-0.1, 0.1);
    }
  std::vector<std::vector<double>> Cst(dims, std::vector<double>(card));
  for (int i = 0; i < dims; ++i)
    for (int c = 0; c < card; ++c) Cst[i][c] = rng.uniform(1.0, 10.0);

  TabularBenchmark tb;
  tb.name = "synthetic-nas";
  tb.domain = SearchDomain::categorical(std::vector<int>(dims, card));
  tb.rows.reserve(n_rows);
  double qmin = 0.0, qmax = 0.0, cmin = 0.0, cmax = 0.0;
  std::vector<int> code(dims, 0);
  for (std::uint64_t idx = 0; idx < n_rows; ++idx) {
    double quality = 0.0, cost = 0.0;
    for (int i = 0; i < dims; ++i) {
      quality += S[i][code[i]];
      cost += Cst[i][code[i]];
    }
    for (int i = 0; i < dims; ++i)
      for (int j = i + 1; j < dims; ++j) quality += T[i][j][code[i]][code[j]];
    tb.rows.emplace(idx, ObjectiveVector{quality, cost});
    if (idx == 0) {
      qmin = qmax = quality;
      cmin = cmax = cost;
    } else {
      qmin = std::min(qmin, quality);
      qmax = std::max(qmax, quality);
      cmin = std::min(cmin, cost);
      cmax = std::max(cmax, cost);
    }
    for (int i = 0; i < dims; ++i) {  // little-endian increment
      if (++code[i] < card) break;
      code[i] = 0;
    }
  }

  tb.norm = NormalizationSpec(
      {ObjectiveSpec{"quality", Direction::maximize, qmin, qmax, 0.0, 1.0},
       ObjectiveSpec{"cost", Direction::minimize, cmin, cmax, -1.0, 0.0}});
  tb.complete = true;
  tb.hv_max = detail::tabular_hv_max(tb);
  return tb;
}

// Loads the documented JSON table format. Row-level violations report the
// offending row number; duplicate encodings report the encoding itself.
inline TabularBenchmark load_tabular(
    const std::string& path,
    const std::optional<NormalizationSpec>& norm_override = std::nullopt) {
  std::ifstream in(path);
  if (!in)
    throw BenchmarkParseError("load_tabular: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw BenchmarkParseError(std::string("load_tabular: invalid JSON: ") +
                              e.what());
  }

  auto require = [&](bool ok, const std::string& msg) {
    if (!ok) throw BenchmarkParseError("load_tabular: " + msg);
  };
  require(j.is_object(), "top level must be an object");
  require(j.contains("name") && j["name"].is_string(), "missing name");
  require(j.contains("dims") && j["dims"].is_number_integer(), "missing dims");
  const int dims = j["dims"].get<int>();
  require(dims >= 1, "dims must be positive");
  require(j.contains("cardinalities") && j["cardinalities"].is_array() &&
              j["cardinalities"].size() == static_cast<std::size_t>(dims),
          "cardinalities must list one entry per dimension");
  std::vector<int> cards;
  for (const auto& c : j["cardinalities"]) {
    require(c.is_number_integer() && c.get<int>() >= 2,
            "cardinalities must be integers >= 2");
    cards.push_back(c.get<int>());
  }
  require(j.contains("objectives") && j["objectives"].is_array() &&
              j["objectives"].size() >= 2,
          "at least two objectives required");
  const std::size_t m = j["objectives"].size();

  require(j.contains("rows") && j["rows"].is_array(), "missing rows");
  TabularBenchmark tb;
  tb.name = j["name"].get<std::string>();
  tb.domain = SearchDomain::categorical(cards);

  std::vector<double> vmin(m), vmax(m);
  std::size_t row_no = 0;
  for (const auto& row : j["rows"]) {
    auto row_err = [&](const std::string& msg) {
      throw BenchmarkParseError("load_tabular: row " + std::to_string(row_no) +
                                ": " + msg);
    };
    if (!row.is_object() || !row.contains("x") || !row.contains("v"))
      row_err("rows need x and v");
    const auto& xj = row["x"];
    const auto& vj = row["v"];
    if (!xj.is_array() || xj.size() != static_cast<std::size_t>(dims))
      row_err("x must have dims entries");
    DesignVector x;
    for (std::size_t i = 0; i < xj.size(); ++i) {
      if (!xj[i].is_number_integer()) row_err("x entries must be integers");
      const int code = xj[i].get<int>();
      if (code < 0 || code >= cards[i]) row_err("encoding code out of range");
      x.push_back(static_cast<double>(code));
    }
    if (!vj.is_array() || vj.size() != m)
      row_err("v must have one entry per objective");
    ObjectiveVector v;
    for (const auto& c : vj) {
      if (!c.is_number()) row_err("v entries must be numbers");
      v.push_back(c.get<double>());
      if (!std::isfinite(v.back())) row_err("v entries must be finite");
    }
    const std::uint64_t idx = encoding_index(tb.domain, x);
    if (tb.rows.count(idx)) {
      std::ostringstream enc;
      enc << "[";
      for (std::size_t i = 0; i < x.size(); ++i)
        enc << (i ? ", " : "") << static_cast<int>(x[i]);
      enc << "]";
      throw BenchmarkParseError("load_tabular: duplicate encoding " +
                                enc.str());
    }
    for (std::size_t k = 0; k < m; ++k) {
      if (tb.rows.empty()) {
        vmin[k] = v[k];
        vmax[k] = v[k];
      } else {
        vmin[k] = std::min(vmin[k], v[k]);
        vmax[k] = std::max(vmax[k], v[k]);
      }
    }
    tb.rows.emplace(idx, std::move(v));
    ++row_no;
  }
  require(!tb.rows.empty(), "rows must be non-empty");

  if (norm_override) {
    tb.norm = *norm_override;
    require(tb.norm.size() == m, "norm_override objective count mismatch");
  } else {
    std::vector<ObjectiveSpec> specs;
    std::size_t k = 0;
    for (const auto& obj : j["objectives"]) {
      require(obj.is_object() && obj.contains("name") &&
                  obj.contains("direction") && obj.contains("target"),
              "objectives need name, direction, target");
      ObjectiveSpec spec;
      spec.name = obj["name"].get<std::string>();
      const std::string dir = obj["direction"].get<std::string>();
      require(dir == "maximize" || dir == "minimize",
              "direction must be maximize or minimize");
      spec.direction =
          dir == "maximize" ? Direction::maximize : Direction::minimize;
      // Declared ranges win; absent or null ranges fall back to the data.
      spec.raw_min = obj.contains("raw_min") && obj["raw_min"].is_number()
                         ? obj["raw_min"].get<double>()
                         : vmin[k];
      spec.raw_max = obj.contains("raw_max") && obj["raw_max"].is_number()
                         ? obj["raw_max"].get<double>()
                         : vmax[k];
      const auto& tgt = obj["target"];
      require(tgt.is_array() && tgt.size() == 2 && tgt[0].is_number() &&
                  tgt[1].is_number(),
              "target must be [lo, hi]");
      spec.target_lo = tgt[0].get<double>();
      spec.target_hi = tgt[1].get<double>();
      specs.push_back(spec);
      ++k;
    }
    tb.norm = NormalizationSpec(specs);
  }

  unsigned __int128 full = 1;
  for (int c : cards) full *= static_cast<unsigned>(c);
  tb.complete = full == static_cast<unsigned __int128>(tb.rows.size());
  tb.hv_max = tb.complete && full <= 10000000 ? detail::tabular_hv_max(tb)
                                              : std::nullopt;
  return tb;
}

// Uniform facade over the two benchmark families. Evaluation returns
// normalized objectives under the maximization convention; the hypervolume
// reference is the componentwise target floor.
class Benchmark {
 public:
  static Benchmark branin_currin() {
    ContinuousBenchmark cb;
    cb.name = "branin-currin";
    cb.domain = SearchDomain::continuous_box({0.0, 0.0}, {1.0, 1.0});
    // Raw ranges chosen to cover the analytic extrema on the evaluation
    // domain (Branin in [0.3979, 308.13], Currin in [1.18, 13.80]).
    cb.norm = NormalizationSpec(
        {ObjectiveSpec{"branin", Direction::minimize, 0.39, 309.0, 0.0, 1.0},
         ObjectiveSpec{"currin", Direction::minimize, 1.0, 14.0, 0.0, 1.0}});
    cb.evaluate_raw = [](const DesignVector& x) -> ObjectiveVector {
      return {branin(15.0 * x[0] - 5.0, 15.0 * x[1]), currin(x[0], x[1])};
    };
    return Benchmark(std::move(cb));
  }

  static Benchmark synthetic_nas(std::uint64_t seed, int dims = 6,
                                 int card = 5) {
    return Benchmark(gen_synthetic_nas(seed, dims, card));
  }

  static Benchmark tabular(TabularBenchmark tb) {
    return Benchmark(std::move(tb));
  }

  const SearchDomain& domain() const {
    return is_tabular() ? std::get<TabularBenchmark>(impl_).domain
                        : std::get<ContinuousBenchmark>(impl_).domain;
  }
  const NormalizationSpec& norm() const {
    return is_tabular() ? std::get<TabularBenchmark>(impl_).norm
                        : std::get<ContinuousBenchmark>(impl_).norm;
  }
  const std::string& name() const {
    return is_tabular() ? std::get<TabularBenchmark>(impl_).name
                        : std::get<ContinuousBenchmark>(impl_).name;
  }
  bool is_tabular() const {
    return std::holds_alternative<TabularBenchmark>(impl_);
  }
  bool complete() const {
    return !is_tabular() || std::get<TabularBenchmark>(impl_).complete;
  }
  std::size_t num_objectives() const { return norm().size(); }
  std::optional<double> hv_max() const {
    return is_tabular() ? std::get<TabularBenchmark>(impl_).hv_max
                        : std::nullopt;
  }
  ObjectiveVector hv_ref() const { return norm().reference_floor(); }

  ObjectiveVector evaluate(const DesignVector& x) const {
    if (!domain().contains(x))
      throw std::invalid_argument("Benchmark::evaluate: x outside domain");
    if (is_tabular()) {
      const auto& tb = std::get<TabularBenchmark>(impl_);
      const auto it = tb.rows.find(encoding_index(tb.domain, x));
      if (it == tb.rows.end())
        throw EvaluationError("Benchmark::evaluate: missing row in table " +
                              tb.name);
      return tb.norm.normalize(it->second);
    }
    const auto& cb = std::get<ContinuousBenchmark>(impl_);
    return cb.norm.normalize(cb.evaluate_raw(x));
  }

 private:
  explicit Benchmark(std::variant<ContinuousBenchmark, TabularBenchmark> impl)
      : impl_(std::move(impl)) {}
  std::variant<ContinuousBenchmark, TabularBenchmark> impl_;
};

// Normalized Branin-Currin evaluation on [0,1]^2.
inline ObjectiveVector eval_branin_currin(const DesignVector& x) {
  static const Benchmark bench = Benchmark::branin_currin();
  return bench.evaluate(x);
}

}  // namespace mopart

#endif  // MOPART_BENCHMARKS_HPP
