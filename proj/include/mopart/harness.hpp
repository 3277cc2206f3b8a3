#ifndef MOPART_HARNESS_HPP
#define MOPART_HARNESS_HPP

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mopart/benchmarks.hpp"
#include "mopart/cmaes.hpp"
#include "mopart/core.hpp"
#include "mopart/hypervolume.hpp"
#include "mopart/partition.hpp"
#include "mopart/rng.hpp"
#include "mopart/samplers.hpp"
#include "mopart/selection.hpp"

namespace mopart {

struct ExperimentConfig {
  Benchmark benchmark;
  std::string benchmark_spec;  // canonical text used for run-id hashing
  SamplerKind sampler = SamplerKind::random;
  bool use_partition = true;
  SelectionConfig selection;
  std::size_t budget = 300;
  std::size_t n0 = 10;
  std::size_t q = 5;
  PartitionParams partition;
  HvConfig hv;
  std::uint64_t seed = 0;
  bool backprop = false;  // update one tree in place instead of rebuilding
  std::size_t bo_mc_draws = 64;
  std::size_t bo_pool = 512;

  explicit ExperimentConfig(Benchmark bench, std::string spec = "")
      : benchmark(std::move(bench)) {
    benchmark_spec = spec.empty() ? benchmark.name() : std::move(spec);
    selection.cp_mode = SelectionConfig::CpMode::fraction_of_current_hv;
    selection.fraction = 0.1;
  }
};

struct RunRecord {
  std::size_t iteration = 0;  // 0 is the init batch
  std::size_t samples_used = 0;
  double hypervolume = 0.0;
  std::optional<double> hv_log_diff;
  std::optional<std::size_t> selected_leaf_id;
  std::size_t hv_evaluations = 0;
  double wall_ms = 0.0;
  std::size_t fallback = 0;  // flagged candidates in this iteration
};

struct RunResult {
  std::uint64_t run_id = 0;
  std::uint64_t seed = 0;
  std::string label;
  std::vector<RunRecord> records;
  Archive archive;
};

// Raised when the benchmark rejects a candidate mid-run; carries the
// candidate so callers can report it.
struct RunAbortError : std::runtime_error {
  DesignVector candidate;
  RunAbortError(const std::string& msg, DesignVector x)
      : std::runtime_error(msg), candidate(std::move(x)) {}
};

namespace detail {

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string sampler_name(SamplerKind k) {
  switch (k) {
    case SamplerKind::random: return "random";
    case SamplerKind::cmaes: return "cmaes";
    default: return "bo";
  }
}

inline std::string kernel_name(const KernelSpec& k) {
  switch (k.kind) {
    case KernelSpec::Kind::linear: return "linear";
    case KernelSpec::Kind::poly: return "poly";
    default: return "rbf";
  }
}

inline std::string canonical_config_string(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "bench=" << cfg.benchmark_spec << ";sampler=" << sampler_name(cfg.sampler)
     << ";partition=" << (cfg.use_partition ? 1 : 0)
     << ";selection="
     << (cfg.selection.strategy == SelectionConfig::Strategy::path ? "path"
                                                                   : "leaf")
     << ";cp="
     << (cfg.selection.cp_mode == SelectionConfig::CpMode::absolute
             ? "abs:" + fmt_double(cfg.selection.cp)
             : "frac:" + fmt_double(cfg.selection.fraction))
     << ";budget=" << cfg.budget << ";n0=" << cfg.n0 << ";q=" << cfg.q
     << ";kernel=" << kernel_name(cfg.partition.kernel)
     << ";svm_c=" << fmt_double(cfg.partition.c_reg)
     << ";max_depth=" << cfg.partition.max_depth
     << ";min_leaf=" << cfg.partition.min_leaf_samples
     << ";mc_hv=" << cfg.hv.mc_samples << ";seed=" << cfg.seed
     << ";backprop=" << (cfg.backprop ? 1 : 0);
  return os.str();
}

// Tabular deduplication gate. A duplicate draw is rejected up to 20
// consecutive times per slot, then accepted as a duplicate and counted.
// Returning false means the caller will keep the candidate, so acceptance
// bookkeeping lives on that path.
struct DedupGate {
  const Archive* archive = nullptr;
  std::set<DesignVector> batch_seen;
  int consecutive = 0;
  std::size_t forced = 0;

  bool operator()(const DesignVector& x) {
    const bool dup =
        archive->is_duplicate_design(x) || batch_seen.count(x) > 0;
    if (dup && consecutive < 20) {
      ++consecutive;
      return true;
    }
    if (dup) ++forced;
    consecutive = 0;
    batch_seen.insert(x);
    return false;
  }
};

inline double archive_hypervolume(const Archive& archive,
                                  const ObjectiveVector& ref,
                                  const HvConfig& cfg) {
  std::vector<ObjectiveVector> pts;
  pts.reserve(archive.size());
  for (std::size_t i : archive.dedup_view()) pts.push_back(archive.sample(i).v);
  return hypervolume(pts, ref, cfg);
}

}  // namespace detail

inline void validate_config(const ExperimentConfig& cfg) {
  if (cfg.n0 < 2) throw std::invalid_argument("config: n0 must be >= 2");
  if (cfg.q < 1) throw std::invalid_argument("config: q must be >= 1");
  if (cfg.budget < cfg.n0)
    throw std::invalid_argument("config: budget must be >= n0");
  if (cfg.sampler == SamplerKind::cmaes && cfg.q < 2)
    throw std::invalid_argument(
        "config: the cmaes sampler needs a batch of at least 2 (its "
        "population size is the batch size)");
}

// The optimizer loop: init with n0 uniform samples, then per iteration
// (re)build the partition tree, select a region, draw a batch from the
// configured sampler, evaluate, and append. With use_partition=false the
// tree and selection are skipped and the sampler works on the whole domain.
inline RunResult run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const Benchmark& bench = cfg.benchmark;
  const ObjectiveVector ref = bench.hv_ref();
  const std::optional<double> hv_max = bench.hv_max();
  Archive archive(bench.domain(), bench.num_objectives());

  using clock = std::chrono::steady_clock;
  std::vector<RunRecord> records;

  auto evaluate_into = [&](const DesignVector& x) {
    try {
      archive.add(x, bench.evaluate(x));
    } catch (const EvaluationError& e) {
      throw RunAbortError(e.what(), x);
    }
  };

  auto push_record = [&](std::size_t iteration, clock::time_point t0,
                         std::optional<std::size_t> leaf,
                         std::size_t hv_evals, std::size_t fallback) {
    RunRecord rec;
    rec.iteration = iteration;
    rec.samples_used = archive.size();
    rec.hypervolume = detail::archive_hypervolume(archive, ref, cfg.hv);
    if (hv_max) rec.hv_log_diff = log_hv_diff(*hv_max, rec.hypervolume);
    rec.selected_leaf_id = leaf;
    rec.hv_evaluations = hv_evals;
    rec.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - t0)
                      .count();
    rec.fallback = fallback;
    records.push_back(std::move(rec));
  };

  const bool dedup = bench.is_tabular();

  {  // iteration 0: uniform init batch
    const auto t0 = clock::now();
    detail::DedupGate gate{&archive};
    SplitMix64 stream(mix_seed(cfg.seed, 0));
    for (std::size_t i = 0; i < cfg.n0; ++i) {
      DesignVector x;
      do {
        x = uniform_in_domain(bench.domain(), stream);
      } while (dedup && gate(x));
      evaluate_into(x);
    }
    push_record(0, t0, std::nullopt, 0, gate.forced);
  }

  // Trees: rebuilt per iteration by default; built once here when
  // backpropagation is enabled or when a region-free sampler needs plumbing.
  std::optional<PartitionTree> tree;
  PartitionParams whole_space;
  whole_space.min_leaf_samples = std::numeric_limits<int>::max() / 4;
  const bool needs_tree_plumbing =
      !cfg.use_partition && cfg.sampler != SamplerKind::random;
  if (cfg.use_partition && cfg.backprop)
    tree = build_tree(archive, cfg.partition, ref, cfg.hv);
  if (needs_tree_plumbing)
    tree = build_tree(archive, whole_space, ref, cfg.hv);

  std::optional<CmaesState> cmaes;
  std::size_t iteration = 0;
  while (archive.size() < cfg.budget) {
    ++iteration;
    const auto t0 = clock::now();
    const std::size_t batch =
        std::min(cfg.q, cfg.budget - archive.size());
    const std::uint64_t iter_seed = mix_seed(cfg.seed, iteration);
    const double current_hv = records.back().hypervolume;

    std::optional<std::size_t> selected_leaf;
    std::size_t hv_evals = 0;
    std::size_t leaf_for_sampler = 0;
    if (cfg.use_partition) {
      if (!cfg.backprop) tree = build_tree(archive, cfg.partition, ref, cfg.hv);
      SelectionOutcome sel = select(*tree, cfg.selection, current_hv);
      selected_leaf = sel.leaf_id;
      leaf_for_sampler = sel.leaf_id;
      hv_evals = sel.hv_evaluations;
    }

    detail::DedupGate gate{&archive};
    const std::function<bool(const DesignVector&)> reject =
        dedup ? std::function<bool(const DesignVector&)>(std::ref(gate))
              : nullptr;
    std::size_t fallback = 0;
    std::vector<DesignVector> candidates;
    std::vector<bool> penalized;  // cmaes only

    switch (cfg.sampler) {
      case SamplerKind::random: {
        if (cfg.use_partition) {
          RegionSample rs = sample_random_region(
              *tree, leaf_for_sampler, batch, 1000 * batch, iter_seed, reject);
          candidates = std::move(rs.candidates);
          if (rs.fallback_used) ++fallback;
        } else {
          SplitMix64 stream(iter_seed);
          for (std::size_t i = 0; i < batch; ++i) {
            DesignVector x;
            do {
              x = uniform_in_domain(bench.domain(), stream);
            } while (dedup && gate(x));
            candidates.push_back(std::move(x));
          }
        }
        break;
      }
      case SamplerKind::cmaes: {
        if (!cmaes)
          cmaes = cmaes_init_for_leaf(*tree, leaf_for_sampler,
                                      static_cast<int>(cfg.q));
        CmaesAsk ask = cmaes_ask(*cmaes, *tree, leaf_for_sampler, batch,
                                 1000 * batch, iter_seed, reject);
        candidates = std::move(ask.candidates);
        penalized = std::move(ask.penalized);
        for (bool p : penalized)
          if (p) ++fallback;
        break;
      }
      case SamplerKind::bo: {
        BoResult bo = sample_bo_region(archive, *tree, leaf_for_sampler,
                                       batch, cfg.bo_mc_draws, cfg.bo_pool,
                                       iter_seed, ref, reject, cfg.hv);
        candidates = std::move(bo.candidates);
        if (bo.gp_fallback) ++fallback;
        if (bo.pool_fallback) ++fallback;
        break;
      }
    }
    fallback += gate.forced;

    // Evaluate before archiving so dominance fitness sees archive ∪ batch.
    std::vector<EvaluatedSample> evaluated;
    for (const auto& x : candidates) {
      ObjectiveVector v;
      try {
        v = bench.evaluate(x);
      } catch (const EvaluationError& e) {
        throw RunAbortError(e.what(), x);
      }
      evaluated.push_back({0, x, std::move(v)});
    }

    if (cfg.sampler == SamplerKind::cmaes &&
        batch == static_cast<std::size_t>(cmaes->lambda)) {
      const auto fitness = compute_fitness_dominance(evaluated, archive);
      const double penalty = static_cast<double>(archive.size());
      std::vector<std::pair<DesignVector, double>> pop;
      for (std::size_t i = 0; i < evaluated.size(); ++i)
        pop.emplace_back(evaluated[i].x,
                         static_cast<double>(fitness[i]) +
                             (penalized[i] ? penalty : 0.0));
      cmaes_tell(*cmaes, pop);
    }

    std::vector<std::uint64_t> new_ids;
    for (auto& s : evaluated) {
      new_ids.push_back(archive.add(std::move(s.x), std::move(s.v)));
    }

    if (cfg.use_partition && cfg.backprop) {
      // Only samples that actually lie in the selected region propagate
      // into the tree; clamped or fallback candidates outside it do not.
      std::vector<EvaluatedSample> in_region;
      for (std::uint64_t id : new_ids) {
        const EvaluatedSample& s = archive.sample(static_cast<std::size_t>(
            id));
        if (tree->region_membership(leaf_for_sampler, s.x))
          in_region.push_back(s);
      }
      std::size_t id = leaf_for_sampler;
      std::vector<std::size_t> path{id};
      while (tree->node(id).parent) {
        id = *tree->node(id).parent;
        path.push_back(id);
      }
      std::reverse(path.begin(), path.end());
      backpropagate(*tree, path, in_region);
    }

    push_record(iteration, t0, selected_leaf, hv_evals, fallback);
  }

  RunResult result{
      detail::fnv1a64(detail::canonical_config_string(cfg)), cfg.seed,
      cfg.benchmark_spec + "/" + detail::sampler_name(cfg.sampler) +
          (cfg.use_partition ? "+partition" : "") + "/seed" +
          std::to_string(cfg.seed),
      std::move(records), std::move(archive)};
  return result;
}

// Per-repeat probe-set hypervolumes drawn from the learned good region, the
// unconstrained domain, and the worst (rightmost) leaf.
struct RegionQualityResult {
  std::size_t good_leaf = 0, bad_leaf = 0;
  std::vector<double> good_hv, whole_hv, bad_hv;
};

inline RegionQualityResult region_quality_experiment(
    const ExperimentConfig& cfg, std::size_t probe_count = 50,
    std::size_t repeats = 150) {
  if (probe_count < 1 || repeats < 1)
    throw std::invalid_argument("region_quality_experiment: empty protocol");
  if (cfg.benchmark.is_tabular() && !cfg.benchmark.complete())
    throw std::invalid_argument(
        "region_quality_experiment: incomplete tabular benchmark");

  RunResult run = run_experiment(cfg);
  const Benchmark& bench = cfg.benchmark;
  const ObjectiveVector ref = bench.hv_ref();
  PartitionTree tree = build_tree(run.archive, cfg.partition, ref, cfg.hv);
  if (tree.leaves().size() < 2)
    throw std::runtime_error(
        "region_quality_experiment: the learned tree has a single leaf; "
        "lower min_leaf_samples or raise the budget to obtain a real split");

  RegionQualityResult out;
  out.good_leaf =
      select(tree, cfg.selection, run.records.back().hypervolume).leaf_id;
  out.bad_leaf = tree.leaves().back();

  auto probe_hv = [&](const std::vector<DesignVector>& xs) {
    std::vector<ObjectiveVector> pts;
    pts.reserve(xs.size());
    for (const auto& x : xs) pts.push_back(bench.evaluate(x));
    return hypervolume(pts, ref, cfg.hv);
  };

  const std::uint64_t base = mix_seed(cfg.seed, 1000003);
  for (std::size_t r = 0; r < repeats; ++r) {
    RegionSample good = sample_random_region(tree, out.good_leaf, probe_count,
                                             1000 * probe_count,
                                             mix_seed(base, 3 * r));
    out.good_hv.push_back(probe_hv(good.candidates));

    SplitMix64 stream(mix_seed(base, 3 * r + 1));
    std::vector<DesignVector> whole;
    for (std::size_t i = 0; i < probe_count; ++i)
      whole.push_back(uniform_in_domain(bench.domain(), stream));
    out.whole_hv.push_back(probe_hv(whole));

    RegionSample bad = sample_random_region(tree, out.bad_leaf, probe_count,
                                            1000 * probe_count,
                                            mix_seed(base, 3 * r + 2));
    out.bad_hv.push_back(probe_hv(bad.candidates));
  }
  return out;
}

// CSV with one row per iteration. Optional columns are left empty; doubles
// carry 17 significant digits so parsing them back is lossless.
inline void emit_csv(const RunResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_csv: cannot open " + path);
  out << "run_id,seed,iteration,samples_used,hypervolume,hv_log_diff,"
         "selected_leaf_id,hv_evaluations,wall_ms,fallback\n";
  char run_id[24];
  std::snprintf(run_id, sizeof run_id, "%016llx",
                static_cast<unsigned long long>(result.run_id));
  for (const auto& r : result.records) {
    out << run_id << ',' << result.seed << ',' << r.iteration << ','
        << r.samples_used << ',' << detail::fmt_double(r.hypervolume) << ',';
    if (r.hv_log_diff) out << detail::fmt_double(*r.hv_log_diff);
    out << ',';
    if (r.selected_leaf_id) out << *r.selected_leaf_id;
    out << ',' << r.hv_evaluations << ',' << detail::fmt_double(r.wall_ms)
        << ',' << r.fallback << '\n';
  }
  if (!out.good()) throw std::runtime_error("emit_csv: write failed: " + path);
}

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out += c;
  }
  return out;
}

}  // namespace detail

// Self-contained SVG line chart: hv_log_diff vs samples_used when every
// record of every run carries it, otherwise hypervolume vs samples_used.
inline void emit_plot(const std::vector<RunResult>& results,
                      const std::string& path) {
  if (results.empty()) throw std::invalid_argument("emit_plot: no results");
  bool use_log_diff = true;
  for (const auto& res : results)
    for (const auto& r : res.records)
      if (!r.hv_log_diff) use_log_diff = false;
  const std::string metric_label =
      use_log_diff ? "log hypervolume difference" : "hypervolume";

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& res : results)
    for (const auto& r : res.records) {
      const double y = use_log_diff ? *r.hv_log_diff : r.hypervolume;
      xmin = std::min(xmin, static_cast<double>(r.samples_used));
      xmax = std::max(xmax, static_cast<double>(r.samples_used));
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (xmax <= xmin) xmax = xmin + 1.0;
  if (ymax <= ymin) ymax = ymin + 1.0;

  const double W = 860, H = 520, L = 70, R = 210, T = 30, B = 55;
  const double plot_w = W - L - R, plot_h = H - T - B;
  auto sx = [&](double x) { return L + (x - xmin) / (xmax - xmin) * plot_w; };
  auto sy = [&](double y) {
    return T + plot_h - (y - ymin) / (ymax - ymin) * plot_h;
  };
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
      << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << " " << H
      << "\">\n";
  svg << "<rect width=\"" << W << "\" height=\"" << H
      << "\" fill=\"white\"/>\n";
  svg << "<g font-family=\"sans-serif\" font-size=\"12\" fill=\"#222\">\n";

  // Axes with five ticks per side.
  svg << "<line x1=\"" << L << "\" y1=\"" << T + plot_h << "\" x2=\""
      << L + plot_w << "\" y2=\"" << T + plot_h
      << "\" stroke=\"#444\" stroke-width=\"1\"/>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L
      << "\" y2=\"" << T + plot_h << "\" stroke=\"#444\" stroke-width=\"1\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double fx = xmin + (xmax - xmin) * i / 5.0;
    const double fy = ymin + (ymax - ymin) * i / 5.0;
    char xbuf[32], ybuf[32];
    std::snprintf(xbuf, sizeof xbuf, "%.4g", fx);
    std::snprintf(ybuf, sizeof ybuf, "%.4g", fy);
    svg << "<line x1=\"" << sx(fx) << "\" y1=\"" << T + plot_h << "\" x2=\""
        << sx(fx) << "\" y2=\"" << T + plot_h + 5
        << "\" stroke=\"#444\"/>\n";
    svg << "<text x=\"" << sx(fx) << "\" y=\"" << T + plot_h + 20
        << "\" text-anchor=\"middle\">" << xbuf << "</text>\n";
    svg << "<line x1=\"" << L - 5 << "\" y1=\"" << sy(fy) << "\" x2=\"" << L
        << "\" y2=\"" << sy(fy) << "\" stroke=\"#444\"/>\n";
    svg << "<text x=\"" << L - 8 << "\" y=\"" << sy(fy) + 4
        << "\" text-anchor=\"end\">" << ybuf << "</text>\n";
  }
  svg << "<text x=\"" << L + plot_w / 2 << "\" y=\"" << H - 12
      << "\" text-anchor=\"middle\">samples used</text>\n";
  svg << "<text x=\"18\" y=\"" << T + plot_h / 2
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << T + plot_h / 2 << ")\">" << metric_label << "</text>\n";

  for (std::size_t k = 0; k < results.size(); ++k) {
    const char* color = palette[k % 8];
    std::ostringstream poly;
    for (const auto& r : results[k].records) {
      const double y = use_log_diff ? *r.hv_log_diff : r.hypervolume;
      poly << sx(static_cast<double>(r.samples_used)) << ',' << sy(y) << ' ';
    }
    svg << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.6\" points=\"" << poly.str() << "\"/>\n";
    const double ly = T + 16 + 18 * static_cast<double>(k);
    svg << "<line x1=\"" << L + plot_w + 12 << "\" y1=\"" << ly - 4
        << "\" x2=\"" << L + plot_w + 34 << "\" y2=\"" << ly - 4
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << L + plot_w + 40 << "\" y=\"" << ly << "\">"
        << detail::xml_escape(results[k].label) << "</text>\n";
  }
  svg << "</g>\n</svg>\n";

  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_plot: cannot open " + path);
  out << svg.str();
  if (!out.good())
    throw std::runtime_error("emit_plot: write failed: " + path);
}

}  // namespace mopart

#endif  // MOPART_HARNESS_HPP
