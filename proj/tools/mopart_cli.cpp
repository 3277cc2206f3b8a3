// Command-line front end: `mopart run` executes one optimization run and
// writes its per-iteration CSV; `mopart region-exp` probes sampling quality
// of the learned regions. Exit codes: 0 success, 2 configuration error,
// 3 benchmark error.
#include <algorithm>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mopart/harness.hpp"

namespace {

mopart::Benchmark parse_benchmark(const std::string& spec) {
  if (spec == "branin-currin") return mopart::Benchmark::branin_currin();
  if (spec == "synthetic-nas") return mopart::Benchmark::synthetic_nas(0);
  if (spec.rfind("synthetic-nas:", 0) == 0) {
    const std::string tail = spec.substr(14);
    std::size_t used = 0;
    const unsigned long long seed = std::stoull(tail, &used);
    if (used != tail.size())
      throw CLI::ValidationError("--benchmark",
                                 "bad synthetic-nas seed '" + tail + "'");
    return mopart::Benchmark::synthetic_nas(seed);
  }
  if (spec.rfind("tabular:", 0) == 0)
    return mopart::Benchmark::tabular(mopart::load_tabular(spec.substr(8)));
  throw CLI::ValidationError(
      "--benchmark", "expected branin-currin, synthetic-nas[:seed], or "
                     "tabular:<path>, got '" + spec + "'");
}

struct CommonFlags {
  std::string benchmark = "branin-currin";
  std::string sampler = "random";
  bool use_partition = true;
  std::string selection = "leaf";
  std::size_t budget = 300, init = 10, batch = 5;
  double cp_frac = 0.1, cp_abs = 0.0;
  std::string kernel = "rbf";
  double svm_c = 1.0;
  int max_depth = 6, min_leaf = 8;
  std::size_t mc_hv = 200000;
  std::uint64_t seed = 0;
  CLI::Option* cp_frac_opt = nullptr;
  CLI::Option* cp_abs_opt = nullptr;
};

void add_common_flags(CLI::App& cmd, CommonFlags& f) {
  cmd.add_option("--benchmark", f.benchmark,
                 "branin-currin | synthetic-nas[:seed] | tabular:<path>");
  cmd.add_option("--sampler", f.sampler, "candidate sampler")
      ->check(CLI::IsMember({"random", "cmaes", "bo"}));
  cmd.add_option("--use-partition", f.use_partition,
                 "learn and sample from space partitions (true|false)");
  cmd.add_option("--selection", f.selection, "region selection strategy")
      ->check(CLI::IsMember({"path", "leaf"}));
  cmd.add_option("--budget", f.budget, "total evaluation budget");
  cmd.add_option("--init", f.init, "initial uniform samples");
  cmd.add_option("--batch", f.batch, "candidates per iteration");
  f.cp_frac_opt = cmd.add_option(
      "--cp-frac", f.cp_frac, "exploration weight as a fraction of current hv");
  f.cp_abs_opt = cmd.add_option("--cp-abs", f.cp_abs,
                                "absolute exploration weight");
  f.cp_frac_opt->excludes(f.cp_abs_opt);
  f.cp_abs_opt->excludes(f.cp_frac_opt);
  cmd.add_option("--kernel", f.kernel, "svm kernel")
      ->check(CLI::IsMember({"rbf", "linear", "poly"}));
  cmd.add_option("--svm-c", f.svm_c, "svm regularization");
  cmd.add_option("--max-depth", f.max_depth, "partition tree depth limit");
  cmd.add_option("--min-leaf", f.min_leaf, "minimum samples per leaf");
  cmd.add_option("--mc-hv", f.mc_hv, "monte-carlo hypervolume budget");
  cmd.add_option("--seed", f.seed, "run seed");
}

mopart::ExperimentConfig build_config(const CommonFlags& f) {
  mopart::ExperimentConfig cfg(parse_benchmark(f.benchmark), f.benchmark);
  cfg.sampler = f.sampler == "random" ? mopart::SamplerKind::random
                : f.sampler == "cmaes" ? mopart::SamplerKind::cmaes
                                       : mopart::SamplerKind::bo;
  cfg.use_partition = f.use_partition;
  cfg.selection.strategy = f.selection == "path"
                               ? mopart::SelectionConfig::Strategy::path
                               : mopart::SelectionConfig::Strategy::leaf;
  if (f.cp_abs_opt->count()) {
    cfg.selection.cp_mode = mopart::SelectionConfig::CpMode::absolute;
    cfg.selection.cp = f.cp_abs;
  } else {
    cfg.selection.cp_mode =
        mopart::SelectionConfig::CpMode::fraction_of_current_hv;
    cfg.selection.fraction = f.cp_frac;
  }
  cfg.budget = f.budget;
  cfg.n0 = f.init;
  cfg.q = f.batch;
  cfg.partition.kernel = f.kernel == "rbf"    ? mopart::KernelSpec::rbf()
                         : f.kernel == "poly" ? mopart::KernelSpec::poly()
                                              : mopart::KernelSpec::linear();
  cfg.partition.c_reg = f.svm_c;
  cfg.partition.max_depth = f.max_depth;
  cfg.partition.min_leaf_samples = f.min_leaf;
  cfg.hv.mc_samples = f.mc_hv;
  cfg.seed = f.seed;
  mopart::validate_config(cfg);
  return cfg;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"space-partition multi-objective optimizer"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  std::string out_path, plot_path, tree_path;
  bool backprop = false;
  CLI::App* run = app.add_subcommand("run", "execute one optimization run");
  add_common_flags(*run, run_flags);
  run->add_option("--out", out_path, "per-iteration csv path")->required();
  run->add_option("--plot", plot_path, "also write an svg convergence plot");
  run->add_option("--dump-tree", tree_path,
                  "write the final partition tree as json");
  run->add_flag("--backprop", backprop,
                "grow one tree by backpropagation instead of rebuilding");

  CommonFlags reg_flags;
  std::string reg_out;
  std::size_t probes = 50, repeats = 150;
  CLI::App* reg = app.add_subcommand(
      "region-exp", "probe sampling quality of the learned regions");
  add_common_flags(*reg, reg_flags);
  reg->add_option("--probes", probes, "samples per probe set");
  reg->add_option("--repeats", repeats, "probe sets per region");
  reg->add_option("--out", reg_out, "per-repeat csv path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) {
      mopart::ExperimentConfig cfg = build_config(run_flags);
      cfg.backprop = backprop;
      mopart::RunResult res = mopart::run_experiment(cfg);
      mopart::emit_csv(res, out_path);
      if (!plot_path.empty()) mopart::emit_plot({res}, plot_path);
      if (!tree_path.empty()) {
        mopart::PartitionTree tree = mopart::build_tree(
            res.archive, cfg.partition, cfg.benchmark.hv_ref(), cfg.hv);
        std::ofstream out(tree_path);
        if (!out)
          throw std::runtime_error("cannot open " + tree_path);
        out << mopart::tree_to_json(tree).dump(2) << '\n';
      }
      const auto& last = res.records.back();
      std::printf("run %016llx done: %zu evaluations, hypervolume %.6g\n",
                  static_cast<unsigned long long>(res.run_id),
                  last.samples_used, last.hypervolume);
    } else {
      mopart::ExperimentConfig cfg = build_config(reg_flags);
      mopart::RegionQualityResult out =
          mopart::region_quality_experiment(cfg, probes, repeats);
      if (!reg_out.empty()) {
        std::ofstream csv(reg_out);
        if (!csv) throw std::runtime_error("cannot open " + reg_out);
        csv << "repeat,good_hv,whole_hv,bad_hv\n";
        for (std::size_t r = 0; r < out.good_hv.size(); ++r) {
          char line[160];
          std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%.17g\n", r,
                        out.good_hv[r], out.whole_hv[r], out.bad_hv[r]);
          csv << line;
        }
        if (!csv.good())
          throw std::runtime_error("write failed: " + reg_out);
      }
      std::printf(
          "good leaf %zu vs bad leaf %zu over %zu repeats\n"
          "median hv: good %.6g, whole %.6g, bad %.6g\n",
          out.good_leaf, out.bad_leaf, out.good_hv.size(),
          median_of(out.good_hv), median_of(out.whole_hv),
          median_of(out.bad_hv));
    }
  } catch (const mopart::RunAbortError& e) {
    std::string cand = "[";
    for (std::size_t i = 0; i < e.candidate.size(); ++i)
      cand += (i ? ", " : "") + std::to_string(e.candidate[i]);
    std::cerr << "benchmark error: " << e.what() << "\n  candidate: " << cand
              << "]\n";
    return 3;
  } catch (const mopart::EvaluationError& e) {
    std::cerr << "benchmark error: " << e.what() << '\n';
    return 3;
  } catch (const mopart::BenchmarkParseError& e) {
    std::cerr << "benchmark error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
