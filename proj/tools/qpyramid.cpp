// qpyramid: fit quantile-pyramid posteriors and run the asymptotics experiments.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qpyramid/errors.hpp"
#include "qpyramid/fit.hpp"
#include "qpyramid/io.hpp"
#include "qpyramid/lab.hpp"
#include "qpyramid/parallel.hpp"

namespace fs = std::filesystem;
using namespace qpyramid;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

std::pair<double, double> parse_bounds(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw ConfigError("--bounds expects lo,hi");
  try {
    return {io::parse_double(text.substr(0, comma)), io::parse_double(text.substr(comma + 1))};
  } catch (const DataError&) {
    throw ConfigError("--bounds expects two numbers, got '" + text + "'");
  }
}

template <class T>
std::vector<T> parse_list(const std::string& text, const char* flag) {
  std::vector<T> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      out.push_back(static_cast<T>(std::stoull(item)));
    } catch (const std::logic_error&) {
      throw ConfigError(std::string(flag) + ": bad list element '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError(std::string(flag) + " is empty");
  return out;
}

// "3..9" or "3,5,7".
std::vector<int> parse_levels(const std::string& text) {
  const auto dots = text.find("..");
  if (dots == std::string::npos) return parse_list<int>(text, "--m");
  int lo = 0;
  int hi = 0;
  try {
    lo = std::stoi(text.substr(0, dots));
    hi = std::stoi(text.substr(dots + 2));
  } catch (const std::logic_error&) {
    throw ConfigError("--m expects a range like 3..9");
  }
  if (hi < lo) throw ConfigError("--m range is empty");
  std::vector<int> out;
  for (int m = lo; m <= hi; ++m) out.push_back(m);
  return out;
}

void write_report(const lab::ExperimentReport& report, fs::path out, bool force) {
  if (out.empty()) out = "lab-" + report.name;
  prepare_output_dir(out, force);
  io::write_json(out / "report.json", report.to_json());
  std::cout << report.name << ": " << (report.passed ? "PASS" : "FAIL") << " (" << (out / "report.json").string()
            << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantile-pyramid posterior inference"};
  app.require_subcommand(1);
  int workers = 0;
  app.add_option("--workers", workers, "Cap on worker threads (0 = all)")->check(CLI::NonNegativeNumber);

  // fit -----------------------------------------------------------------
  auto* fit = app.add_subcommand("fit", "Sample the posterior of Q for one data set");
  FitConfig cfg;
  std::string data;
  std::string bounds;
  std::string likelihood = "substitute";
  std::size_t burn_in = 0;
  std::string out;
  std::string manifest;
  bool force = false;
  fit->add_option("--data", data, "Data file, one number per line");
  fit->add_option("--bounds", bounds, "Support bounds lo,hi (default: padded data range)");
  fit->add_option("--level", cfg.level, "Pyramid level m (k = 2^m cells)");
  fit->add_option("--prior", cfg.prior, "Prior, e.g. uniform, beta:c=2.5, md:c=1,center=normal");
  fit->add_option("--likelihood", likelihood, "interp | substitute | semiparam");
  fit->add_option("--iters", cfg.iterations, "Sweeps per chain");
  auto* burn_opt = fit->add_option("--burnin", burn_in, "Burn-in sweeps (default iters/10)");
  fit->add_option("--thin", cfg.thin, "Keep every thin-th sweep");
  fit->add_option("--chains", cfg.chains, "Independent chains");
  fit->add_option("--seed", cfg.seed, "Random seed");
  fit->add_option("--alpha", cfg.alpha, "Credible band level");
  fit->add_option("--grid-points", cfg.grid_points, "Points in grid.csv");
  fit->add_option("--out", out, "Output directory")->required();
  fit->add_option("--manifest", manifest, "Replay the config recorded in a manifest.json");
  fit->add_flag("--force", force, "Overwrite a non-empty output directory");

  // lab -----------------------------------------------------------------
  auto* lab_cmd = app.add_subcommand("lab", "Run an asymptotics experiment");
  lab_cmd->require_subcommand(1);
  std::string lab_out;
  bool lab_force = false;
  std::uint64_t lab_seed = 1;
  std::size_t lab_iters = 0;
  std::string lab_prior;

  auto add_common = [&](CLI::App* c) {
    c->add_option("--out", lab_out, "Output directory for report.json (default lab-<experiment>)");
    c->add_flag("--force", lab_force, "Overwrite a non-empty output directory");
    c->add_option("--seed", lab_seed, "Random seed");
    c->add_option("--prior", lab_prior, "Prior grammar");
  };

  auto* bvm = lab_cmd->add_subcommand("bvm", "Posterior normality of sqrt(n)(q_j - F_n^{-1}(j/k))");
  std::size_t bvm_n = 2000;
  std::size_t bvm_k = 4;
  std::size_t bvm_chains = 4;
  std::string f0 = "uniform";
  std::uint64_t data_seed = 0;
  bvm->add_option("--n", bvm_n, "Sample size");
  bvm->add_option("--k", bvm_k, "Cells (power of two)");
  bvm->add_option("--f0", f0, "uniform | ysquared | linear");
  bvm->add_option("--chains", bvm_chains, "Chains");
  bvm->add_option("--iters", lab_iters, "Sweeps per chain (default 20000)");
  bvm->add_option("--data-seed", data_seed, "Seed for the simulated data (default: --seed)");

  auto* cons = lab_cmd->add_subcommand("consistency", "Hellinger distance trend as n grows");
  std::string n_grid = "100,400,1600";
  std::string k_rule = "sqrt";
  std::string seeds = "1,2,3";
  std::string cons_f0 = "ysquared";
  cons->add_option("--n", n_grid, "Comma-separated sample sizes");
  cons->add_option("--k-rule", k_rule, "sqrt | linear | const:<k>");
  cons->add_option("--seeds", seeds, "Comma-separated seeds");
  cons->add_option("--f0", cons_f0, "uniform | ysquared | linear");
  cons->add_option("--iters", lab_iters, "Sweeps per chain (default 5000)");

  auto* decay = lab_cmd->add_subcommand("delta-decay", "Tail of the widest cell Delta_m");
  std::string levels = "3..9";
  std::size_t replicates = 5000;
  double epsilon = 0.5;
  decay->add_option("--m", levels, "Levels, e.g. 3..9 or 3,5,7");
  decay->add_option("--replicates", replicates, "Prior draws");
  decay->add_option("--eps", epsilon, "Threshold epsilon");

  auto* pmean = lab_cmd->add_subcommand("prior-mean", "Prior mean of Q against its centre");
  int pm_level = 6;
  std::size_t pm_draws = 20000;
  pmean->add_option("--level", pm_level, "Pyramid level");
  pmean->add_option("--draws", pm_draws, "Prior draws");

  for (auto* c : {bvm, cons, decay, pmean}) add_common(c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    parallel::set_worker_cap(workers);

    if (fit->parsed()) {
      FitConfig run = cfg;
      if (!manifest.empty()) {
        run = FitConfig::from_json(io::read_json(manifest).at("config"));
      } else {
        run.data = data;
        if (!bounds.empty()) run.bounds = parse_bounds(bounds);
        run.likelihood = parse_fit_likelihood(likelihood);
        if (burn_opt->count() > 0) run.burn_in = burn_in;
      }
      const auto outcome = run_fit(run, out, force);
      std::cout << "stored " << outcome.draws << " draws, acceptance " << outcome.acceptance << ", output in "
                << out << "\n";
      return 0;
    }

    if (bvm->parsed()) {
      lab::BvmOptions o;
      o.f0 = lab::TrueLaw::parse(f0);
      o.n = bvm_n;
      o.k = bvm_k;
      o.chains = bvm_chains;
      if (!lab_prior.empty()) o.prior = lab_prior;
      o.chain.iterations = lab_iters > 0 ? lab_iters : 20000;
      o.chain.seed = lab_seed;
      o.data_seed = data_seed > 0 ? data_seed : lab_seed;
      write_report(lab::bvm_experiment(o).report(o), lab_out, lab_force);
    } else if (cons->parsed()) {
      lab::ConsistencyOptions o;
      o.f0 = lab::TrueLaw::parse(cons_f0);
      o.n_grid = parse_list<std::size_t>(n_grid, "--n");
      o.rule = lab::KRule::parse(k_rule);
      o.seeds = parse_list<std::uint64_t>(seeds, "--seeds");
      if (!lab_prior.empty()) o.prior = lab_prior;
      if (lab_iters > 0) o.chain.iterations = lab_iters;
      write_report(lab::consistency_experiment(o).report(o), lab_out, lab_force);
    } else if (decay->parsed()) {
      lab::DeltaDecayOptions o;
      o.levels = parse_levels(levels);
      o.replicates = replicates;
      o.epsilon = epsilon;
      o.seed = lab_seed;
      if (!lab_prior.empty()) o.prior = lab_prior;
      write_report(lab::delta_decay_experiment(o).report(o), lab_out, lab_force);
    } else if (pmean->parsed()) {
      lab::PriorMeanOptions o;
      o.level = pm_level;
      o.draws = pm_draws;
      o.seed = lab_seed;
      if (!lab_prior.empty()) o.prior = lab_prior;
      write_report(lab::prior_mean_experiment(o).report(o), lab_out, lab_force);
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const DomainError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
}
