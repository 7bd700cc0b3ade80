// SPDX-License-Identifier: Apache-2.0
//
// genoclust command line: fit | select | simulate | reproduce.
// Talks to the engine exclusively through the C API.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "genoclust.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Two-population, four-locus design with two informative loci; the stock
// scenario behind `reproduce` and a template for custom ones.
constexpr const char* kDefaultScenario = R"(# Two populations, four biallelic loci, loci 1-2 informative.
n = 400
loci = 4
alleles = 2 2 2 2
populations = 2
proportions = 0.30 0.70
clustering_loci = 1 2
replicates = 20
seed = 1
freq 1 1 = 0.70 0.30
freq 1 2 = 0.25 0.75
freq 2 1 = 0.35 0.65
freq 2 2 = 0.70 0.30
noise 3 = 0.85 0.15
noise 4 = 0.50 0.50
)";

int exit_code_for(int status) {
  switch (status) {
    case GC_OK:
      return 0;
    case GC_ERR_ARGUMENT:
    case GC_ERR_IO:
    case GC_ERR_PARSE:
      return 2;
    default:
      return 3;
  }
}

[[noreturn]] void die(int status) {
  std::cerr << "genoclust: error: " << gc_last_error() << "\n";
  std::exit(exit_code_for(status));
}

void check(int status) {
  if (status != GC_OK) die(status);
}

[[noreturn]] void die_input(const std::string& message) {
  std::cerr << "genoclust: error: " << message << "\n";
  std::exit(2);
}

std::string take_string(char* s) {
  std::string out(s);
  gc_string_free(s);
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) die_input("cannot write '" + path.string() + "'");
  out << content;
  if (!out) die_input("write failed for '" + path.string() + "'");
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) die_input("cannot create output directory '" + dir + "'");
}

std::string pad3(int value) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%03d", value);
  return buf;
}

struct EmFlags {
  gc_em_options opts;
  void add_to(CLI::App* cmd) {
    gc_em_options_init(&opts);
    cmd->add_option("--restarts", opts.restarts, "EM restarts per model")
        ->capture_default_str();
    cmd->add_option("--epsilon", opts.epsilon,
                    "log-likelihood convergence threshold")
        ->capture_default_str();
    cmd->add_option("--max-iter", opts.max_iterations,
                    "iteration cap per restart")
        ->capture_default_str();
    cmd->add_option("--seed", opts.seed, "random seed")->capture_default_str();
    cmd->add_option("--threads", opts.threads,
                    "worker threads (0 = hardware)")
        ->capture_default_str();
  }
};

struct FitArgs {
  std::string input, out;
  int k = 2;
  std::vector<int> loci;
  EmFlags em;
};

struct SelectArgs {
  std::string input, out;
  int kmax = 5;
  bool no_selection = false;
  bool exhaustive = false;
  EmFlags em;
};

struct SimulateArgs {
  std::string scenario, out;
  int replicates = -1;       // -1: scenario value
  std::uint64_t seed = 0;
  bool seed_given = false;
};

struct ReproduceArgs {
  std::string scenario, out;
  int n_min = 100, n_max = 400, n_step = 50;
  int replicates = 20;
  int kmax = 3;
  EmFlags em;
};

void run_fit(const FitArgs& args) {
  gc_dataset* ds = nullptr;
  check(gc_dataset_read(args.input.c_str(), &ds));
  std::vector<int> loci = args.loci;
  if (loci.empty()) {
    loci.resize(gc_dataset_num_loci(ds));
    for (std::size_t i = 0; i < loci.size(); ++i) loci[i] = static_cast<int>(i) + 1;
  }
  gc_fit* fit = nullptr;
  check(gc_fit_model(ds, args.k, loci.data(), static_cast<int>(loci.size()),
                     &args.em.opts, &fit));

  char* report = nullptr;
  char* assignments = nullptr;
  check(gc_fit_report_json(fit, &report));
  check(gc_fit_assignments_csv(fit, &assignments));

  ensure_out_dir(args.out);
  write_file(fs::path(args.out) / "report.json", take_string(report));
  write_file(fs::path(args.out) / "assignments.csv", take_string(assignments));
  gc_fit_free(fit);
  gc_dataset_free(ds);
}

void run_select(const SelectArgs& args) {
  gc_dataset* ds = nullptr;
  check(gc_dataset_read(args.input.c_str(), &ds));
  gc_select_options opts;
  gc_select_options_init(&opts);
  opts.em = args.em.opts;
  opts.k_max = args.kmax;
  opts.no_selection = args.no_selection ? 1 : 0;
  opts.exhaustive = args.exhaustive ? 1 : 0;

  gc_selection* sel = nullptr;
  check(gc_select(ds, &opts, &sel));

  char* report = nullptr;
  char* trace = nullptr;
  char* assignments = nullptr;
  check(gc_selection_report_json(sel, &report));
  check(gc_selection_trace_json(sel, &trace));
  check(gc_selection_assignments_csv(sel, &assignments));

  ensure_out_dir(args.out);
  write_file(fs::path(args.out) / "report.json", take_string(report));
  write_file(fs::path(args.out) / "trace.json", take_string(trace));
  write_file(fs::path(args.out) / "assignments.csv", take_string(assignments));

  int k_hat = gc_selection_k(sel);
  std::vector<int> s_hat(gc_selection_num_loci(sel));
  gc_selection_loci(sel, s_hat.data(), static_cast<int>(s_hat.size()));
  std::cout << "selected k=" << k_hat << " loci={";
  for (std::size_t i = 0; i < s_hat.size(); ++i) {
    std::cout << (i ? "," : "") << s_hat[i];
  }
  std::cout << "}\n";

  gc_selection_free(sel);
  gc_dataset_free(ds);
}

void run_simulate(const SimulateArgs& args) {
  gc_scenario* sc = nullptr;
  check(gc_scenario_read(args.scenario.c_str(), &sc));
  const int replicates =
      args.replicates >= 0 ? args.replicates : gc_scenario_replicates(sc);
  if (replicates < 1) die_input("replicate count must be >= 1");
  const std::uint64_t seed =
      args.seed_given ? args.seed : gc_scenario_seed(sc);
  const int n = gc_scenario_num_individuals(sc);

  ensure_out_dir(args.out);
  std::vector<int> z(n);
  for (int r = 0; r < replicates; ++r) {
    gc_dataset* ds = nullptr;
    char* truth = nullptr;
    check(gc_simulate(sc, seed, r, &ds, z.data(), n, &truth));
    const fs::path dataset_path =
        fs::path(args.out) / ("dataset_" + pad3(r + 1) + ".txt");
    check(gc_dataset_write(ds, dataset_path.string().c_str()));
    write_file(fs::path(args.out) / ("truth_" + pad3(r + 1) + ".json"),
               take_string(truth));
    gc_dataset_free(ds);
  }
  gc_scenario_free(sc);
  std::cout << "wrote " << replicates << " replicate(s) to " << args.out << "\n";
}

void run_reproduce(const ReproduceArgs& args) {
  gc_scenario* sc = nullptr;
  if (args.scenario.empty()) {
    check(gc_scenario_parse(kDefaultScenario, &sc));
  } else {
    check(gc_scenario_read(args.scenario.c_str(), &sc));
  }
  if (args.replicates < 1) die_input("replicate count must be >= 1");
  if (args.n_min < 2 || args.n_step < 1 || args.n_max < args.n_min) {
    die_input("invalid sample-size grid");
  }

  const int k0 = gc_scenario_populations(sc);
  std::vector<int> s0(64);
  const int s0_len = gc_scenario_clustering_loci(sc, s0.data(), 64);
  s0.resize(s0_len);

  std::string csv = "n,replicates,rate\n";
  for (int n = args.n_min; n <= args.n_max; n += args.n_step) {
    check(gc_scenario_set_num_individuals(sc, n));
    int hits = 0;
    for (int r = 0; r < args.replicates; ++r) {
      gc_dataset* ds = nullptr;
      check(gc_simulate(sc, args.em.opts.seed + static_cast<std::uint64_t>(n),
                        r, &ds, nullptr, 0, nullptr));
      gc_select_options opts;
      gc_select_options_init(&opts);
      opts.em = args.em.opts;
      opts.k_max = args.kmax;
      gc_selection* sel = nullptr;
      check(gc_select(ds, &opts, &sel));

      std::vector<int> s_hat(gc_selection_num_loci(sel));
      gc_selection_loci(sel, s_hat.data(), static_cast<int>(s_hat.size()));
      if (gc_selection_k(sel) == k0 && s_hat == s0) ++hits;

      gc_selection_free(sel);
      gc_dataset_free(ds);
    }
    const double rate = static_cast<double>(hits) / args.replicates;
    csv += std::to_string(n) + "," + std::to_string(args.replicates) + "," +
           fmt_double(rate) + "\n";
    std::cout << "n=" << n << " rate=" << fmt_double(rate) << "\n";
  }
  gc_scenario_free(sc);

  ensure_out_dir(args.out);
  write_file(fs::path(args.out) / "curve.csv", csv);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "genoclust — clustering of multi-allelic genotype data with BIC-driven "
      "selection of the cluster count and the informative loci"};
  app.require_subcommand(1);

  FitArgs fit_args;
  CLI::App* fit = app.add_subcommand(
      "fit", "fit one model with a fixed cluster count and locus set");
  fit->add_option("--input", fit_args.input, "genotype file")->required();
  fit->add_option("--out", fit_args.out, "output directory")->required();
  fit->add_option("--k", fit_args.k, "cluster count")->required();
  fit->add_option("--loci", fit_args.loci,
                  "clustering loci (1-based; default: all)");
  fit_args.em.add_to(fit);

  SelectArgs select_args;
  CLI::App* select = app.add_subcommand(
      "select", "choose the cluster count and clustering loci by BIC");
  select->add_option("--input", select_args.input, "genotype file")->required();
  select->add_option("--out", select_args.out, "output directory")->required();
  select->add_option("--kmax", select_args.kmax, "ceiling on the cluster count")
      ->capture_default_str();
  select->add_flag("--no-selection", select_args.no_selection,
                   "keep all loci; choose the cluster count only");
  select->add_flag("--exhaustive", select_args.exhaustive,
                   "search every locus subset (small locus counts only)");
  select_args.em.add_to(select);

  SimulateArgs sim_args;
  CLI::App* simulate =
      app.add_subcommand("simulate", "generate datasets from a scenario file");
  simulate->add_option("--scenario", sim_args.scenario, "scenario file")
      ->required();
  simulate->add_option("--out", sim_args.out, "output directory")->required();
  simulate->add_option("--replicates", sim_args.replicates,
                       "replicate count (default: scenario value)");
  CLI::Option* seed_opt =
      simulate->add_option("--seed", sim_args.seed, "seed override");

  ReproduceArgs rep_args;
  CLI::App* reproduce = app.add_subcommand(
      "reproduce",
      "true-model selection rate vs sample size (simulate + select grid)");
  reproduce->add_option("--out", rep_args.out, "output directory")->required();
  reproduce->add_option("--scenario", rep_args.scenario,
                        "scenario file (default: built-in two-population design)");
  reproduce->add_option("--n-min", rep_args.n_min, "grid start")
      ->capture_default_str();
  reproduce->add_option("--n-max", rep_args.n_max, "grid end")
      ->capture_default_str();
  reproduce->add_option("--n-step", rep_args.n_step, "grid step")
      ->capture_default_str();
  reproduce->add_option("--replicates", rep_args.replicates,
                        "replicates per grid point")
      ->capture_default_str();
  reproduce->add_option("--kmax", rep_args.kmax, "ceiling on the cluster count")
      ->capture_default_str();
  rep_args.em.add_to(reproduce);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  sim_args.seed_given = seed_opt->count() > 0;

  if (fit->parsed()) run_fit(fit_args);
  if (select->parsed()) run_select(select_args);
  if (simulate->parsed()) run_simulate(sim_args);
  if (reproduce->parsed()) run_reproduce(rep_args);
  return 0;
}
