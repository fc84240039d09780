// acrlnc_cli: seeded simulations, sweeps and bound curves from an experiment file.
//
//   acrlnc_cli simulate --config mp.json --out results/
//   acrlnc_cli sweep    --config mp.json --out results/ --parallel 4
//   acrlnc_cli bounds   --config mp.json --out results/
//   acrlnc_cli compare  --sim results/runs.csv --bounds results/bounds.csv --out results/

#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "experiment.hpp"

namespace fs = std::filesystem;
using namespace acrlnc;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  int parallel = 1;
  std::string protocol;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "experiment file (JSON)")->required()->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "base seed, overrides the file");
  sub->add_option("--out", c.out, "output directory");
  sub->add_option("--parallel", c.parallel, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--protocol", c.protocol, "run only this protocol");
}

exp::Experiment prepare(const Common& c) {
  exp::Experiment e = exp::load_experiment(c.config);
  if (c.seed) e.base_seed = *c.seed;
  if (!c.protocol.empty()) e.protocols = {parse_protocol(c.protocol)};
  exp::validate(e);
  fs::create_directories(c.out);
  return e;
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
  std::ofstream f(fs::path(dir) / name);
  if (!f) throw std::runtime_error("cannot write " + (fs::path(dir) / name).string());
  return f;
}

void run_sim(const Common& c, bool all_cells) {
  exp::Experiment e = prepare(c);
  std::vector<std::size_t> cells;
  if (all_cells) {
    cells.resize(e.cells());
    std::iota(cells.begin(), cells.end(), std::size_t{0});
  } else {
    cells = {0};
  }
  auto rows = exp::run_tasks(e, exp::all_tasks(e, cells), c.parallel);
  auto runs = open_out(c.out, "runs.csv");
  exp::write_runs_csv(runs, e, rows);
  auto summary = open_out(c.out, "summary.jsonl");
  exp::write_summary_jsonl(summary, e, rows);
  exp::write_summary_jsonl(std::cout, e, rows);
}

void run_bounds(const Common& c) {
  exp::Experiment e = prepare(c);
  std::vector<std::size_t> cells(e.cells());
  std::iota(cells.begin(), cells.end(), std::size_t{0});
  auto f = open_out(c.out, "bounds.csv");
  exp::write_bounds_csv(f, e, cells);
}

void run_compare(const std::string& sim, const std::string& bnd, const std::string& out) {
  std::ifstream s(sim), b(bnd);
  if (!s) throw std::runtime_error("cannot read " + sim);
  if (!b) throw std::runtime_error("cannot read " + bnd);
  fs::create_directories(out);
  auto f = open_out(out, "compare.csv");
  exp::write_compare_csv(f, exp::read_csv(s), exp::read_csv(b));
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"AC-RLNC multipath / multi-hop simulator"};
  app.require_subcommand(1);

  Common sim_opts, sweep_opts, bound_opts;
  auto* simulate = app.add_subcommand("simulate", "run the first cell of the experiment");
  add_common(simulate, sim_opts);
  auto* sweep = app.add_subcommand("sweep", "run every cell of the experiment");
  add_common(sweep, sweep_opts);
  auto* bounds = app.add_subcommand("bounds", "evaluate the analytic bounds of every cell");
  add_common(bounds, bound_opts);

  std::string sim_csv, bounds_csv, cmp_out = ".";
  auto* compare = app.add_subcommand("compare", "join runs.csv with bounds.csv into factor columns");
  compare->add_option("--sim", sim_csv, "runs.csv from simulate/sweep")->required()->check(CLI::ExistingFile);
  compare->add_option("--bounds", bounds_csv, "bounds.csv from bounds")->required()->check(CLI::ExistingFile);
  compare->add_option("--out", cmp_out, "output directory");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*simulate) run_sim(sim_opts, false);
    else if (*sweep) run_sim(sweep_opts, true);
    else if (*bounds) run_bounds(bound_opts);
    else if (*compare) run_compare(sim_csv, bounds_csv, cmp_out);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  }
  return 0;
}
