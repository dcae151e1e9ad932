#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <omp.h>

#include "homoglab/errors.hpp"
#include "homoglab/experiments.hpp"

using namespace homog;

namespace {

struct Globals {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool has_seed = false;
  int threads = 0;
  double tol = 0;
};

void report(const std::vector<Check>& checks) {
  for (const auto& c : checks)
    std::cout << fmt::format("{} {} value={:.6e} threshold={:.6e}{}\n", c.passed ? "PASS" : "FAIL", c.name, c.value,
                             c.threshold, c.detail.empty() ? "" : " (" + c.detail + ")");
}

void absorb(RunManifest& m, const std::string& stage, const StageResult& r) {
  for (const auto& c : r.checks) m.add(c);
  for (const auto& t : r.times) m.times.push_back({stage + "." + t.stage, t.seconds});
  if (m.eps.empty()) m.eps_radii = r.eps_radii, m.eps = r.eps;
}

using Stage = std::function<StageResult(const ExperimentConfig&, const std::string&)>;

std::vector<std::pair<std::string, Stage>> stages_for(const std::string& cmd, const ExperimentConfig& c) {
  const std::vector<std::pair<std::string, Stage>> all{
      {"gen-field", run_gen_field},
      {"correctors", run_correctors},
      {"psi", run_psi},
      {"excess", [](const ExperimentConfig& x, const std::string& o) -> StageResult { return run_excess_decay(x, o); }},
      {"liouville",
       [](const ExperimentConfig& x, const std::string& o) -> StageResult { return run_liouville_dimension(x, o); }},
      {"approx",
       [](const ExperimentConfig& x, const std::string& o) -> StageResult { return run_approximation_law(x, o); }},
      {"counterexample",
       [](const ExperimentConfig& x, const std::string& o) -> StageResult { return run_counterexample(x, o); }},
  };
  std::vector<std::pair<std::string, Stage>> out;
  for (const auto& s : all) {
    if (cmd != "all") {
      if (s.first == cmd) out.push_back(s);
      continue;
    }
    // `all` runs the lattice stages for periodic fields and every stage with a config section
    const bool periodic = c.field.kind != "meyers";
    if (s.first == "gen-field") out.push_back(s);
    else if ((s.first == "correctors" || s.first == "psi") && periodic) out.push_back(s);
    else if (s.first == "excess" && c.has_excess) out.push_back(s);
    else if (s.first == "liouville" && c.has_liouville) out.push_back(s);
    else if (s.first == "approx" && c.has_approx) out.push_back(s);
    else if (s.first == "counterexample" && c.has_counterexample) out.push_back(s);
  }
  return out;
}

int run(const std::string& cmd, const Globals& g) {
  ExperimentConfig c;
  try {
    c = load_config(g.config);
    if (!g.out.empty()) c.out = g.out;
    if (g.has_seed) c.seeds = {g.seed};
    if (g.threads > 0) c.threads = g.threads;
    if (g.tol > 0) c.tol = g.tol;
    validate(c);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  omp_set_num_threads(c.threads);

  RunManifest m;
  m.command = cmd;
  m.config_hash = config_hash(c);
  m.seeds = c.seeds;
  std::string seeds;
  for (auto s : c.seeds) seeds += (seeds.empty() ? "" : ",") + std::to_string(s);
  std::cout << fmt::format("{} {}: config {}, seeds {}, out {}\n", cmd, c.name, m.config_hash, seeds, c.out);
  for (const auto& [name, stage] : stages_for(cmd, c)) {
    std::cout << "== " << name << "\n" << std::flush;
    try {
      const auto r = stage(c, c.out);
      report(r.checks);
      absorb(m, name, r);
    } catch (const SolverError& e) {
      std::cerr << fmt::format("error in stage {}: {} (iterations {}, residual {:.3e})\n", name, e.what(),
                               e.iterations(), e.residual());
      return 1;
    } catch (const std::exception& e) {
      std::cerr << fmt::format("error in stage {}: {}\n", name, e.what());
      return 1;
    }
  }
  try {
    write_resolved_config(c, c.out + "/config.ini");
    write_manifest(m, c.out + "/manifest.ini");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  const bool ok = m.passed();
  std::cout << fmt::format("{}: {} checks, {}\n", cmd, m.checks.size(), ok ? "all passed" : "FAILED");
  return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"homoglab: corrector hierarchy and excess-decay experiments on 2D lattices"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "experiment config (INI)")->required();
  app.add_option("--out", g.out, "output directory (overrides [experiment] out)");
  auto* seed = app.add_option("--seed", g.seed, "run a single seed");
  app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--tol", g.tol, "solver tolerance")->check(CLI::PositiveNumber);

  const std::vector<std::pair<std::string, std::string>> cmds{
      {"gen-field", "sample the coefficient field and check ellipticity"},
      {"correctors", "first-order correctors phi, q, sigma and a_hom"},
      {"psi", "corrector hierarchy up to degree k and residual checks"},
      {"excess", "excess decay of a random a-harmonic function"},
      {"liouville", "dimension, residuals and Gram spectra of the corrected family"},
      {"approx", "homogenized approximation law"},
      {"counterexample", "Meyers-type field with a sublinear a-harmonic function"},
      {"all", "every stage the config describes"},
  };
  for (const auto& [name, help] : cmds) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }
  g.has_seed = seed->count() > 0;
  const std::string cmd = app.get_subcommands().front()->get_name();
  return run(cmd, g);
}
