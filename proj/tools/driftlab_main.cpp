#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "runners.hpp"

namespace {

using driftlab::cli::GlobalOpts;
using driftlab::cli::RunResult;

// builds a config text from repeated key=value flags plus a leading section
std::string inline_config(const std::vector<std::string>& sections) {
  std::ostringstream out;
  for (const std::string& s : sections) out << s << "\n";
  return out.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for Wasserstein-contractive diffusions"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  GlobalOpts g;
  app.add_option("--seed", g.seed, "master seed");
  app.add_option("--workers", g.workers, "worker threads (never affects results)");
  app.add_option("--out-dir", g.out_dir, "output directory");
  app.add_option("--format", g.format, "table format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}));

  std::string config_path;
  std::vector<std::string> sets;

  auto add_config_opts = [&](CLI::App* cmd, bool config_required) {
    auto* opt = cmd->add_option("-c,--config", config_path, "config file");
    if (config_required) opt->required();
    cmd->add_option("--set", sets,
                    "inline dotted config lines, e.g. --set 'model.id = ou'");
  };

  CLI::App* c_constants = app.add_subcommand("constants", "constants table for a model");
  add_config_opts(c_constants, false);
  CLI::App* c_couple = app.add_subcommand("couple", "synchronous coupling decay");
  add_config_opts(c_couple, false);
  CLI::App* c_perturb = app.add_subcommand("perturb", "perturbed drift comparison");
  add_config_opts(c_perturb, false);
  CLI::App* c_particles = app.add_subcommand("particles", "interacting particle system");
  add_config_opts(c_particles, false);
  CLI::App* c_poincare = app.add_subcommand("poincare", "grid Poincare constant");
  add_config_opts(c_poincare, false);
  CLI::App* c_transport = app.add_subcommand("transport", "Wasserstein distance of CSV clouds");
  add_config_opts(c_transport, false);
  CLI::App* c_chaos = app.add_subcommand("chaos", "propagation of chaos experiment");
  add_config_opts(c_chaos, false);
  CLI::App* c_meanfield = app.add_subcommand("meanfield", "nonlinear flow on a grid");
  add_config_opts(c_meanfield, false);
  CLI::App* c_validate = app.add_subcommand("validate", "check declarations, no simulation");
  add_config_opts(c_validate, false);
  CLI::App* c_run = app.add_subcommand("run", "run an experiment config end to end");
  add_config_opts(c_run, true);

  CLI11_PARSE(app, argc, argv);

  try {
    std::filesystem::create_directories(g.out_dir);
    driftlab::Config cfg =
        config_path.empty()
            ? driftlab::Config::parse(inline_config(sets))
            : driftlab::Config::parse_file(config_path);
    RunResult res;
    if (c_run->parsed()) {
      res = driftlab::cli::run_config(config_path, g);
      return res.pass ? 0 : 1;
    }
    if (c_constants->parsed()) res = driftlab::cli::run_constants(cfg, g);
    else if (c_couple->parsed()) res = driftlab::cli::run_couple(cfg, g);
    else if (c_perturb->parsed()) res = driftlab::cli::run_perturb(cfg, g);
    else if (c_particles->parsed()) res = driftlab::cli::run_particles(cfg, g);
    else if (c_poincare->parsed()) res = driftlab::cli::run_poincare(cfg, g);
    else if (c_transport->parsed()) res = driftlab::cli::run_transport(cfg, g);
    else if (c_chaos->parsed()) res = driftlab::cli::run_chaos(cfg, g);
    else if (c_meanfield->parsed()) res = driftlab::cli::run_meanfield(cfg, g);
    else if (c_validate->parsed()) res = driftlab::cli::run_validate(cfg, g);
    cfg.ensure_all_consumed();
    for (const std::string& line : res.summary) std::cerr << line << "\n";
    return res.pass ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
