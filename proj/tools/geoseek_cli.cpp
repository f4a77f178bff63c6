#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "geoseek/scenario.hpp"

namespace {

struct CommonArgs {
  std::string config;
  std::string out_dir = ".";
  double omega = 0.0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool omega_set = false;
  int thin = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required = true) {
  auto* copt = cmd->add_option("--config", args.config,
                               "scenario JSON file or builtin scenario name");
  if (config_required) copt->required();
  cmd->add_option("--out", args.out_dir, "output directory (created if missing)");
  cmd->add_option("--omega", args.omega, "override the dither parameter omega")
      ->each([&args](const std::string&) { args.omega_set = true; });
  cmd->add_option("--seed", args.seed, "seed for stability-scan sampling")
      ->each([&args](const std::string&) { args.seed_set = true; });
  cmd->add_option("--thin", args.thin, "record every k-th trajectory step")
      ->check(CLI::PositiveNumber);
}

int dispatch(const std::string& name, const CommonArgs& args) {
  geoseek::Scenario scenario = geoseek::load_scenario(args.config);
  geoseek::RunOverrides overrides;
  if (args.omega_set) overrides.omega = args.omega;
  if (args.seed_set) overrides.seed = args.seed;
  overrides.thin = args.thin;
  return geoseek::run_subcommand(name, scenario, args.out_dir, overrides);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"extremum-seeking control on Lie groups: simulation and analysis"};
  app.require_subcommand(1);

  CommonArgs sim_args, avg_args, cmp_args, scan_args, lin_args, sig_args;

  add_common(app.add_subcommand("simulate", "integrate the closed loop (or the loop "
                                            "configured in the scenario)"),
             sim_args);
  add_common(app.add_subcommand("average", "integrate the averaged system"), avg_args);
  add_common(app.add_subcommand("compare",
                                "omega-ladder averaging-error study (Definition-4 metric)"),
             cmp_args);
  add_common(app.add_subcommand("stability-scan",
                                "practical-stability harness over (omega, epsilon) grids"),
             scan_args);
  add_common(app.add_subcommand("linearize",
                                "linearize the averaged system at the minimizer"),
             lin_args);

  auto* sig = app.add_subcommand("signals-check", "dither-bank orthonormality report");
  std::string sig_variant;
  int sig_m = 0;
  sig->add_option("variant", sig_variant, "bank variant (canonical | fig1 | fig2)");
  sig->add_option("-m,--channels", sig_m, "channel count (canonical banks)");
  add_common(sig, sig_args, /*config_required=*/false);

  auto* list = app.add_subcommand("list", "list builtin scenarios");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("simulate")) return dispatch("simulate", sim_args);
    if (app.got_subcommand("average")) return dispatch("average", avg_args);
    if (app.got_subcommand("compare")) return dispatch("compare", cmp_args);
    if (app.got_subcommand("stability-scan")) return dispatch("stability-scan", scan_args);
    if (app.got_subcommand("linearize")) return dispatch("linearize", lin_args);
    if (app.got_subcommand("signals-check")) {
      if (!sig_args.config.empty()) return dispatch("signals-check", sig_args);
      geoseek::Scenario s;
      s.name = "signals-check";
      s.bank_variant = sig_variant.empty() ? "canonical" : sig_variant;
      s.rn_dim = sig_m > 0 ? sig_m : 2;
      return geoseek::run_subcommand("signals-check", s, sig_args.out_dir, {});
    }
    if (app.got_subcommand(list)) {
      for (const auto& s : geoseek::builtin_scenarios()) std::cout << s.name << "\n";
      return 0;
    }
  } catch (const geoseek::ValidationError& e) {
    nlohmann::json err = {{"error", "validation"},
                          {"message", e.what()},
                          {"fields", e.fields()}};
    std::cerr << err.dump() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    nlohmann::json err = {{"error", "runtime"}, {"message", e.what()}};
    std::cerr << err.dump() << std::endl;
    return 1;
  }
  return 0;
}
