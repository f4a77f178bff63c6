#pragma once

#include <nlohmann/json_fwd.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "geoseek/analysis.hpp"

namespace geoseek {

/// Config validation failure carrying the offending field paths.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string message, std::vector<std::string> fields);
  const std::vector<std::string>& fields() const { return fields_; }

 private:
  std::vector<std::string> fields_;
};

struct ScanConfig {
  std::vector<double> epsilons{0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5, 0.75, 1.0};
  std::vector<double> omegas{30.0, 60.0, 120.0};
  int init_samples = 8;
  int dither_phases = 4;
  double delta = 0.03;
  double horizon = 40.0;
  std::uint64_t seed = 1234;
  bool use_averaged_flow = false;
};

/// One declarative run description; mirrors the JSON config schema.
struct Scenario {
  std::string name;

  // plant: "double-integrator" | "kirchhoff" | "custom"
  std::string plant_key = "double-integrator";
  int rn_dim = 2;
  double damping_r = 0.0;
  Eigen::Matrix3d J = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d M = Eigen::Matrix3d::Identity();
  std::string custom_ref;
  std::string objective_key = "quadratic2d";

  // controller; ignored for loop == "open" except omega/steps when no
  // explicit step is given
  double a = 1.0, lambda = 1.0, b = 1.0, kappa = 0.5, h = 1.0, omega = 30.0;

  // dither bank: "canonical" | "fig1" | "fig2" | "custom"
  std::string bank_variant = "fig1";
  double bank_period = 0.0;                       // custom banks
  std::vector<std::vector<double>> bank_samples;  // custom banks
  std::string shaping_key = "default";

  // initial state; eta0 empty means psi(g0)
  Eigen::VectorXd g0;
  Eigen::VectorXd v0;
  Eigen::VectorXd w0;
  std::optional<double> eta0;

  double t0 = 0.0;
  double t_end = 40.0;
  int steps_per_period = 200;
  std::optional<double> step;  // explicit step override (open-loop runs)

  std::string loop = "closed";  // "closed" | "averaged" | "open"
  bool out_trajectory = true;
  bool out_energy = true;
  bool out_defect = true;

  std::optional<Eigen::VectorXd> g_star;  // minimizer, when known
  std::vector<double> omega_ladder{30.0, 60.0, 120.0, 240.0};
  ScanConfig scan;
};

/// Fully constructed runtime objects for a scenario.
struct BuiltScenario {
  PlantModel plant;
  ControllerGains gains;
  ShapingFunction shaping;
  DitherBank bank;
  ClosedLoopState x0;
  std::optional<EnergyParams> energy;  // present when g_star is known
  double step = 0.0;
};

Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& s);

/// Validates a scenario and constructs the runtime objects.  Throws
/// ValidationError listing every offending field.
BuiltScenario build_scenario(const Scenario& s);

/// fig1-untuned, fig1-tuned, fig2-untuned, fig2-tuned, omega-ladder,
/// kirchhoff-conservation.
std::vector<Scenario> builtin_scenarios();
Scenario builtin_scenario(const std::string& name);

/// Registry behind the "custom" plant key.
void register_custom_plant(const std::string& name, std::function<PlantModel()> factory);
bool has_custom_plant(const std::string& name);

/// Objective registry used by the objective_key config field
/// ("quadratic2d" | "pose-distance" | "zero").
Objective objective_from_key(const std::string& key);

// --- file formats ---------------------------------------------------------

/// Columns: t, embedded g coordinates, v, w, eta, y, V, defect; values with
/// 17 significant digits so a round trip is exact.
void write_trajectory_csv(const std::string& path, const PlantModel& plant,
                          const Trajectory& traj);
Trajectory read_trajectory_csv(const std::string& path, int dim, int embed_dim);

nlohmann::json summary_json(const Scenario& s, const BuiltScenario& built,
                            const Trajectory& traj);

// --- run orchestration ----------------------------------------------------

struct RunOverrides {
  std::optional<double> omega;
  std::optional<std::uint64_t> seed;
  int thin = 1;
};

/// Executes one subcommand ("simulate" | "average" | "compare" |
/// "stability-scan" | "linearize" | "signals-check") against a scenario and
/// writes its artifacts into out_dir.  Returns the process exit status.
int run_subcommand(const std::string& name, const Scenario& scenario,
                   const std::string& out_dir, const RunOverrides& overrides = {});

/// Loads a scenario from a builtin name or a JSON file path.
Scenario load_scenario(const std::string& name_or_path);

}  // namespace geoseek
