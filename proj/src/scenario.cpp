#include "geoseek/scenario.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

namespace geoseek {

using nlohmann::json;

ValidationError::ValidationError(std::string message, std::vector<std::string> fields)
    : std::runtime_error(std::move(message)), fields_(std::move(fields)) {}

// --- custom plant registry --------------------------------------------------

namespace {

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

std::map<std::string, std::function<PlantModel()>>& plant_registry() {
  static std::map<std::string, std::function<PlantModel()>> reg;
  return reg;
}

}  // namespace

void register_custom_plant(const std::string& name, std::function<PlantModel()> factory) {
  std::lock_guard<std::mutex> lock(registry_mutex());
  plant_registry()[name] = std::move(factory);
}

bool has_custom_plant(const std::string& name) {
  std::lock_guard<std::mutex> lock(registry_mutex());
  return plant_registry().count(name) > 0;
}

// --- objectives --------------------------------------------------------------

Objective objective_from_key(const std::string& key) {
  if (key == "quadratic2d") {
    // psi(g) = -1 + g1^2 + g2^2 / 2 on R^2
    Objective o;
    o.value = [](const Eigen::VectorXd& g) { return -1.0 + g[0] * g[0] + 0.5 * g[1] * g[1]; };
    o.ambient_gradient = [](const Eigen::VectorXd& g) {
      return Eigen::Vector2d(2.0 * g[0], g[1]);
    };
    return o;
  }
  if (key == "pose-distance") {
    // psi(R, r) = |R - I|^2 / 4 + |r|^2 / 2 on SE(3)
    Objective o;
    o.value = [](const Eigen::VectorXd& g) {
      Eigen::Matrix3d R;
      Eigen::Vector3d r;
      se3_unpack(g, R, r);
      return 0.25 * (R - Eigen::Matrix3d::Identity()).squaredNorm() + 0.5 * r.squaredNorm();
    };
    o.ambient_gradient = [](const Eigen::VectorXd& g) {
      Eigen::Matrix3d R;
      Eigen::Vector3d r;
      se3_unpack(g, R, r);
      return se3_pack(0.5 * (R - Eigen::Matrix3d::Identity()), r);
    };
    return o;
  }
  if (key == "zero") {
    Objective o;
    o.value = [](const Eigen::VectorXd&) { return 0.0; };
    o.ambient_gradient = [](const Eigen::VectorXd& g) {
      return Eigen::VectorXd::Zero(g.size()).eval();
    };
    return o;
  }
  throw std::invalid_argument("unknown objective key: " + key);
}

namespace {

bool objective_key_known(const std::string& key) {
  return key == "quadratic2d" || key == "pose-distance" || key == "zero";
}

// Natural minimizer for the built-in objectives, when one exists.
std::optional<Eigen::VectorXd> objective_default_gstar(const std::string& key) {
  if (key == "quadratic2d") return Eigen::Vector2d(0.0, 0.0).eval();
  if (key == "pose-distance")
    return se3_pack(Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero());
  return std::nullopt;
}

// --- JSON helpers -------------------------------------------------------------

Eigen::VectorXd vec_from_json(const json& j) {
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

json vec_to_json(const Eigen::VectorXd& v) {
  json j = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

Eigen::Matrix3d mat3_from_json(const json& j) {
  if (j.size() != 9) throw std::invalid_argument("expected 9 row-major entries");
  Eigen::Matrix3d m;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) m(i, k) = j[3 * i + k].get<double>();
  return m;
}

json mat3_to_json(const Eigen::Matrix3d& m) {
  json j = json::array();
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) j.push_back(m(i, k));
  return j;
}

// Group elements are either flat embedded arrays or {"R": [9], "r": [3]}.
Eigen::VectorXd group_from_json(const json& j) {
  if (j.is_object()) {
    return se3_pack(mat3_from_json(j.at("R")), vec_from_json(j.at("r")).head<3>());
  }
  return vec_from_json(j);
}

}  // namespace

Scenario scenario_from_json(const json& j) {
  Scenario s;
  s.name = j.value("name", std::string{});

  if (j.contains("plant")) {
    const json& p = j.at("plant");
    s.plant_key = p.value("key", s.plant_key);
    s.rn_dim = p.value("n", s.rn_dim);
    s.damping_r = p.value("damping", s.damping_r);
    if (p.contains("J")) s.J = mat3_from_json(p.at("J"));
    if (p.contains("M")) s.M = mat3_from_json(p.at("M"));
    s.custom_ref = p.value("ref", s.custom_ref);
    s.objective_key = p.value("objective", s.objective_key);
  }
  if (j.contains("gains")) {
    const json& g = j.at("gains");
    s.a = g.value("a", s.a);
    s.lambda = g.value("lambda", s.lambda);
    s.b = g.value("b", s.b);
    s.kappa = g.value("kappa", s.kappa);
    s.h = g.value("h", s.h);
    s.omega = g.value("omega", s.omega);
  }
  if (j.contains("bank")) {
    const json& b = j.at("bank");
    s.bank_variant = b.value("variant", s.bank_variant);
    s.bank_period = b.value("period", s.bank_period);
    if (b.contains("samples"))
      s.bank_samples = b.at("samples").get<std::vector<std::vector<double>>>();
  }
  s.shaping_key = j.value("shaping", s.shaping_key);
  if (j.contains("initial")) {
    const json& i = j.at("initial");
    if (i.contains("g")) s.g0 = group_from_json(i.at("g"));
    if (i.contains("v")) s.v0 = vec_from_json(i.at("v"));
    if (i.contains("w")) s.w0 = vec_from_json(i.at("w"));
    if (i.contains("eta") && !i.at("eta").is_null()) s.eta0 = i.at("eta").get<double>();
  }
  s.t0 = j.value("t0", s.t0);
  s.t_end = j.value("t_end", s.t_end);
  s.steps_per_period = j.value("steps_per_period", s.steps_per_period);
  if (j.contains("step") && !j.at("step").is_null()) s.step = j.at("step").get<double>();
  s.loop = j.value("loop", s.loop);
  if (j.contains("outputs")) {
    const json& o = j.at("outputs");
    s.out_trajectory = o.value("trajectory", s.out_trajectory);
    s.out_energy = o.value("energy", s.out_energy);
    s.out_defect = o.value("defect", s.out_defect);
  }
  if (j.contains("g_star") && !j.at("g_star").is_null())
    s.g_star = group_from_json(j.at("g_star"));
  if (j.contains("omega_ladder"))
    s.omega_ladder = j.at("omega_ladder").get<std::vector<double>>();
  if (j.contains("scan")) {
    const json& sc = j.at("scan");
    s.scan.epsilons = sc.value("epsilons", s.scan.epsilons);
    s.scan.omegas = sc.value("omegas", s.scan.omegas);
    s.scan.init_samples = sc.value("init_samples", s.scan.init_samples);
    s.scan.dither_phases = sc.value("dither_phases", s.scan.dither_phases);
    s.scan.delta = sc.value("delta", s.scan.delta);
    s.scan.horizon = sc.value("horizon", s.scan.horizon);
    s.scan.seed = sc.value("seed", s.scan.seed);
    s.scan.use_averaged_flow = sc.value("use_averaged_flow", s.scan.use_averaged_flow);
  }
  return s;
}

json scenario_to_json(const Scenario& s) {
  json j;
  j["name"] = s.name;
  json p;
  p["key"] = s.plant_key;
  p["objective"] = s.objective_key;
  if (s.plant_key == "double-integrator") {
    p["n"] = s.rn_dim;
    p["damping"] = s.damping_r;
  } else if (s.plant_key == "kirchhoff") {
    p["J"] = mat3_to_json(s.J);
    p["M"] = mat3_to_json(s.M);
  } else if (s.plant_key == "custom") {
    p["ref"] = s.custom_ref;
  }
  j["plant"] = p;
  j["gains"] = {{"a", s.a},     {"lambda", s.lambda}, {"b", s.b},
                {"kappa", s.kappa}, {"h", s.h},       {"omega", s.omega}};
  json b;
  b["variant"] = s.bank_variant;
  if (s.bank_variant == "custom") {
    b["period"] = s.bank_period;
    b["samples"] = s.bank_samples;
  }
  j["bank"] = b;
  j["shaping"] = s.shaping_key;
  json i;
  i["g"] = vec_to_json(s.g0);
  i["v"] = vec_to_json(s.v0);
  i["w"] = vec_to_json(s.w0);
  if (s.eta0)
    i["eta"] = *s.eta0;
  else
    i["eta"] = nullptr;
  j["initial"] = i;
  j["t0"] = s.t0;
  j["t_end"] = s.t_end;
  j["steps_per_period"] = s.steps_per_period;
  if (s.step) j["step"] = *s.step;
  j["loop"] = s.loop;
  j["outputs"] = {{"trajectory", s.out_trajectory},
                  {"energy", s.out_energy},
                  {"defect", s.out_defect}};
  if (s.g_star) j["g_star"] = vec_to_json(*s.g_star);
  j["omega_ladder"] = s.omega_ladder;
  j["scan"] = {{"epsilons", s.scan.epsilons},
               {"omegas", s.scan.omegas},
               {"init_samples", s.scan.init_samples},
               {"dither_phases", s.scan.dither_phases},
               {"delta", s.scan.delta},
               {"horizon", s.scan.horizon},
               {"seed", s.scan.seed},
               {"use_averaged_flow", s.scan.use_averaged_flow}};
  return j;
}

BuiltScenario build_scenario(const Scenario& s) {
  std::vector<std::string> bad;
  auto flag = [&bad](const std::string& field) { bad.push_back(field); };

  const bool open_loop = s.loop == "open";
  if (s.loop != "closed" && s.loop != "averaged" && !open_loop) flag("loop");

  const bool objective_ok = objective_key_known(s.objective_key);
  if (!objective_ok) flag("plant.objective");

  std::optional<PlantModel> plant;
  if (s.plant_key == "double-integrator") {
    if (s.rn_dim < 1) flag("plant.n");
    if (s.damping_r < 0.0) flag("plant.damping");
    if (objective_ok && s.objective_key == "quadratic2d" && s.rn_dim != 2) flag("plant.n");
    if (objective_ok && bad.empty())
      plant = double_integrator_plant(s.rn_dim, s.damping_r,
                                      objective_from_key(s.objective_key));
  } else if (s.plant_key == "kirchhoff") {
    if (objective_ok) {
      try {
        plant = kirchhoff_plant(s.J, s.M, objective_from_key(s.objective_key));
      } catch (const std::invalid_argument&) {
        flag("plant.J");
        flag("plant.M");
      }
    }
  } else if (s.plant_key == "custom") {
    if (!has_custom_plant(s.custom_ref)) {
      flag("plant.ref");
    } else {
      std::lock_guard<std::mutex> lock(registry_mutex());
      plant = plant_registry().at(s.custom_ref)();
    }
  } else {
    flag("plant.key");
  }
  if (s.objective_key == "pose-distance" && plant && plant->model.embed_dim != 12)
    flag("plant.objective");

  // Gains.  Open-loop runs do not use the controller, but omega still sets
  // the step size when none is given.
  const bool gains_positive =
      s.a > 0.0 && s.lambda > 0.0 && s.b > 0.0 && s.kappa > 0.0 && s.h > 0.0 && s.omega > 0.0;
  const bool lead_ok = s.a * s.lambda - s.b * s.kappa > 0.0;
  if (!open_loop) {
    if (!gains_positive) flag("gains");
    if (gains_positive && !lead_ok) flag("gains (a*lambda - b*kappa > 0 required)");
  } else if (!s.step && s.omega <= 0.0) {
    flag("step");
  }

  std::optional<DitherBank> bank;
  if (s.bank_variant == "custom") {
    try {
      bank = tabulated_bank(s.bank_period, s.bank_samples);
    } catch (const std::invalid_argument&) {
      flag("bank.period/samples");
    }
  } else {
    try {
      const BankVariant variant = bank_variant_from_key(s.bank_variant);
      // Fixed-size variants keep their natural channel count; the mismatch
      // check below reports it against the plant dimension.
      int m = plant ? plant->dim() : s.rn_dim;
      if (variant == BankVariant::fig1) m = 2;
      if (variant == BankVariant::fig2) m = 6;
      bank = make_harmonic_bank(m, variant);
    } catch (const std::invalid_argument&) {
      flag("bank.variant");
    }
  }
  if (!open_loop && plant && bank && bank->channels != plant->dim())
    flag("bank (channel count must equal plant dimension)");

  if (s.shaping_key != "default") flag("shaping");

  if (plant) {
    if (s.g0.size() != plant->model.embed_dim) flag("initial.g");
    if (s.v0.size() != plant->dim()) flag("initial.v");
    if (s.w0.size() != 0 && s.w0.size() != plant->dim()) flag("initial.w");
    if (s.g_star && s.g_star->size() != plant->model.embed_dim) flag("g_star");
  }
  if (s.t_end < s.t0) flag("t_end");
  if (!s.step && !open_loop && s.steps_per_period < 50) flag("steps_per_period");
  if (s.step && *s.step <= 0.0) flag("step");

  if (!bad.empty()) {
    std::ostringstream msg;
    msg << "scenario '" << s.name << "' is invalid; offending fields:";
    for (const auto& f : bad) msg << " " << f;
    throw ValidationError(msg.str(), bad);
  }

  // Open-loop runs never evaluate the controller; safe placeholder gains
  // keep the struct constructible while omega still sets the default step.
  const bool use_scenario_gains = !open_loop || (gains_positive && lead_ok);
  ControllerGains gains =
      use_scenario_gains
          ? ControllerGains(s.a, s.lambda, s.b, s.kappa, s.h, s.omega > 0.0 ? s.omega : 1.0)
          : ControllerGains(1.0, 1.0, 1.0, 0.5, 1.0, s.omega > 0.0 ? s.omega : 1.0);
  BuiltScenario built{*plant,        std::move(gains),  default_shaping(), *bank,
                      ClosedLoopState{}, std::nullopt,  0.0};
  built.x0.g = s.g0;
  built.x0.v = s.v0;
  built.x0.w = s.w0.size() == 0 ? Eigen::VectorXd::Zero(built.plant.dim()).eval() : s.w0;
  built.x0.eta = s.eta0 ? *s.eta0 : measure_output(built.plant, s.g0);
  built.step = s.step ? *s.step : step_size_for(built.gains, s.steps_per_period);

  std::optional<Eigen::VectorXd> gstar = s.g_star;
  if (!gstar) gstar = objective_default_gstar(s.objective_key);
  if (gstar && !open_loop)
    built.energy = EnergyParams::make(built.plant, built.gains, built.shaping, *gstar);
  return built;
}

// --- builtins -----------------------------------------------------------------

namespace {

Eigen::Matrix3d kirchhoff_J() {
  Eigen::Matrix3d J;
  J << 5, 0, -2, 0, 7, 2, -2, 2, 6;
  return J / 3.0;
}

Eigen::Matrix3d kirchhoff_M() {
  Eigen::Matrix3d M;
  M << 7, 0, 2, 0, 5, -2, 2, -2, 6;
  return M / 3.0;
}

Eigen::Matrix3d tilted_R0() {
  Eigen::Matrix3d R;
  R << -1, 2, -2, -2, 1, 2, 2, 2, 1;
  return R / 3.0;
}

Scenario planar_base() {
  Scenario s;
  s.plant_key = "double-integrator";
  s.rn_dim = 2;
  s.damping_r = 0.0;
  s.objective_key = "quadratic2d";
  s.a = 1.0;
  s.lambda = 1.0;
  s.b = 1.0;
  s.kappa = 0.5;
  s.h = 1.0;
  s.omega = 30.0;
  s.bank_variant = "fig1";
  s.g0 = Eigen::Vector2d(1.0, 1.0);
  s.v0 = Eigen::Vector2d::Zero();
  s.w0 = Eigen::Vector2d::Zero();
  s.eta0.reset();  // psi(g0)
  s.t0 = 0.0;
  s.t_end = 40.0;
  s.steps_per_period = 200;
  s.g_star = Eigen::Vector2d(0.0, 0.0).eval();
  s.omega_ladder = {30.0, 60.0, 120.0, 240.0};
  s.scan.omegas = {30.0, 60.0, 120.0};
  s.scan.horizon = 40.0;
  return s;
}

Scenario rigid_body_base() {
  Scenario s;
  s.plant_key = "kirchhoff";
  s.J = kirchhoff_J();
  s.M = kirchhoff_M();
  s.objective_key = "pose-distance";
  s.h = 1.0;
  s.omega = 5.0;
  s.bank_variant = "fig2";
  s.g0 = se3_pack(tilted_R0(), Eigen::Vector3d::Ones());
  s.v0 = Eigen::VectorXd::Zero(6);
  s.w0 = Eigen::VectorXd::Zero(6);
  s.eta0 = 0.0;
  s.t0 = 0.0;
  s.t_end = 300.0;
  s.steps_per_period = 200;
  s.g_star = se3_pack(Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero());
  s.omega_ladder = {5.0, 10.0, 20.0};
  s.scan.omegas = {5.0, 10.0};
  s.scan.horizon = 60.0;
  return s;
}

}  // namespace

std::vector<Scenario> builtin_scenarios() {
  std::vector<Scenario> all;

  Scenario s = planar_base();
  s.name = "fig1-untuned";
  all.push_back(s);

  s = planar_base();
  s.name = "fig1-tuned";
  s.a = 1.3;
  s.lambda = 0.7;
  s.b = 1.2;
  s.kappa = 0.7;
  all.push_back(s);

  s = rigid_body_base();
  s.name = "fig2-untuned";
  s.a = 0.1;
  s.lambda = 0.2;
  s.b = 0.1;
  s.kappa = 0.1;
  all.push_back(s);

  s = rigid_body_base();
  s.name = "fig2-tuned";
  s.a = 0.15;
  s.lambda = 0.13;
  s.b = 0.13;
  s.kappa = 0.13;
  all.push_back(s);

  s = planar_base();
  s.name = "omega-ladder";
  s.t_end = 10.0;
  all.push_back(s);

  s = rigid_body_base();
  s.name = "kirchhoff-conservation";
  s.loop = "open";
  s.a = 1.0;
  s.lambda = 1.0;
  s.b = 1.0;
  s.kappa = 0.5;
  s.omega = 1.0;
  s.g0 = se3_pack(Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero());
  s.v0 = Eigen::VectorXd::Ones(6) / std::sqrt(6.0);
  s.eta0 = 0.0;
  s.t_end = 100.0;
  s.step = 1e-3;
  all.push_back(s);

  return all;
}

Scenario builtin_scenario(const std::string& name) {
  for (Scenario& s : builtin_scenarios()) {
    if (s.name == name) return s;
  }
  throw std::invalid_argument("unknown builtin scenario: " + name);
}

Scenario load_scenario(const std::string& name_or_path) {
  for (Scenario& s : builtin_scenarios()) {
    if (s.name == name_or_path) return s;
  }
  std::ifstream in(name_or_path);
  if (!in) throw std::runtime_error("cannot open scenario config: " + name_or_path);
  json j;
  in >> j;
  Scenario s = scenario_from_json(j);
  if (s.name.empty()) s.name = std::filesystem::path(name_or_path).stem().string();
  return s;
}

// --- file formats ---------------------------------------------------------

namespace {

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_trajectory_csv(const std::string& path, const PlantModel& plant,
                          const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  const int n = plant.dim();

  out << "t";
  for (const auto& name : plant.model.coord_names) out << "," << name;
  for (int i = 1; i <= n; ++i) out << ",v" << i;
  for (int i = 1; i <= n; ++i) out << ",w" << i;
  out << ",eta,y,V,defect\n";

  for (std::size_t k = 0; k < traj.size(); ++k) {
    const ClosedLoopState& x = traj.states[k];
    out << fmt17(traj.times[k]);
    for (Eigen::Index i = 0; i < x.g.size(); ++i) out << "," << fmt17(x.g[i]);
    for (int i = 0; i < n; ++i) out << "," << fmt17(x.v[i]);
    for (int i = 0; i < n; ++i) out << "," << fmt17(x.w.size() ? x.w[i] : 0.0);
    out << "," << fmt17(x.eta);
    out << "," << fmt17(traj.outputs[k]);
    out << "," << fmt17(traj.energy.empty() ? std::numeric_limits<double>::quiet_NaN()
                                            : traj.energy[k]);
    out << "," << fmt17(traj.defects[k]);
    out << "\n";
  }
}

Trajectory read_trajectory_csv(const std::string& path, int dim, int embed_dim) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty trajectory file: " + path);

  Trajectory traj;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(std::stod(cell));
    const std::size_t expected = 1 + embed_dim + 2 * dim + 4;
    if (cells.size() != expected)
      throw std::runtime_error("trajectory row has wrong column count: " + path);

    std::size_t at = 0;
    traj.times.push_back(cells[at++]);
    ClosedLoopState x;
    x.g = Eigen::Map<Eigen::VectorXd>(cells.data() + at, embed_dim);
    at += embed_dim;
    x.v = Eigen::Map<Eigen::VectorXd>(cells.data() + at, dim);
    at += dim;
    x.w = Eigen::Map<Eigen::VectorXd>(cells.data() + at, dim);
    at += dim;
    x.eta = cells[at++];
    traj.states.push_back(std::move(x));
    traj.outputs.push_back(cells[at++]);
    traj.energy.push_back(cells[at++]);
    traj.defects.push_back(cells[at++]);
  }
  return traj;
}

nlohmann::json summary_json(const Scenario& s, const BuiltScenario& built,
                            const Trajectory& traj) {
  json j;
  j["scenario"] = s.name;
  j["loop"] = s.loop;
  j["faulted"] = traj.faulted;
  if (traj.faulted) {
    j["fault"] = {{"time", traj.fault_time}, {"reason", traj.fault_reason}};
  } else {
    j["fault"] = nullptr;
  }
  if (traj.size() == 0) return j;

  const ClosedLoopState& xf = traj.states.back();
  j["final"] = {{"t", traj.times.back()},
                {"g", vec_to_json(xf.g)},
                {"v", vec_to_json(xf.v)},
                {"w", vec_to_json(xf.w)},
                {"eta", xf.eta},
                {"y", traj.outputs.back()}};

  double sup_v = 0.0, sup_defect = 0.0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    sup_v = std::max(sup_v, traj.states[k].v.norm());
    sup_defect = std::max(sup_defect, traj.defects[k]);
  }
  j["sup_body_speed"] = sup_v;
  j["sup_defect"] = sup_defect;

  std::optional<Eigen::VectorXd> gstar = s.g_star;
  if (!gstar) gstar = objective_default_gstar(s.objective_key);
  if (gstar) {
    double sup_g = 0.0;
    for (const auto& x : traj.states) sup_g = std::max(sup_g, (x.g - *gstar).norm());
    j["sup_configuration_deviation"] = sup_g;
    j["final_configuration_deviation"] = (xf.g - *gstar).norm();
  }
  if (!traj.energy.empty()) {
    j["final_energy"] = traj.energy.back();
    if (s.loop == "open" && traj.energy.front() != 0.0) {
      double drift = 0.0;
      for (double e : traj.energy)
        drift = std::max(drift, std::abs(e - traj.energy.front()));
      j["energy_rel_drift"] = drift / std::abs(traj.energy.front());
    }
  }
  return j;
}

// --- orchestration ----------------------------------------------------------

namespace {

void fill_energy(const Scenario& s, const BuiltScenario& built, Trajectory& traj) {
  if (!s.out_energy) return;
  traj.energy.resize(traj.size());
  if (s.loop == "open") {
    // Kinetic energy in the orthonormal frame; conserved for the ideal-fluid
    // plant with zero input.
    for (std::size_t k = 0; k < traj.size(); ++k)
      traj.energy[k] = 0.5 * traj.states[k].v.squaredNorm();
    return;
  }
  if (!built.energy) {
    traj.energy.assign(traj.size(), std::numeric_limits<double>::quiet_NaN());
    return;
  }
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const ClosedLoopState x =
        s.loop == "closed"
            ? to_tilde(built.plant, built.gains, built.shaping, built.bank, traj.times[k],
                       traj.states[k])
            : traj.states[k];
    traj.energy[k] = lyapunov_V(*built.energy, built.plant, x);
  }
}

Trajectory run_loop(const Scenario& s, const BuiltScenario& built, int thin) {
  IntegrateOptions opts;
  opts.thin = thin;
  RhsFn rhs;
  if (s.loop == "averaged") {
    rhs = [&built](double, const ClosedLoopState& x) {
      return averaged_rhs(built.plant, built.gains, built.shaping, x);
    };
  } else if (s.loop == "open") {
    const Eigen::VectorXd zero_u = Eigen::VectorXd::Zero(built.plant.dim());
    rhs = [&built, zero_u](double, const ClosedLoopState& x) {
      const BodyDeriv d = euler_poincare_rhs(built.plant, x.g, x.v, zero_u);
      StateDeriv sd;
      sd.g_velocity = d.velocity;
      sd.v_dot = d.accel;
      sd.w_dot = Eigen::VectorXd::Zero(x.w.size());
      sd.eta_dot = 0.0;
      return sd;
    };
  } else {
    rhs = [&built](double t, const ClosedLoopState& x) {
      return closed_loop_rhs(built.plant, built.gains, built.shaping, built.bank, t, x);
    };
  }
  return integrate(built.plant, rhs, built.x0, s.t0, s.t_end, built.step, opts);
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
}

int run_simulation(const Scenario& s, const std::string& out_dir, int thin) {
  const BuiltScenario built = build_scenario(s);
  Trajectory traj = run_loop(s, built, thin);
  fill_energy(s, built, traj);
  if (s.out_trajectory)
    write_trajectory_csv(out_dir + "/trajectory.csv", built.plant, traj);
  write_json(out_dir + "/summary.json", summary_json(s, built, traj));
  return traj.faulted ? 3 : 0;
}

int run_compare(const Scenario& s, const std::string& out_dir) {
  Scenario base = s;
  base.loop = "closed";
  json ladder = json::array();
  double previous = std::numeric_limits<double>::quiet_NaN();

  for (double omega : s.omega_ladder) {
    Scenario at = base;
    at.omega = omega;
    const BuiltScenario built = build_scenario(at);

    // The configured initial state is the transformed/averaged one; the
    // closed loop starts at its preimage under the change of variables.
    const AveragedState xbar0 = built.x0;
    const ClosedLoopState x0 =
        from_tilde(built.plant, built.gains, built.shaping, built.bank, at.t0, xbar0);

    Trajectory closed = integrate(
        built.plant,
        [&](double t, const ClosedLoopState& x) {
          return closed_loop_rhs(built.plant, built.gains, built.shaping, built.bank, t, x);
        },
        x0, at.t0, at.t_end, built.step);
    Trajectory averaged = integrate(
        built.plant,
        [&](double, const ClosedLoopState& x) {
          return averaged_rhs(built.plant, built.gains, built.shaping, x);
        },
        xbar0, at.t0, at.t_end, built.step);
    if (closed.faulted || averaged.faulted) {
      ladder.push_back({{"omega", omega}, {"sup_error", nullptr}, {"faulted", true}});
      continue;
    }
    const double err = approximation_error(closed, averaged, built.plant, built.gains,
                                           built.shaping, built.bank);
    json row = {{"omega", omega}, {"sup_error", err}, {"faulted", false}};
    if (std::isfinite(previous) && previous > 0.0) row["ratio_to_previous"] = err / previous;
    previous = err;
    ladder.push_back(row);
  }
  write_json(out_dir + "/compare.json", json{{"scenario", s.name}, {"ladder", ladder}});
  return 0;
}

int run_linearize(const Scenario& s, const std::string& out_dir) {
  const BuiltScenario built = build_scenario(s);
  std::optional<Eigen::VectorXd> gstar = s.g_star;
  if (!gstar) gstar = objective_default_gstar(s.objective_key);
  if (!gstar)
    throw ValidationError("linearize needs g_star (no natural minimizer for objective)",
                          {"g_star"});

  AveragedState x_star;
  x_star.g = *gstar;
  x_star.v = Eigen::VectorXd::Zero(built.plant.dim());
  x_star.w = Eigen::VectorXd::Zero(built.plant.dim());
  x_star.eta = measure_output(built.plant, *gstar);

  const Linearization lin =
      linearize_averaged(built.plant, built.gains, built.shaping, x_star);
  json eigs = json::array();
  double max_re = -std::numeric_limits<double>::infinity();
  double max_im_over_re = 0.0;
  for (const auto& ev : lin.eigenvalues) {
    eigs.push_back({ev.real(), ev.imag()});
    max_re = std::max(max_re, ev.real());
    if (ev.real() != 0.0)
      max_im_over_re = std::max(max_im_over_re, std::abs(ev.imag() / ev.real()));
  }
  json j = {{"scenario", s.name},
            {"eigenvalues", eigs},
            {"max_real_part", max_re},
            {"max_imag_over_real", max_im_over_re},
            {"hurwitz", max_re < 0.0}};
  write_json(out_dir + "/linearize.json", j);
  return 0;
}

int run_scan(const Scenario& s, const std::string& out_dir,
             std::optional<std::uint64_t> seed_override) {
  const BuiltScenario built = build_scenario(s);
  std::optional<Eigen::VectorXd> gstar = s.g_star;
  if (!gstar) gstar = objective_default_gstar(s.objective_key);
  if (!gstar) throw ValidationError("stability-scan needs g_star", {"g_star"});

  ScanSetup setup{built.plant,
                  built.gains,
                  built.shaping,
                  built.bank,
                  AveragedState{},
                  s.scan.epsilons,
                  s.scan.omegas,
                  s.scan.init_samples,
                  s.scan.dither_phases,
                  s.scan.delta,
                  s.scan.horizon,
                  s.steps_per_period,
                  seed_override ? *seed_override : s.scan.seed,
                  s.scan.use_averaged_flow};
  setup.x_star.g = *gstar;
  setup.x_star.v = Eigen::VectorXd::Zero(built.plant.dim());
  setup.x_star.w = Eigen::VectorXd::Zero(built.plant.dim());
  setup.x_star.eta = measure_output(built.plant, *gstar);

  const StabilityReport report = practical_stability_scan(setup);

  json cells = json::array();
  for (const auto& c : report.cells) {
    json st = json::array();
    for (double v : c.settle_times) {
      if (std::isfinite(v))
        st.push_back(v);
      else
        st.push_back(nullptr);
    }
    cells.push_back({{"omega", c.omega},
                     {"t0", c.t0},
                     {"sample", c.sample},
                     {"sup_deviation", std::isfinite(c.sup_deviation)
                                           ? json(c.sup_deviation)
                                           : json(nullptr)},
                     {"settle_times", st},
                     {"faulted", c.faulted}});
  }
  json spe = json::array();
  for (double v : report.smallest_passing_eps) {
    if (std::isfinite(v))
      spe.push_back(v);
    else
      spe.push_back(nullptr);
  }
  json j = {{"scenario", s.name},
            {"eps_grid", report.eps_grid},
            {"omega_ladder", report.omega_ladder},
            {"stay", report.stay},
            {"settle", report.settle},
            {"smallest_passing_eps", spe},
            {"cells", cells}};
  write_json(out_dir + "/stability_scan.json", j);
  return 0;
}

int run_signals_check(const Scenario& s, const std::string& out_dir) {
  DitherBank bank;
  if (s.bank_variant == "custom") {
    bank = tabulated_bank(s.bank_period, s.bank_samples);
  } else {
    int m = s.rn_dim;
    if (s.plant_key == "kirchhoff") m = 6;
    if (s.bank_variant == "fig1") m = 2;
    if (s.bank_variant == "fig2") m = 6;
    bank = make_harmonic_bank(m, bank_variant_from_key(s.bank_variant));
  }
  const BankReport report = validate_bank(bank);
  const Eigen::MatrixXd lambda = lambda_matrix(bank);

  json gram = json::array(), lam = json::array();
  for (int i = 0; i < bank.channels; ++i) {
    json gr = json::array(), lr = json::array();
    for (int k = 0; k < bank.channels; ++k) {
      gr.push_back(report.gram(i, k));
      lr.push_back(lambda(i, k));
    }
    gram.push_back(gr);
    lam.push_back(lr);
  }
  json j = {{"variant", s.bank_variant}, {"channels", bank.channels},
            {"gram", gram},              {"lambda", lam},
            {"gram_defect", report.gram_defect}, {"max_mean_abs", report.max_mean_abs},
            {"ok", report.ok}};
  write_json(out_dir + "/signals_check.json", j);
  return report.ok ? 0 : 4;
}

}  // namespace

int run_subcommand(const std::string& name, const Scenario& scenario,
                   const std::string& out_dir, const RunOverrides& overrides) {
  Scenario s = scenario;
  if (overrides.omega) s.omega = *overrides.omega;
  std::filesystem::create_directories(out_dir);

  if (name == "simulate") return run_simulation(s, out_dir, overrides.thin);
  if (name == "average") {
    s.loop = "averaged";
    return run_simulation(s, out_dir, overrides.thin);
  }
  if (name == "compare") return run_compare(s, out_dir);
  if (name == "stability-scan") return run_scan(s, out_dir, overrides.seed);
  if (name == "linearize") return run_linearize(s, out_dir);
  if (name == "signals-check") return run_signals_check(s, out_dir);
  throw std::invalid_argument("unknown subcommand: " + name);
}

}  // namespace geoseek
