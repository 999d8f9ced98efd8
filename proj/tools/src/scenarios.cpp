#include "scenarios.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

#include "output.hpp"
#include "starlab/error.hpp"
#include "starlab/expansion.hpp"
#include "starlab/functionals.hpp"
#include "starlab/homogeneous.hpp"
#include "starlab/lagrangian.hpp"
#include "starlab/profile.hpp"
#include "starlab/verification.hpp"

namespace starlab::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Carries the pipeline stage that raised a library error.
struct StageError : std::runtime_error {
  StageError(const std::string& stage, const std::string& what)
      : std::runtime_error(stage + ": " + what) {}
};

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e.what());
  }
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

GridSpec profile_grid(const ScenarioConfig& c) {
  GridSpec g;
  g.cells = c.grid.profile_cells;
  g.rtol = c.grid.rtol;
  g.atol = c.grid.atol;
  return g;
}

double linear_a1(const ScenarioConfig& c) { return c.model.a1.value_or(1.0); }

// ---------------------------------------------------------------- profile

void run_profile(const ScenarioConfig& c, const fs::path& out, RunReport& rep) {
  if (c.model.profile == "thermo") {
    const ThermoProfile p = stage("profile", [&] {
      return solve_thermo_profile(c.model.K, c.model.epsilon, profile_grid(c), c.model.central_density);
    });
    CsvTable t({"y", "rho_bar", "theta_bar", "theta_bar_prime", "mass", "moment4"});
    for (std::size_t i = 0; i < p.y.size(); ++i) {
      t.add({p.y[i], p.rho_bar[i], p.theta_bar[i], p.theta_bar_prime[i], p.cumulative_mass[i],
             p.cumulative_moment4[i]});
    }
    t.write(out / "profile.csv");
    write_text(out / "profile.svg",
               line_chart_svg({"thermodynamic profile", "y", "value", false},
                              {{"rho_bar", p.y, p.rho_bar}, {"theta_bar", p.y, p.theta_bar}}));
    rep.summary = {{"kind", "thermo"}, {"R0", p.R0}, {"R0_density", p.R0_density},
                   {"theta_slope", p.theta_slope}, {"total_mass", p.total_mass},
                   {"fourth_moment", p.fourth_moment}, {"central_density", p.central_density}};
    rep.text = "thermodynamic profile: R0 = " + fmt("%.10f", p.R0) + ", mass = " + fmt("%.8f", p.total_mass);
  } else {
    const IsentropicProfile p =
        stage("profile", [&] { return solve_isentropic_profile(c.model.delta, profile_grid(c)); });
    CsvTable t({"y", "rho_bar", "w", "w_prime", "mass", "moment4"});
    for (std::size_t i = 0; i < p.y.size(); ++i) {
      t.add({p.y[i], p.rho_bar[i], p.w[i], p.w_prime[i], p.cumulative_mass[i], p.cumulative_moment4[i]});
    }
    t.write(out / "profile.csv");
    write_text(out / "profile.svg",
               line_chart_svg({"isentropic profile, delta = " + fmt("%g", c.model.delta), "y", "value", false},
                              {{"rho_bar", p.y, p.rho_bar}, {"rho_bar^(1/3)", p.y, p.w}}));
    rep.summary = {{"kind", "isentropic"}, {"delta", p.delta}, {"R0", p.R0},
                   {"boundary_slope", p.boundary_slope}, {"total_mass", p.total_mass},
                   {"fourth_moment", p.fourth_moment}};
    rep.text = "isentropic profile: R0 = " + fmt("%.10f", p.R0) + ", slope = " + fmt("%.10f", p.boundary_slope);
  }
  rep.outputs = {"profile.csv", "profile.svg"};
}

// ---------------------------------------------------------------- expansion

void run_expansion(const ScenarioConfig& c, const fs::path& out, RunReport& rep) {
  const ExpansionParams p = stage("expansion", [&] {
    return classify_expansion(c.model.delta, c.model.a0, linear_a1(c));
  });
  DtSpec dt;
  dt.max_step = c.run.dt_max;
  dt.rtol = c.grid.rtol;
  dt.atol = c.grid.atol;
  const ExpansionPath path = stage("expansion", [&] { return integrate_alpha(p, c.run.end, dt); });
  CsvTable t({"t", "alpha", "alpha_prime", "s", "tau"});
  for (std::size_t i = 0; i < path.t.size(); ++i) {
    t.add({path.t[i], path.alpha[i], path.alpha_prime[i], path.s[i], path.tau[i]});
  }
  t.write(out / "alpha.csv");
  write_text(out / "alpha.svg",
             line_chart_svg({"expansion rate, " + std::string(to_string(p.classification)), "t", "alpha", false},
                            {{"alpha", path.t, path.alpha}}));
  json s = {{"classification", std::string(to_string(p.classification))}, {"a1_star", p.a1_star},
            {"t_end", path.t.back()}, {"alpha_end", path.alpha.back()}};
  s["beta1"] = p.beta1 ? json(*p.beta1) : json(nullptr);
  s["beta2"] = p.beta2 ? json(*p.beta2) : json(nullptr);
  s["fitted_c1"] = path.fitted_c1 ? json(*path.fitted_c1) : json(nullptr);
  s["fitted_c2"] = path.fitted_c2 ? json(*path.fitted_c2) : json(nullptr);
  rep.text = "expansion: " + std::string(to_string(p.classification)) + ", alpha(" +
             fmt("%g", path.t.back()) + ") = " + fmt("%.10g", path.alpha.back());
  if (path.T_collapse) {
    s["T_collapse"] = *path.T_collapse;
    s["collapse_exponent"] = stage("expansion", [&] { return collapse_exponent(path); });
    rep.events.push_back("collapse at t = " + fmt("%.10g", *path.T_collapse));
    rep.text += ", collapse at t = " + fmt("%.10g", *path.T_collapse);
  }
  rep.summary = s;
  rep.outputs = {"alpha.csv", "alpha.svg"};
}

// ---------------------------------------------------------------- phase

void run_phase(const ScenarioConfig& c, const fs::path& out, RunReport& rep) {
  std::vector<std::pair<double, double>> init = c.phase.initial;
  if (init.empty()) {
    for (double p : {-0.1, 0.0, 0.1})
      for (double v : {-0.05, 0.0, 0.05}) init.emplace_back(p, v);
  }
  PhaseDtSpec dt;
  dt.max_step = c.run.dt_max;
  dt.rtol = c.grid.rtol;
  dt.atol = c.grid.atol;
  const double delta = c.phase.delta;
  std::vector<Series> lines;
  json fates = json::array();
  std::ostringstream text;
  text << "phase plane, delta = " << delta << ":";
  for (std::size_t k = 0; k < init.size(); ++k) {
    const auto [p0, v0] = init[k];
    const PhaseTrajectory tr = stage("homogeneous", [&] { return integrate_phase({p0, v0, delta}, c.run.end, dt); });
    CsvTable t({"s", "phi", "phi_s", "energy", "curve_distance"});
    for (std::size_t i = 0; i < tr.s.size(); ++i) t.add({tr.s[i], tr.phi[i], tr.phi_s[i], tr.energy(i), tr.curve_distance(i)});
    char name[48];
    std::snprintf(name, sizeof name, "trajectory_%02zu.csv", k);
    t.write(out / name);
    rep.outputs.emplace_back(name);
    // clip far excursions so the portrait stays readable
    Series sr{"(" + fmt("%g", p0) + ", " + fmt("%g", v0) + ")", {}, {}};
    for (std::size_t i = 0; i < tr.s.size(); ++i) {
      if (std::abs(tr.phi[i]) > 1.0 || std::abs(tr.phi_s[i]) > 1.0) break;
      sr.x.push_back(tr.phi[i]);
      sr.y.push_back(tr.phi_s[i]);
    }
    lines.push_back(std::move(sr));
    json f = {{"phi0", p0}, {"phi_s0", v0}, {"fate", std::string(to_string(tr.fate))},
              {"s_end", tr.s.back()}, {"reached_floor", tr.reached_floor},
              {"max_curve_distance", tr.max_curve_distance}};
    f["first_escape_s"] = tr.first_escape_s ? json(*tr.first_escape_s) : json(nullptr);
    fates.push_back(f);
    if (tr.first_escape_s) {
      rep.events.push_back(std::string(tr.fate == PhaseFate::Collapse ? "collapse" : "growth") +
                           " from (" + fmt("%g", p0) + ", " + fmt("%g", v0) + ") at s = " +
                           fmt("%.6g", *tr.first_escape_s));
    }
    text << "\n  (" << p0 << ", " << v0 << ") -> " << to_string(tr.fate);
  }
  Series curve{"zero-energy curve", {}, {}};
  for (int i = 0; i <= 200; ++i) {
    const double p = -0.9 + 1.9 * i / 200.0;
    const double v = curve_phi_s(p, delta);
    if (std::abs(v) <= 1.0) {
      curve.x.push_back(p);
      curve.y.push_back(v);
    }
  }
  lines.insert(lines.begin(), curve);
  write_text(out / "portrait.svg", line_chart_svg({"phase portrait, delta = " + fmt("%g", delta), "phi", "phi_s", false}, lines));
  write_json(out / "fates.json", fates);
  rep.outputs.emplace_back("portrait.svg");
  rep.outputs.emplace_back("fates.json");
  rep.summary = {{"delta", delta}, {"trajectories", fates}};
  rep.text = text.str();
}

// ---------------------------------------------------------------- evolution

json ledger_schema(const std::vector<std::string>& columns, Regime regime) {
  static const std::map<std::string, std::string> fixed = {
      {"clock", "run clock (s or tau)"},
      {"omega", "amplitude: max sup of |h|, |x h_x|, |h_t|, |x h_xt| (thermo adds |zeta/(R0 - x)|)"},
      {"E_pert", "self-similar perturbation energy E(s) (0 in linear regimes)"},
      {"D_pert", "self-similar dissipation D(s) (0 in linear regimes)"},
      {"identity_residual", "E(s) - E(0) + int alpha_bar^{3/2} D ds (self-similar)"},
      {"E0", "initial-energy functional"},
      {"energy_total", "sum of the energy ledger terms"},
      {"dissipation_total", "sum of the time-integrated dissipation terms"}};
  json cols = json::array();
  for (const std::string& c : columns) {
    std::string desc;
    if (auto it = fixed.find(c); it != fixed.end()) desc = it->second;
    else if (c.rfind("E.", 0) == 0) desc = "weighted energy term";
    else if (c.rfind("D.", 0) == 0) desc = "weighted dissipation term, integrated in the clock";
    else desc = "self-similar identity term";
    cols.push_back({{"name", c}, {"description", desc}});
  }
  return {{"regime", std::string(to_string(regime))}, {"columns", cols}};
}

void run_evolution(const ScenarioConfig& c, const fs::path& out, RunReport& rep) {
  const Regime regime = c.scenario == Scenario::EvolveSS       ? Regime::SelfSimilar
                        : c.scenario == Scenario::EvolveLinear ? Regime::LinearIsentropic
                                                               : Regime::LinearThermo;
  const bool thermo = regime == Regime::LinearThermo;

  // profile and expansion
  IsentropicProfile iprof;
  ThermoProfile tprof;
  LagrangianGrid grid;
  ProfileSampler sampler;
  double total_mass = 0.0;
  if (thermo) {
    tprof = stage("profile", [&] {
      return solve_thermo_profile(c.model.K, c.model.epsilon, profile_grid(c), c.model.central_density);
    });
    if (c.model.c_nu) tprof.c_nu = *c.model.c_nu;
    grid = stage("lagrangian", [&] { return make_grid(tprof, c.grid.cells); });
    sampler = tprof.sampler();
    total_mass = tprof.total_mass;
  } else {
    iprof = stage("profile", [&] { return solve_isentropic_profile(c.model.delta, profile_grid(c)); });
    grid = stage("lagrangian", [&] { return make_grid(iprof, c.grid.cells); });
    sampler = iprof.sampler();
    total_mass = iprof.total_mass;
  }
  const double delta = thermo ? 0.0 : c.model.delta;
  const double a1 = regime == Regime::SelfSimilar
                        ? c.model.a1.value_or(std::sqrt(2.0 * std::abs(delta) / c.model.a0))
                        : linear_a1(c);
  const ExpansionParams params = stage("expansion", [&] { return classify_expansion(delta, c.model.a0, a1); });

  // initial data
  InitialData init;
  const PerturbationBlock& pb = c.perturbation;
  stage("lagrangian", [&] {
    init.theta0 = make_shape(grid, seeded(pb.theta0, c.seed, 0));
    init.theta1 = make_shape(grid, seeded(pb.theta1, c.seed, 1));
    if (thermo) {
      init.zeta0 = make_shape(grid, seeded(pb.zeta0, c.seed, 2));
      // taper so that zeta vanishes at R0
      for (std::size_t i = 0; i < grid.size(); ++i) init.zeta0[i] *= (grid.R0 - grid.x[i]) / grid.R0;
    }
    return 0;
  });
  if (pb.negative_energy) {
    init = stage("functionals", [&] { return negative_energy_data(grid, params, init.theta0, pb.omega.value_or(1e-3)); });
  } else if (pb.omega) {
    scale_to_amplitude(init, grid, *pb.omega);
  }

  SolverSpec spec;
  spec.mu = c.model.mu;
  spec.dt_max = c.run.dt_max;
  spec.cfl = c.run.cfl;
  spec.max_rel_change = c.run.max_rel_change;
  spec.fixed_dt = c.run.fixed_dt;
  spec.dt_floor = c.run.dt_floor;
  spec.growth_threshold = c.run.growth_threshold;
  const auto n_emit = static_cast<std::size_t>(std::floor(c.run.end / c.run.emit_every + 1e-9));
  for (std::size_t k = 1; k <= n_emit; ++k) spec.emit_at.push_back(static_cast<double>(k) * c.run.emit_every);

  LedgerAccumulator ledger = stage("functionals", [&] {
    return LedgerAccumulator(grid, regime, params, c.weights, c.model.mu);
  });
  std::vector<EnergyReport> rows;
  std::size_t next = 0;
  const double tiny = 1e-9 * std::max(1.0, c.run.end);
  double min_d = HUGE_VAL;
  bool boundary_ok = true;
  std::vector<double> targets = spec.emit_at;
  targets.insert(targets.begin(), 0.0);
  if (targets.back() < c.run.end - tiny) targets.push_back(c.run.end);
  auto observer = [&](const PerturbationField& f, const StepInfo& info) {
    const EnergyReport& r = ledger.observe(f);
    min_d = std::min(min_d, info.dissipation);
    if (thermo && f.zeta.back() != 0.0) boundary_ok = false;
    while (next < targets.size() && targets[next] < f.clock - tiny) ++next;
    if (next < targets.size() && std::abs(f.clock - targets[next]) <= tiny) {
      rows.push_back(r);
      rows.back().clock = targets[next];
      ++next;
    }
  };
  const EvolutionRun run = stage("lagrangian", [&] {
    switch (regime) {
      case Regime::SelfSimilar: return evolve_self_similar(grid, params, init, c.run.end, spec, observer);
      case Regime::LinearIsentropic: return evolve_linear_isentropic(grid, params, init, c.run.end, spec, observer);
      case Regime::LinearThermo: break;
    }
    return evolve_linear_thermo(grid, params, init, c.run.end, spec, observer);
  });
  if (rows.empty() || rows.back().clock != ledger.latest().clock) rows.push_back(ledger.latest());

  for (const Event& e : run.events) {
    rep.events.push_back(std::string(to_string(e.kind)) + " at clock " + fmt("%.6g", e.clock) + ": " + e.detail);
  }
  if (min_d < 0.0) rep.events.push_back("invariant break: negative dissipation " + fmt("%.3e", min_d));
  if (!boundary_ok) rep.events.push_back("invariant break: zeta(R0) != 0");

  // snapshots
  std::vector<std::string> head = {"clock", "x", "theta", "theta_t", "theta_tt"};
  if (thermo) head.insert(head.end(), {"zeta", "zeta_t"});
  CsvTable snaps(head);
  CsvTable phys(thermo ? std::vector<std::string>{"clock", "t", "alpha", "R", "E", "D", "kinetic", "internal",
                                                   "gravity", "boundary_flux", "heat_generation", "mass_error"}
                       : std::vector<std::string>{"clock", "t", "alpha", "R", "E", "D", "kinetic", "internal",
                                                   "gravity", "mass_error"});
  Series omega_s{"omega", {}, {}}, phys_e{"E", {}, {}};
  double worst_mass = 0.0;
  for (const PerturbationField& f : run.snapshots) {
    for (std::size_t i = 0; i < f.x.size(); ++i) {
      std::vector<double> row = {f.clock, f.x[i], f.theta[i], f.theta_t[i],
                                 f.theta_tt.empty() ? 0.0 : f.theta_tt[i]};
      if (thermo) {
        row.push_back(f.zeta[i]);
        row.push_back(f.zeta_t.empty() ? 0.0 : f.zeta_t[i]);
      }
      snaps.add(row);
    }
    const EulerianSnapshot e = stage("lagrangian", [&] { return reconstruct_eulerian(f, grid, params); });
    const PhysicalEnergy pe = stage("functionals", [&] { return physical_energy(e, grid, c.model.mu); });
    const double merr = mass_conservation_error(e, sampler, total_mass);
    worst_mass = std::max(worst_mass, merr);
    if (thermo) {
      phys.add({f.clock, e.t, e.alpha, e.R, pe.E, pe.D, pe.kinetic, pe.internal, pe.gravity,
                pe.boundary_flux, pe.heat_generation, merr});
    } else {
      phys.add({f.clock, e.t, e.alpha, e.R, pe.E, pe.D, pe.kinetic, pe.internal, pe.gravity, merr});
    }
    phys_e.x.push_back(f.clock);
    phys_e.y.push_back(pe.E);
  }

  // energy report
  std::vector<std::string> cols = {"clock", "omega", "E_pert", "D_pert", "identity_residual", "E0",
                                   "energy_total", "dissipation_total"};
  for (const auto& [name, v] : rows.front().ledger) cols.push_back(name);
  CsvTable energy(cols);
  Series etot{regime == Regime::SelfSimilar ? "E(s)" : "energy ledger", {}, {}};
  for (const EnergyReport& r : rows) {
    std::vector<double> row = {r.clock, r.omega, r.E_pert, r.D_pert, r.identity_residual, r.E0,
                               r.energy_total, r.dissipation_total};
    for (const auto& [name, v] : r.ledger) row.push_back(v);
    energy.add(row);
    omega_s.x.push_back(r.clock);
    omega_s.y.push_back(r.omega);
    etot.x.push_back(r.clock);
    etot.y.push_back(regime == Regime::SelfSimilar ? r.E_pert : r.energy_total);
  }
  snaps.write(out / "snapshots.csv");
  energy.write(out / "energy.csv");
  phys.write(out / "physical.csv");
  write_json(out / "energy_schema.json", ledger_schema(cols, regime));
  const std::string clock_name = regime == Regime::SelfSimilar ? "s" : "tau";
  write_text(out / "omega.svg", line_chart_svg({"perturbation amplitude", clock_name, "omega", true}, {omega_s}));
  write_text(out / "energy.svg", line_chart_svg({"perturbation energy", clock_name, "energy", false}, {etot}));
  write_text(out / "physical_energy.svg", line_chart_svg({"physical energy", clock_name, "E", false}, {phys_e}));
  rep.outputs = {"snapshots.csv", "energy.csv", "energy_schema.json", "physical.csv",
                 "omega.svg", "energy.svg", "physical_energy.svg"};

  double omega_max = 0.0;
  for (const EnergyReport& r : rows) omega_max = std::max(omega_max, r.omega);
  rep.summary = {{"regime", std::string(to_string(regime))},
                 {"clock_end", run.last.clock},
                 {"steps", run.steps},
                 {"min_dt", run.min_dt},
                 {"max_dt", run.max_dt},
                 {"omega_initial", rows.front().omega},
                 {"omega_max", omega_max},
                 {"min_dissipation", min_d},
                 {"max_mass_error", worst_mass},
                 {"identity_residual_end", rows.back().identity_residual},
                 {"R0", grid.R0}};
  std::ostringstream text;
  text << to_string(regime) << " run: " << run.steps << " steps to clock " << run.last.clock
       << ", omega(0) = " << fmt("%.3e", rows.front().omega) << ", max omega = " << fmt("%.3e", omega_max)
       << ", max mass error = " << fmt("%.1e", worst_mass);
  rep.text = text.str();
}

// ---------------------------------------------------------------- verify

void run_verify(const fs::path& out, RunReport& rep) {
  json results = json::array();
  std::ostringstream text;
  int passed = 0;
  for (int id = 1; id <= kCriterionCount; ++id) {
    const CriterionResult r = run_criterion(id);
    text << format_result(r) << '\n';
    results.push_back({{"id", r.id}, {"name", r.name}, {"passed", r.passed}, {"detail", r.detail},
                       {"seconds", r.seconds}});
    if (r.passed) ++passed;
    else rep.events.push_back("criterion " + std::to_string(id) + " failed: " + r.detail);
  }
  text << passed << "/" << kCriterionCount << " criteria passed";
  rep.failed = passed != kCriterionCount;
  write_json(out / "verify.json", results);
  rep.outputs = {"verify.json"};
  rep.summary = {{"passed", passed}, {"total", kCriterionCount}};
  rep.text = text.str();
}

}  // namespace

RunReport run_scenario(const ScenarioConfig& config, const fs::path& out_dir) {
  RunReport rep;
  fs::create_directories(out_dir);
  try {
    switch (config.scenario) {
      case Scenario::Profile: run_profile(config, out_dir, rep); break;
      case Scenario::Expansion: run_expansion(config, out_dir, rep); break;
      case Scenario::Phase: run_phase(config, out_dir, rep); break;
      case Scenario::EvolveSS:
      case Scenario::EvolveLinear:
      case Scenario::EvolveThermo: run_evolution(config, out_dir, rep); break;
      case Scenario::Verify: run_verify(out_dir, rep); break;
    }
  } catch (const StageError& e) {
    rep.error = e.what();
  } catch (const Error& e) {
    rep.error = std::string("output: ") + e.what();
  } catch (const std::exception& e) {
    rep.error = std::string("internal: ") + e.what();
  }
  json manifest = {{"version", kVersion},
                   {"config", config.to_json()},
                   {"events", rep.events},
                   {"outputs", rep.outputs},
                   {"summary", rep.summary}};
  manifest["error"] = rep.error.empty() ? json(nullptr) : json(rep.error);
  write_json(out_dir / "manifest.json", manifest);
  return rep;
}

}  // namespace starlab::cli
