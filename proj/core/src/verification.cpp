#include "starlab/verification.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>

#include <boost/numeric/odeint.hpp>

#include "starlab/error.hpp"
#include "starlab/expansion.hpp"
#include "starlab/functionals.hpp"
#include "starlab/homogeneous.hpp"
#include "starlab/lagrangian.hpp"
#include "starlab/profile.hpp"

namespace starlab {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Self-similar delta with an existing profile; see README.
constexpr double kSsDelta = -0.001;

ExpansionParams ss_params(double delta) {
  return classify_expansion(delta, 1.0, std::sqrt(2.0 * std::abs(delta)));
}

// ---------------------------------------------------------------- 1, 2

CriterionResult profile_isentropic() {
  CriterionResult r{1, "isentropic profile", false, "", 0.0};
  const auto t0 = Clock::now();
  GridSpec coarse;
  coarse.cells = 200;
  const IsentropicProfile p = solve_isentropic_profile(0.0, coarse);
  const double secs = seconds_since(t0);
  GridSpec fine = coarse;
  fine.cells = 400;
  const IsentropicProfile q = solve_isentropic_profile(0.0, fine);
  const double rel = std::abs(q.boundary_slope - p.boundary_slope) / std::abs(p.boundary_slope);
  const bool ok_r0 = std::abs(p.R0 - 13.7937) <= 2e-3;
  const bool ok_slope = std::isfinite(p.boundary_slope) && p.boundary_slope < 0.0 && rel < 1e-3;
  r.passed = ok_r0 && ok_slope && secs < 1.0;
  r.detail = "R0 = " + fmt("%.9f", p.R0) + ", slope = " + fmt("%.9f", p.boundary_slope) +
             ", refinement change " + fmt("%.1e", rel) + ", solve " + fmt("%.3f", secs) + " s";
  return r;
}

CriterionResult profile_thermo() {
  CriterionResult r{2, "thermodynamic profile", false, "", 0.0};
  const auto t0 = Clock::now();
  const ThermoProfile p = solve_thermo_profile(1.0, 0.25);
  const double secs = seconds_since(t0);
  double worst = 0.0;
  for (std::size_t i = 0; i < p.y.size(); ++i) {
    if (p.y[i] > 0.95 * p.R0) break;
    const double th = p.theta_bar[i];
    const double model = p.central_density * th * th * th;
    worst = std::max(worst, std::abs(p.rho_bar[i] - model) / model);
  }
  const double gap = std::abs(p.R0_density - p.R0) / p.R0;
  r.passed = worst < 1e-6 && gap < 1e-6 && secs < 2.0;
  r.detail = "max |rho/(A theta^3) - 1| = " + fmt("%.2e", worst) + ", zero gap " + fmt("%.2e", gap) +
             " R0, R0 = " + fmt("%.9f", p.R0) + ", solve " + fmt("%.3f", secs) + " s";
  return r;
}

// ---------------------------------------------------------------- 3

ExpansionClass expected_class(double delta, double a0, double a1) {
  if (delta > 0.0) return ExpansionClass::PositiveDelta;
  if (delta == 0.0) return a1 < 0.0 ? ExpansionClass::Collapse : ExpansionClass::Linear;
  const double star = std::sqrt(2.0 * std::abs(delta) / a0);
  if (std::abs(a1 - star) <= 1e-12 * star) return ExpansionClass::SelfSimilar;
  return a1 > star ? ExpansionClass::Linear : ExpansionClass::Collapse;
}

CriterionResult expansion_trichotomy() {
  CriterionResult r{3, "expansion trichotomy", false, "", 0.0};
  const auto t0 = Clock::now();
  struct Case {
    double delta, a0, a1;
  };
  const std::array<Case, 12> cases{{{-0.5, 1.0, 1.0},
                                    {-0.08, 2.0, std::sqrt(0.08)},
                                    {-2.0, 0.5, std::sqrt(8.0)},
                                    {-0.5, 1.0, 1.5},
                                    {-0.1, 1.0, 1.0},
                                    {0.0, 1.0, 1.0},
                                    {-0.5, 1.0, 0.5},
                                    {-0.5, 1.0, -1.0},
                                    {-1.0, 2.0, 0.2},
                                    {0.5, 1.0, 1.0},
                                    {0.0, 1.0, -0.5},
                                    {2.0, 3.0, -0.1}}};
  int mismatches = 0;
  double ss_err = 0.0;
  double exp_err = 0.0;
  for (const Case& c : cases) {
    const ExpansionParams p = classify_expansion(c.delta, c.a0, c.a1);
    if (p.classification != expected_class(c.delta, c.a0, c.a1)) ++mismatches;
    if (p.classification == ExpansionClass::SelfSimilar) {
      const ExpansionPath path = integrate_alpha(p, 10.0);
      for (std::size_t i = 0; i < path.t.size(); ++i) {
        const double exact = self_similar_alpha(c.a0, c.a1, path.t[i]);
        ss_err = std::max(ss_err, std::abs(path.alpha[i] / exact - 1.0));
      }
    } else if (p.classification == ExpansionClass::Collapse) {
      const ExpansionPath path = integrate_alpha(p, 100.0);
      if (!path.T_collapse) {
        exp_err = HUGE_VAL;
      } else {
        // gravity-driven collapse follows (T - t)^{2/3}; without gravity alpha is linear
        const double expected = c.delta < 0.0 ? 2.0 / 3.0 : 1.0;
        exp_err = std::max(exp_err, std::abs(collapse_exponent(path) - expected));
      }
    }
  }
  const double secs = seconds_since(t0);
  r.passed = mismatches == 0 && ss_err < 1e-8 && exp_err <= 0.02 && secs < 2.0;
  r.detail = std::to_string(mismatches) + " misclassified of 12, closed-form error " +
             fmt("%.1e", ss_err) + ", collapse exponent error " + fmt("%.1e", exp_err);
  return r;
}

// ---------------------------------------------------------------- 4, 5

CriterionResult phase_dichotomy() {
  CriterionResult r{4, "phase-plane dichotomy", false, "", 0.0};
  const double delta = -0.5;
  const PhaseTrajectory up = integrate_phase({0.0, 0.05, delta}, 60.0);
  const PhaseTrajectory down = integrate_phase({0.0, -0.05, delta}, 60.0);
  const bool up_ok = up.first_escape_s && up.fate == PhaseFate::Expand;
  const bool down_ok = down.first_escape_s && down.fate == PhaseFate::Collapse;
  double drift = 0.0;
  double identity = 0.0;
  PhaseDtSpec tight;
  tight.rtol = tight.atol = 1e-12;
  for (double phi : {-0.6, -0.3, 0.2, 1.0, 3.0}) {
    const PhaseTrajectory t = integrate_phase({phi, curve_phi_s(phi, delta), delta}, 5.0, tight);
    drift = std::max(drift, t.max_curve_distance);
  }
  for (const PhaseTrajectory* t : {&up, &down}) {
    for (std::size_t i = 0; i < t->s.size(); ++i) {
      // relative to the size of the terms, which grow like (1+phi)^{-3/2} near collapse
      const PhaseState st{t->phi[i], t->phi_s[i], delta};
      const auto [dphi, dphis] = phase_rhs(st);
      const double b = st.b();
      const double w = std::pow(1.0 + st.phi, -1.5);
      const double scale = std::abs(dphis) + b * (1.0 + 0.5 * w) * std::abs(dphi) +
                           0.5 * b * (1.0 + w) * std::abs(phase_bracket(st));
      identity = std::max(identity, std::abs(phase_bracket_identity_residual(st)) / std::max(scale, 1e-300));
    }
  }
  r.passed = up_ok && down_ok && drift < 1e-8 && identity < 1e-8;
  r.detail = "phi > 0.5 at s = " + fmt("%.4f", up.first_escape_s.value_or(NAN)) +
             ", phi < -0.5 at s = " + fmt("%.4f", down.first_escape_s.value_or(NAN)) +
             ", curve drift " + fmt("%.1e", drift) + ", identity residual " + fmt("%.1e", identity);
  return r;
}

CriterionResult zero_energy_manifold() {
  CriterionResult r{5, "zero-energy manifold", false, "", 0.0};
  const double delta = -0.5;
  double worst_curve = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double phi = -0.95 + 5.95 * i / 999.0;
    worst_curve = std::max(worst_curve, std::abs(energy_homogeneous({phi, curve_phi_s(phi, delta), delta})));
  }
  // alpha_bar^{-1} times the homogeneous energy is conserved off the curve
  PhaseDtSpec tight;
  tight.rtol = tight.atol = 1e-12;
  double drift = 0.0;
  const double b = std::sqrt(2.0 * std::abs(delta));
  for (const auto& [phi, phi_s] : {std::pair{0.0, 0.05}, {0.0, -0.05}, {0.3, 0.0}, {-0.2, 0.1}}) {
    const PhaseTrajectory t = integrate_phase({phi, phi_s, delta}, 5.0, tight);
    const double e0 = t.energy(0);
    for (std::size_t i = 0; i < t.s.size(); ++i) {
      // E is a difference of two large terms near collapse; measure against them
      const double psi = 1.0 + t.phi[i];
      const double v = t.phi_s[i] + b * psi;
      const double decay = std::exp(-b * t.s[i]);
      const double scale = std::max(std::abs(e0), decay * (0.5 * v * v + std::abs(delta) / psi));
      drift = std::max(drift, std::abs(decay * t.energy(i) - e0) / scale);
    }
  }
  r.passed = worst_curve <= 1e-12 && drift <= 1e-6;
  r.detail = "max |E| on curve " + fmt("%.1e", worst_curve) +
             ", relative drift of alpha_bar^-1 E " + fmt("%.1e", drift);
  return r;
}

// ---------------------------------------------------------------- 6

CriterionResult energy_identity() {
  CriterionResult r{6, "discrete energy identity", false, "", 0.0};
  const IsentropicProfile prof = solve_isentropic_profile(kSsDelta);
  const ExpansionParams P = ss_params(kSsDelta);
  ShapeSpec bump;
  bump.family = Family::Bump;
  bump.amplitude = 1e-2;
  bump.center = 0.3;
  bump.width = 0.3;
  std::vector<double> res;
  double finest_secs = 0.0;
  for (std::size_t cells : {50, 100, 200}) {
    const auto t0 = Clock::now();
    const LagrangianGrid g = make_grid(prof, cells);
    InitialData d;
    d.theta0 = make_shape(g, bump);
    d.theta1.assign(g.size(), 0.0);
    SolverSpec spec;
    spec.fixed_dt = 0.5 / static_cast<double>(cells);
    LedgerAccumulator acc(g, Regime::SelfSimilar, P);
    double worst = 0.0;
    evolve_self_similar(g, P, d, 1.0, spec, [&](const PerturbationField& f, const StepInfo&) {
      worst = std::max(worst, std::abs(acc.observe(f).identity_residual));
    });
    res.push_back(worst);
    finest_secs = seconds_since(t0);
  }
  const double o1 = std::log2(res[0] / res[1]);
  const double o2 = std::log2(res[1] / res[2]);
  r.passed = o1 >= 1.0 && o2 >= 1.0 && finest_secs < 60.0;
  r.detail = "residuals " + fmt("%.2e", res[0]) + ", " + fmt("%.2e", res[1]) + ", " +
             fmt("%.2e", res[2]) + ", orders " + fmt("%.2f", o1) + ", " + fmt("%.2f", o2);
  return r;
}

// ---------------------------------------------------------------- 7

// x-independent perturbation of a linearly expanding solution: the motion
// is another homogeneous solution beta'' = delta/beta^2.
std::pair<double, double> homogeneous_oracle(double delta, double a0, double a1, double h0,
                                             double h1, double tau_end) {
  using S = std::array<double, 5>;  // alpha, alpha', beta, beta', tau
  namespace odeint = boost::numeric::odeint;
  S x{a0, a1, a0 * (1.0 + h0), a1 * (1.0 + h0) + h1, 0.0};
  auto rhs = [delta](const S& s, S& d, double) {
    d[0] = s[1];
    d[1] = delta / (s[0] * s[0]);
    d[2] = s[3];
    d[3] = delta / (s[2] * s[2]);
    d[4] = 1.0 / s[0];
  };
  // march in t until tau passes tau_end, then secant on the last step
  auto stepper = odeint::make_dense_output(1e-13, 1e-13, odeint::runge_kutta_dopri5<S>());
  stepper.initialize(x, 0.0, 1e-3);
  while (stepper.current_state()[4] < tau_end) stepper.do_step(rhs);
  double lo = stepper.previous_time(), hi = stepper.current_time();
  S y{};
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    stepper.calc_state(mid, y);
    (y[4] < tau_end ? lo : hi) = mid;
  }
  stepper.calc_state(0.5 * (lo + hi), y);
  const double h = y[2] / y[0] - 1.0;
  const double h_tau = (y[3] * y[0] - y[2] * y[1]) / y[0];
  return {h, h_tau};
}

CriterionResult ode_reduction() {
  CriterionResult r{7, "ODE-PDE reduction", false, "", 0.0};
  const auto t0 = Clock::now();
  const double h0 = 0.01, h1 = 0.05;
  double worst_ss = 0.0, worst_lin = 0.0;
  {
    const IsentropicProfile prof = solve_isentropic_profile(kSsDelta);
    const ExpansionParams P = ss_params(kSsDelta);
    const LagrangianGrid g = make_grid(prof, 10);
    InitialData d{std::vector<double>(g.size(), h0), std::vector<double>(g.size(), h1), {}};
    SolverSpec spec;
    spec.fixed_dt = 1e-5;
    spec.emit_at = {0.5, 1.0, 1.5, 2.0};
    const EvolutionRun run = evolve_self_similar(g, P, d, 2.0, spec);
    PhaseDtSpec tight;
    tight.rtol = tight.atol = 1e-12;
    for (const PerturbationField& f : run.snapshots) {
      if (f.clock == 0.0) continue;
      const PhaseTrajectory t = integrate_phase({h0, h1, kSsDelta}, f.clock, tight);
      for (std::size_t i = 0; i < f.theta.size(); ++i) {
        worst_ss = std::max(worst_ss, std::abs(f.theta[i] - t.phi.back()) / std::abs(t.phi.back()));
        worst_ss = std::max(worst_ss, std::abs(f.theta_t[i] - t.phi_s.back()) / std::abs(t.phi_s.back()));
      }
    }
  }
  for (double delta : {0.0, 0.05}) {
    const IsentropicProfile prof = solve_isentropic_profile(delta);
    const ExpansionParams P = classify_expansion(delta, 1.0, 1.0);
    const LagrangianGrid g = make_grid(prof, 10);
    InitialData d{std::vector<double>(g.size(), h0), std::vector<double>(g.size(), h1), {}};
    SolverSpec spec;
    spec.fixed_dt = 1e-5;
    spec.emit_at = {0.5, 1.0, 1.5, 2.0};
    const EvolutionRun run = evolve_linear_isentropic(g, P, d, 2.0, spec);
    for (const PerturbationField& f : run.snapshots) {
      if (f.clock == 0.0) continue;
      const auto [h, ht] = homogeneous_oracle(delta, 1.0, 1.0, h0, h1, f.clock);
      for (std::size_t i = 0; i < f.theta.size(); ++i) {
        worst_lin = std::max(worst_lin, std::abs(f.theta[i] - h) / std::abs(h));
        worst_lin = std::max(worst_lin, std::abs(f.theta_t[i] - ht) / std::abs(ht));
      }
    }
  }
  const double secs = seconds_since(t0);
  r.passed = worst_ss <= 1e-4 && worst_lin <= 1e-4 && secs < 30.0;
  r.detail = "self-similar relative error " + fmt("%.1e", worst_ss) + ", linear " +
             fmt("%.1e", worst_lin);
  return r;
}

// ---------------------------------------------------------------- 8

struct StabilityRun {
  double omega0 = 0.0;
  double omega_max = 0.0;
  double fit_constant = 0.0;  // max of the velocity term on [0, 1]
  double late_max = 0.0;      // max of the velocity term on [1, 10]
  bool events = false;
};

StabilityRun stability_run(const LagrangianGrid& g, const ExpansionParams& P, double omega) {
  ShapeSpec sh;
  sh.family = Family::RandomSmooth;
  sh.amplitude = 1.0;
  sh.seed = 7;
  InitialData d;
  d.theta0 = make_shape(g, sh);
  sh.seed = 8;
  d.theta1 = make_shape(g, sh);
  scale_to_amplitude(d, g, omega);
  SolverSpec spec;
  StabilityRun out;
  LedgerAccumulator acc(g, Regime::LinearIsentropic, P);
  const EvolutionRun run = evolve_linear_isentropic(g, P, d, 10.0, spec, [&](const PerturbationField& f, const StepInfo&) {
    const EnergyReport& rep = acc.observe(f);
    if (f.clock == 0.0) out.omega0 = rep.omega;
    out.omega_max = std::max(out.omega_max, rep.omega);
    const double v = rep.term("E.vel_a");
    if (f.clock <= 1.0 + 1e-12) out.fit_constant = std::max(out.fit_constant, v);
    if (f.clock >= 1.0 - 1e-12) out.late_max = std::max(out.late_max, v);
  });
  out.events = run.stopped_early();
  return out;
}

CriterionResult stability_linear() {
  CriterionResult r{8, "linear isentropic stability", false, "", 0.0};
  const auto t0 = Clock::now();
  const IsentropicProfile prof = solve_isentropic_profile(0.0);
  const ExpansionParams P = classify_expansion(0.0, 1.0, 1.0);
  const LagrangianGrid g = make_grid(prof, 100);
  const StabilityRun full = stability_run(g, P, 1e-3);
  const StabilityRun half = stability_run(g, P, 5e-4);
  const double response = half.omega_max / full.omega_max;
  const double secs = seconds_since(t0);
  r.passed = !full.events && full.omega_max <= 2e-3 && full.late_max <= full.fit_constant &&
             std::abs(response / 0.5 - 1.0) <= 0.2 && secs < 120.0;
  r.detail = "omega(0) = " + fmt("%.2e", full.omega0) + ", max omega " + fmt("%.3e", full.omega_max) +
             ", velocity term " + fmt("%.2e", full.late_max) + " <= " + fmt("%.2e", full.fit_constant) +
             ", half-amplitude ratio " + fmt("%.3f", response);
  return r;
}

// ---------------------------------------------------------------- 9

CriterionResult growth() {
  CriterionResult r{9, "self-similar instability", false, "", 0.0};
  const auto t0 = Clock::now();
  const IsentropicProfile prof = solve_isentropic_profile(kSsDelta);
  const ExpansionParams P = ss_params(kSsDelta);
  const LagrangianGrid g = make_grid(prof, 50);
  int grown = 0;
  bool negative = true;
  std::string at;
  for (std::uint64_t seed : {1, 2, 3}) {
    ShapeSpec sh;
    sh.family = Family::RandomSmooth;
    sh.amplitude = 1.0;
    sh.seed = seed;
    const InitialData d = negative_energy_data(g, P, make_shape(g, sh), 1e-3);
    PerturbationField f;
    f.x = g.x;
    f.theta = d.theta0;
    f.theta_t = d.theta1;
    if (!(perturbation_energy_ss(f, g, P).E < 0.0)) negative = false;
    SolverSpec spec;
    spec.growth_threshold = 0.1;
    const EvolutionRun run = evolve_self_similar(g, P, d, 2000.0, spec);
    for (const Event& e : run.events) {
      if (e.kind == EventKind::GrowthThreshold) {
        ++grown;
        at += (at.empty() ? "" : ", ") + fmt("%.2f", e.clock);
      }
    }
  }
  const double secs = seconds_since(t0);
  r.passed = negative && grown == 3 && secs < 120.0;
  r.detail = std::string(negative ? "E0 < 0 for all seeds" : "E0 >= 0 for some seed") +
             ", growth events at s = " + (at.empty() ? "none" : at);
  return r;
}

// ---------------------------------------------------------------- 10

CriterionResult thermo_stability() {
  CriterionResult r{10, "thermodynamic stability", false, "", 0.0};
  const auto t0 = Clock::now();
  const ThermoProfile prof = solve_thermo_profile(1.0, 0.25);
  const ExpansionParams P = classify_expansion(0.0, 1.0, 20.0);
  const LagrangianGrid g = make_grid(prof, 50);
  ShapeSpec sh;
  sh.family = Family::RandomSmooth;
  sh.amplitude = 1.0;
  sh.seed = 5;
  InitialData d;
  d.theta0 = make_shape(g, sh);
  sh.seed = 6;
  d.theta1 = make_shape(g, sh);
  sh.seed = 9;
  d.zeta0 = make_shape(g, sh);
  for (std::size_t i = 0; i < g.size(); ++i) d.zeta0[i] *= (g.R0 - g.x[i]) / g.R0;
  scale_to_amplitude(d, g, 1e-3);
  double omega = 0.0, heat_min = HUGE_VAL;
  bool boundary = true;
  const EvolutionRun run = evolve_linear_thermo(g, P, d, 1.0, {}, [&](const PerturbationField& f, const StepInfo&) {
    omega = std::max(omega, amplitude(f));
    if (f.zeta.back() != 0.0) boundary = false;
    for (double v : viscous_heating(f)) heat_min = std::min(heat_min, v);
  });
  const double secs = seconds_since(t0);
  r.passed = !run.stopped_early() && omega <= 2e-3 && boundary && heat_min >= 0.0 && secs < 120.0;
  r.detail = "max omega " + fmt("%.3e", omega) + ", zeta(R0) " + (boundary ? "= 0" : "!= 0") +
             " at every step, min heating " + fmt("%.1e", heat_min) + ", " +
             std::to_string(run.steps) + " steps";
  return r;
}

// ---------------------------------------------------------------- 11

CriterionResult lemma_layer() {
  CriterionResult r{11, "lemma layer", false, "", 0.0};
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> coef(-1.0, 1.0), len(1.0, 10.0);
  double worst_gap = 0.0;
  bool frak_ok = true;
  for (int n = 0; n < 200; ++n) {
    const double R = len(rng);
    std::array<double, 5> a{}, w{};
    for (std::size_t k = 0; k < a.size(); ++k) {
      a[k] = coef(rng);
      w[k] = (static_cast<double>(k) + 1.0) * M_PI / R * (1.0 + 0.5 * coef(rng));
    }
    // h = sum a_k sin(w_k x)
    auto hx = [&](double x) {
      double v = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) v += a[k] * w[k] * std::cos(w[k] * x);
      return v;
    };
    auto hxx = [&](double x) {
      double v = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) v -= a[k] * w[k] * w[k] * std::sin(w[k] * x);
      return v;
    };
    const FrakACheck c = frak_a_check(hx, hxx, R);
    const double tol = 1e-9 * std::max(1.0, c.A);
    if (c.A < c.lower - tol) frak_ok = false;
    worst_gap = std::max(worst_gap, std::abs(c.A - c.lower - c.boundary) / std::max(1.0, c.A));
  }

  const HardyResult exact = hardy_check(2.0, [](double s) { return s; }, [](double) { return 1.0; });
  const bool exact_ok = std::abs(exact.lhs - 1.0 / 3.0) <= 1e-8 && std::abs(exact.rhs - 8.0 / 15.0) <= 1e-8;

  double worst_change = 0.0;
  bool finite = true, bounded = true;
  for (double k : {2.0, 3.0, 0.5, -1.0}) {
    std::mt19937_64 prng(static_cast<std::uint64_t>(1000 + 10 * k));
    std::normal_distribution<double> nd;
    std::vector<std::vector<double>> family;
    for (int n = 0; n < 400; ++n) {
      std::vector<double> c(6);
      for (double& v : c) v = nd(prng);
      if (k < 0.0) c[1] = 0.0;  // g'(0) = 0 keeps the k = -1 integral finite
      family.push_back(c);
    }
    const std::vector<std::vector<double>> first(family.begin(), family.begin() + 200);
    const double c200 = hardy_span_constant(k, first);
    const double c400 = hardy_span_constant(k, family);
    worst_change = std::max(worst_change, std::abs(c400 - c200) / c200);
    for (const auto& c : first) {
      auto g = [&c](double s) {
        double v = 0.0, p = 1.0;
        for (double a : c) {
          v += a * p;
          p *= s;
        }
        return v;
      };
      auto gp = [&c](double s) {
        double v = 0.0, p = 1.0;
        for (std::size_t i = 1; i < c.size(); ++i) {
          v += static_cast<double>(i) * c[i] * p;
          p *= s;
        }
        return v;
      };
      const double ratio = hardy_check(k, g, gp).ratio;
      if (!std::isfinite(ratio)) finite = false;
      if (ratio > c200 * (1.0 + 1e-8)) bounded = false;
    }
  }
  const double secs = seconds_since(t0);
  r.passed = frak_ok && worst_gap < 1e-8 && exact_ok && finite && bounded && worst_change < 0.05 &&
             secs < 5.0;
  r.detail = std::string(frak_ok ? "A >= lower bound" : "A < lower bound") + " for 200 h (identity gap " +
             fmt("%.1e", worst_gap) + "), hardy(2, s) = (" + fmt("%.10f", exact.lhs) + ", " +
             fmt("%.10f", exact.rhs) + "), family constant change " + fmt("%.1e", worst_change) +
             (bounded ? ", members bounded" : ", member above constant");
  return r;
}

// ---------------------------------------------------------------- 12

struct SweepStats {
  double min_dissipation = HUGE_VAL;
  double worst_mass = 0.0;
  double worst_zero = 0.0;
};

template <class Profile, class Evolve>
void sweep_run(SweepStats& st, const Profile& prof, const LagrangianGrid& g, const ExpansionParams& P,
               const InitialData& d, double end, bool zero, Evolve evolve) {
  SolverSpec spec;
  spec.emit_at = {0.25 * end, 0.5 * end, 0.75 * end};
  const EvolutionRun run = evolve(g, P, d, end, spec, [&](const PerturbationField& f, const StepInfo& info) {
    st.min_dissipation = std::min(st.min_dissipation, info.dissipation);
    if (zero) st.worst_zero = std::max(st.worst_zero, amplitude(f));
  });
  for (const PerturbationField& f : run.snapshots) {
    const EulerianSnapshot e = reconstruct_eulerian(f, g, P);
    st.worst_mass = std::max(st.worst_mass, mass_conservation_error(e, prof.sampler(), prof.total_mass));
  }
}

CriterionResult conservation_sweep() {
  CriterionResult r{12, "conservation and positivity", false, "", 0.0};
  SweepStats st;
  const IsentropicProfile ss_prof = solve_isentropic_profile(kSsDelta);
  const IsentropicProfile lin_prof = solve_isentropic_profile(0.0);
  const ThermoProfile th_prof = solve_thermo_profile(1.0, 0.25);
  const ExpansionParams Pss = ss_params(kSsDelta);
  const ExpansionParams Plin = classify_expansion(0.0, 1.0, 1.0);
  const ExpansionParams Pth = classify_expansion(0.0, 1.0, 20.0);
  const LagrangianGrid gss = make_grid(ss_prof, 50);
  const LagrangianGrid glin = make_grid(lin_prof, 50);
  const LagrangianGrid gth = make_grid(th_prof, 50);

  ShapeSpec sh;
  sh.family = Family::RandomSmooth;
  sh.amplitude = 1.0;
  auto data = [&](const LagrangianGrid& g, bool thermo) {
    InitialData d;
    sh.seed = 11;
    d.theta0 = make_shape(g, sh);
    sh.seed = 12;
    d.theta1 = make_shape(g, sh);
    if (thermo) {
      sh.seed = 13;
      d.zeta0 = make_shape(g, sh);
      for (std::size_t i = 0; i < g.size(); ++i) d.zeta0[i] *= (g.R0 - g.x[i]) / g.R0;
    }
    scale_to_amplitude(d, g, 1e-3);
    return d;
  };
  auto zero = [](const LagrangianGrid& g) {
    return InitialData{std::vector<double>(g.size(), 0.0), std::vector<double>(g.size(), 0.0), {}};
  };
  sweep_run(st, ss_prof, gss, Pss, data(gss, false), 20.0, false, evolve_self_similar);
  sweep_run(st, ss_prof, gss, Pss, zero(gss), 20.0, true, evolve_self_similar);
  sweep_run(st, lin_prof, glin, Plin, data(glin, false), 10.0, false, evolve_linear_isentropic);
  sweep_run(st, lin_prof, glin, Plin, zero(glin), 10.0, true, evolve_linear_isentropic);
  sweep_run(st, th_prof, gth, Pth, data(gth, true), 1.0, false, evolve_linear_thermo);
  sweep_run(st, th_prof, gth, Pth, zero(gth), 1.0, true, evolve_linear_thermo);

  r.passed = st.min_dissipation >= 0.0 && st.worst_mass < 1e-8 && st.worst_zero <= 1e-12;
  r.detail = "min D " + fmt("%.1e", st.min_dissipation) + ", max mass error " + fmt("%.1e", st.worst_mass) +
             ", max zero-run amplitude " + fmt("%.1e", st.worst_zero);
  return r;
}

}  // namespace

CriterionResult run_criterion(int id) {
  static const std::array<std::function<CriterionResult()>, kCriterionCount> table{
      profile_isentropic, profile_thermo, expansion_trichotomy, phase_dichotomy,
      zero_energy_manifold, energy_identity, ode_reduction, stability_linear,
      growth, thermo_stability, lemma_layer, conservation_sweep};
  static const std::array<const char*, kCriterionCount> names{
      "isentropic profile", "thermodynamic profile", "expansion trichotomy",
      "phase-plane dichotomy", "zero-energy manifold", "discrete energy identity",
      "ODE-PDE reduction", "linear isentropic stability", "self-similar instability",
      "thermodynamic stability", "lemma layer", "conservation and positivity"};
  if (id < 1 || id > kCriterionCount) {
    throw Error(ErrorCode::InvalidParams, "criterion id must be in 1.." + std::to_string(kCriterionCount));
  }
  const auto t0 = Clock::now();
  CriterionResult r;
  try {
    r = table[static_cast<std::size_t>(id - 1)]();
  } catch (const std::exception& e) {
    r = {id, names[static_cast<std::size_t>(id - 1)], false, std::string("error: ") + e.what(), 0.0};
  }
  r.seconds = seconds_since(t0);
  return r;
}

std::vector<CriterionResult> run_acceptance() {
  std::vector<CriterionResult> out;
  for (int id = 1; id <= kCriterionCount; ++id) out.push_back(run_criterion(id));
  return out;
}

std::string format_result(const CriterionResult& r) {
  char head[96];
  std::snprintf(head, sizeof head, "%s %2d %s (%.2f s): ", r.passed ? "PASS" : "FAIL", r.id,
                r.name.c_str(), r.seconds);
  return head + r.detail;
}

}  // namespace starlab
