#include <gtest/gtest.h>

#include <cmath>

#include "oracle.hpp"
#include "starlab/error.hpp"
#include "starlab/expansion.hpp"
#include "starlab/functionals.hpp"
#include "starlab/lagrangian.hpp"
#include "starlab/profile.hpp"

using namespace starlab;

namespace {

constexpr double kDelta = -0.001;

struct Fixture {
  IsentropicProfile iso = solve_isentropic_profile(kDelta);
  IsentropicProfile iso0 = solve_isentropic_profile(0.0);
  ThermoProfile thermo = solve_thermo_profile(1.0, 0.25);
};

const Fixture& fx() {
  static const Fixture f;
  return f;
}

ExpansionParams ss_params() { return classify_expansion(kDelta, 1.0, std::sqrt(2.0 * std::abs(kDelta))); }

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

InitialData bump_data(const LagrangianGrid& g, double amp, bool thermo = false) {
  ShapeSpec sh;
  sh.family = Family::Bump;
  sh.amplitude = amp;
  sh.center = 0.3;
  sh.width = 0.3;
  InitialData d;
  d.theta0 = make_shape(g, sh);
  sh.center = 0.5;
  d.theta1 = make_shape(g, sh);
  if (thermo) {
    sh.center = 0.2;
    d.zeta0 = make_shape(g, sh);
  }
  return d;
}

}  // namespace

TEST(Grid, LayoutAndMoments) {
  const LagrangianGrid g = make_grid(fx().iso0, 64);
  ASSERT_EQ(g.size(), 65u);
  EXPECT_EQ(g.x.front(), 0.0);
  EXPECT_DOUBLE_EQ(g.x.back(), g.R0);
  EXPECT_DOUBLE_EQ(g.R0, fx().iso0.R0);
  double m2 = 0.0, m4 = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    m2 += g.m2[i];
    m4 += g.m4[i];
  }
  EXPECT_NEAR(m2 / fx().iso0.total_mass, 1.0, 1e-10);
  EXPECT_NEAR(m4 / fx().iso0.fourth_moment, 1.0, 1e-10);
  EXPECT_EQ(g.rho.back(), 0.0);
}

TEST(Shapes, Families) {
  const LagrangianGrid g = make_grid(fx().iso0, 50);
  ShapeSpec s;
  EXPECT_EQ(max_abs(make_shape(g, s)), 0.0);
  s.family = Family::Constant;
  s.amplitude = 0.25;
  for (double v : make_shape(g, s)) EXPECT_EQ(v, 0.25);
  s.family = Family::RandomSmooth;
  s.amplitude = 1.0;
  EXPECT_NEAR(max_abs(make_shape(g, s)), 1.0, 1e-12);
  ShapeSpec t = s;
  EXPECT_EQ(make_shape(g, s), make_shape(g, t));
  t.seed = 2;
  EXPECT_NE(make_shape(g, s), make_shape(g, t));
  s.family = Family::Bump;
  s.center = 0.5;
  s.width = 0.1;
  const auto b = make_shape(g, s);
  EXPECT_EQ(b.front(), 0.0);
  EXPECT_EQ(b.back(), 0.0);
}

TEST(ZeroData, SelfSimilarStaysZero) {
  const LagrangianGrid g = make_grid(fx().iso, 40);
  InitialData d;
  d.theta0.assign(g.size(), 0.0);
  d.theta1.assign(g.size(), 0.0);
  SolverSpec spec;
  const EvolutionRun run = evolve_self_similar(g, ss_params(), d, 2.0, spec);
  EXPECT_FALSE(run.stopped_early());
  EXPECT_LT(max_abs(run.last.theta), 1e-12);
  EXPECT_LT(max_abs(run.last.theta_t), 1e-12);
}

TEST(ZeroData, LinearIsentropicStaysZero) {
  const LagrangianGrid g = make_grid(fx().iso0, 40);
  InitialData d;
  d.theta0.assign(g.size(), 0.0);
  d.theta1.assign(g.size(), 0.0);
  const EvolutionRun run = evolve_linear_isentropic(g, classify_expansion(0.0, 1.0, 1.0), d, 2.0, {});
  EXPECT_LT(max_abs(run.last.theta), 1e-12);
  EXPECT_LT(max_abs(run.last.theta_t), 1e-12);
}

TEST(ZeroData, ThermoStaysZero) {
  const LagrangianGrid g = make_grid(fx().thermo, 40);
  InitialData d;
  d.theta0.assign(g.size(), 0.0);
  d.theta1.assign(g.size(), 0.0);
  d.zeta0.assign(g.size(), 0.0);
  const EvolutionRun run = evolve_linear_thermo(g, classify_expansion(0.0, 1.0, 1.0), d, 1.0, {});
  EXPECT_LT(max_abs(run.last.theta), 1e-12);
  EXPECT_LT(max_abs(run.last.zeta), 1e-12);
}

TEST(Thermo, BoundaryTemperatureIsPinnedAndHeatingNonnegative) {
  const LagrangianGrid g = make_grid(fx().thermo, 40);
  InitialData d = bump_data(g, 1.0, true);
  scale_to_amplitude(d, g, 1e-3);
  bool pinned = true;
  double min_heat = 0.0;
  auto obs = [&](const PerturbationField& f, const StepInfo&) {
    pinned = pinned && f.zeta.back() == 0.0;
    for (double q : viscous_heating(f)) min_heat = std::min(min_heat, q);
  };
  const EvolutionRun run = evolve_linear_thermo(g, classify_expansion(0.0, 1.0, 20.0), d, 1.0, {}, obs);
  EXPECT_FALSE(run.stopped_early());
  EXPECT_TRUE(pinned);
  EXPECT_GE(min_heat, 0.0);
  EXPECT_LE(amplitude(run.last), 2e-3);
}

TEST(Thermo, GateRejectsMismatchedSpecificHeat) {
  LagrangianGrid g = make_grid(fx().thermo, 20);
  g.c_nu = 2.0;
  const InitialData d = bump_data(g, 1e-3, true);
  EXPECT_THROW(evolve_linear_thermo(g, classify_expansion(0.0, 1.0, 1.0), d, 0.1, {}), Error);
}

TEST(Evolution, SnapshotsAtRequestedClocks) {
  const LagrangianGrid g = make_grid(fx().iso0, 30);
  SolverSpec spec;
  spec.emit_at = {0.25, 0.5, 1.0};
  const EvolutionRun run = evolve_linear_isentropic(g, classify_expansion(0.0, 1.0, 1.0), bump_data(g, 1e-3), 1.0, spec);
  ASSERT_EQ(run.snapshots.size(), 4u);
  EXPECT_EQ(run.snapshots[0].clock, 0.0);
  EXPECT_EQ(run.snapshots[1].clock, 0.25);
  EXPECT_EQ(run.snapshots[2].clock, 0.5);
  EXPECT_EQ(run.snapshots[3].clock, 1.0);
}

TEST(Evolution, ObserverSeesInitialStateThenSteps) {
  const LagrangianGrid g = make_grid(fx().iso0, 30);
  std::vector<double> dts;
  double min_d = 0.0;
  auto obs = [&](const PerturbationField&, const StepInfo& s) {
    dts.push_back(s.dt);
    min_d = std::min(min_d, s.dissipation);
  };
  const EvolutionRun run = evolve_linear_isentropic(g, classify_expansion(0.0, 1.0, 1.0), bump_data(g, 1e-3), 0.5, {}, obs);
  ASSERT_EQ(dts.size(), run.steps + 1);
  EXPECT_EQ(dts.front(), 0.0);
  for (std::size_t i = 1; i < dts.size(); ++i) EXPECT_GT(dts[i], 0.0);
  EXPECT_GE(min_d, 0.0);
}

TEST(Evolution, GrowthThresholdIsAnEventNotAnError) {
  const LagrangianGrid g = make_grid(fx().iso0, 30);
  SolverSpec spec;
  spec.growth_threshold = 1e-6;
  const EvolutionRun run = evolve_linear_isentropic(g, classify_expansion(0.0, 1.0, 1.0), bump_data(g, 1e-3), 1.0, spec);
  ASSERT_TRUE(run.stopped_early());
  EXPECT_EQ(run.events.front().kind, EventKind::GrowthThreshold);
}

TEST(Reduction, SelfSimilarHomogeneousMatchesPhaseOde) {
  const LagrangianGrid g = make_grid(fx().iso, 20);
  InitialData d;
  d.theta0.assign(g.size(), 0.01);
  d.theta1.assign(g.size(), 0.05);
  SolverSpec spec;
  spec.fixed_dt = 1e-4;
  const double s_end = 0.5;
  const EvolutionRun run = evolve_self_similar(g, ss_params(), d, s_end, spec);
  const auto ref = oracle::phase_state(0.01, 0.05, kDelta, s_end);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_NEAR(run.last.theta[i], ref[0], 1e-4 * std::abs(ref[0]));
    EXPECT_NEAR(run.last.theta_t[i], ref[1], 1e-3 * std::abs(ref[1]));
  }
}

TEST(Reduction, LinearHomogeneousMatchesReducedOde) {
  // alpha_tilde th'' + alpha_tilde_tau th' + delta (1+th)^2 (1/(1+th) - 1/(1+th)^4) = 0 on the tau clock,
  // integrated here in t with d/dtau = alpha d/dt
  const double delta = -0.001, a0 = 1.0, a1 = 1.0;
  const LagrangianGrid g = make_grid(fx().iso, 20);
  InitialData d;
  d.theta0.assign(g.size(), 0.02);
  d.theta1.assign(g.size(), -0.01);
  SolverSpec spec;
  spec.fixed_dt = 1e-4;
  const double tau_end = 0.5;
  const ExpansionParams par = classify_expansion(delta, a0, a1);
  const EvolutionRun run = evolve_linear_isentropic(g, par, d, tau_end, spec);

  // state: tau, alpha, alpha', theta, theta_tau; march in t until tau_end
  auto f = [&](double, const oracle::State<5>& u) -> oracle::State<5> {
    const double al = u[1], ap = u[2], th = u[3], thtau = u[4];
    const double p = 1.0 + th;
    const double thtautau = -(ap * thtau + delta / al * p * p * (1.0 / p - std::pow(p, -4.0)));
    // alpha_tilde = alpha, alpha_tilde_tau = alpha alpha', d/dt = (1/alpha) d/dtau
    return {1.0 / al, ap, delta / (al * al), thtau / al, thtautau / al};
  };
  oracle::State<5> u{0.0, a0, a1, 0.02, -0.01};
  double t = 0.0, h = 1e-5;
  while (true) {
    const auto n = oracle::rk4_step<5>(f, t, u, h);
    if (n[0] >= tau_end) {
      double lo = 0.0, hi = h;
      for (int k = 0; k < 50; ++k) {
        const double mid = 0.5 * (lo + hi);
        (oracle::rk4_step<5>(f, t, u, mid)[0] < tau_end ? lo : hi) = mid;
      }
      u = oracle::rk4_step<5>(f, t, u, hi);
      break;
    }
    u = n;
    t += h;
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_NEAR(run.last.theta[i], u[3], 1e-4 * std::abs(u[3]));
  }
}

TEST(SecondDerivatives, ZeroDataGivesZero) {
  const LagrangianGrid gi = make_grid(fx().iso0, 30);
  InitialData d;
  d.theta0.assign(gi.size(), 0.0);
  d.theta1.assign(gi.size(), 0.0);
  const auto s = initial_second_derivatives(gi, Regime::LinearIsentropic, classify_expansion(0.0, 1.0, 1.0), d);
  EXPECT_LT(max_abs(s.theta2), 1e-14);
  const LagrangianGrid gt = make_grid(fx().thermo, 30);
  d.zeta0.assign(gt.size(), 0.0);
  const auto t = initial_second_derivatives(gt, Regime::LinearThermo, classify_expansion(0.0, 1.0, 1.0), d);
  EXPECT_LT(max_abs(t.theta2), 1e-14);
  // zeta1 is a cell balance divided by the cell mass, which vanishes at R0;
  // the balance itself is at roundoff
  for (std::size_t i = 0; i < gt.size(); ++i) EXPECT_LT(std::abs(t.zeta1[i]) * gt.m2[i], 1e-14);
}

TEST(SecondDerivatives, PointwiseModeRefusesVacuumNode) {
  const LagrangianGrid g = make_grid(fx().iso0, 30);
  try {
    initial_second_derivatives(g, Regime::LinearIsentropic, classify_expansion(0.0, 1.0, 1.0), bump_data(g, 1e-3),
                               1.0, WeightMode::Pointwise);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateWeight);
  }
}

TEST(SecondDerivatives, FiniteDifferenceOfEvolutionConverges) {
  const LagrangianGrid g = make_grid(fx().iso0, 30);
  const ExpansionParams par = classify_expansion(0.0, 1.0, 1.0);
  const InitialData d = bump_data(g, 1e-3);
  const auto s = initial_second_derivatives(g, Regime::LinearIsentropic, par, d);
  auto err = [&](double h) {
    SolverSpec spec;
    spec.fixed_dt = h;
    const EvolutionRun run = evolve_linear_isentropic(g, par, d, h, spec);
    double e = 0.0;
    for (std::size_t i = 0; i + 1 < g.size(); ++i) {
      e = std::max(e, std::abs((run.last.theta_t[i] - d.theta1[i]) / h - s.theta2[i]));
    }
    return e;
  };
  // first order once h is below the stiff viscous time scale at the vacuum
  const double e1 = err(1e-6), e2 = err(1e-7), e3 = err(1e-8);
  EXPECT_LT(e2, 0.2 * e1);
  EXPECT_LT(e3, 0.2 * e2);
  EXPECT_LT(e3, 1e-3 * max_abs(s.theta2));
}

TEST(Eulerian, ZeroPerturbationIsTheExpandingSolution) {
  const LagrangianGrid g = make_grid(fx().iso0, 40);
  const ExpansionParams par = classify_expansion(0.0, 1.0, 1.0);
  PerturbationField f;
  f.regime = Regime::LinearIsentropic;
  f.clock = 0.7;
  f.x = g.x;
  f.theta.assign(g.size(), 0.0);
  f.theta_t.assign(g.size(), 0.0);
  const EulerianSnapshot e = reconstruct_eulerian(f, g, par);
  const double alpha = std::exp(0.7);  // a0 e^{a1 tau}
  EXPECT_NEAR(e.alpha, alpha, 1e-12 * alpha);
  EXPECT_EQ(e.r.front(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_NEAR(e.r[i], alpha * g.x[i], 1e-12 * g.R0 * alpha);
    EXPECT_NEAR(e.u[i], 1.0 * g.x[i], 1e-12 * g.R0);  // alpha' = a1 = 1
    EXPECT_NEAR(e.rho[i], g.rho[i] / (alpha * alpha * alpha), 1e-12);
  }
  EXPECT_LT(mass_conservation_error(e, fx().iso0.sampler(), fx().iso0.total_mass), 1e-8);
}

TEST(Eulerian, MassConservedForPerturbedField) {
  const LagrangianGrid g = make_grid(fx().iso0, 40);
  const ExpansionParams par = classify_expansion(0.0, 1.0, 1.0);
  const EvolutionRun run = evolve_linear_isentropic(g, par, bump_data(g, 1e-2), 1.0, {});
  for (const PerturbationField& f : run.snapshots) {
    const EulerianSnapshot e = reconstruct_eulerian(f, g, par);
    EXPECT_EQ(e.r.front(), 0.0);
    for (std::size_t i = 1; i < e.r.size(); ++i) EXPECT_GT(e.r[i], e.r[i - 1]);
    EXPECT_LT(mass_conservation_error(e, fx().iso0.sampler(), fx().iso0.total_mass), 1e-8);
  }
}

TEST(ClockCoefficients, SelfSimilarAlphaBar) {
  const ExpansionParams par = ss_params();
  const double b = std::sqrt(2.0 * std::abs(kDelta));
  for (double s : {0.0, 1.0, 10.0}) {
    EXPECT_NEAR(clock_coefficients(Regime::SelfSimilar, par, s).alpha, std::exp(b * s), 1e-12 * std::exp(b * s));
  }
}

TEST(LinearRegime, DeltaThreshold) {
  EXPECT_TRUE(linear_regime_delta_ok(classify_expansion(0.0, 1.0, 1.0)));
  EXPECT_TRUE(linear_regime_delta_ok(classify_expansion(-0.1, 1.0, 1.0)));
  EXPECT_FALSE(linear_regime_delta_ok(classify_expansion(-0.2, 1.0, 1.0)));
}
