#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracle.hpp"
#include "starlab/error.hpp"
#include "starlab/functionals.hpp"
#include "starlab/profile.hpp"

using namespace starlab;

namespace {

const IsentropicProfile& iso0() {
  static const IsentropicProfile p = solve_isentropic_profile(0.0);
  return p;
}

const IsentropicProfile& iso_ss() {
  static const IsentropicProfile p = solve_isentropic_profile(-0.001);
  return p;
}

PerturbationField field_on(const LagrangianGrid& g, Regime r, double th, double tht) {
  PerturbationField f;
  f.regime = r;
  f.x = g.x;
  f.theta.assign(g.size(), th);
  f.theta_t.assign(g.size(), tht);
  f.theta_tt.assign(g.size(), 0.0);
  return f;
}

}  // namespace

TEST(PhysicalEnergy, ExpandingSolutionHasNoDissipation) {
  for (double delta : {0.0, 0.05}) {
    const IsentropicProfile p = solve_isentropic_profile(delta);
    const LagrangianGrid g = make_grid(p, 80);
    const ExpansionParams par = classify_expansion(delta, 1.0, 0.8);
    const EulerianSnapshot e = reconstruct_eulerian(field_on(g, Regime::LinearIsentropic, 0.0, 0.0), g, par);
    const PhysicalEnergy pe = physical_energy(e, g);
    EXPECT_NEAR(pe.D, 0.0, 1e-12);
    // E = (1/2)(a1^2 + 2 delta/a0) int x^4 rho_bar at t = 0
    const double expect = 0.5 * (0.8 * 0.8 + 2.0 * delta) * p.fourth_moment;
    EXPECT_NEAR(pe.E, expect, 1e-8 * std::max(1.0, std::abs(expect)));
  }
}

TEST(PhysicalEnergy, SelfSimilarParametersHaveZeroEnergy) {
  const LagrangianGrid g = make_grid(iso_ss(), 80);
  const ExpansionParams par = classify_expansion(-0.001, 1.0, std::sqrt(0.002));
  PerturbationField f = field_on(g, Regime::SelfSimilar, 0.0, 0.0);
  for (double s : {0.0, 3.0}) {
    f.clock = s;
    const PhysicalEnergy pe = physical_energy(reconstruct_eulerian(f, g, par), g);
    EXPECT_NEAR(pe.E, 0.0, 1e-8 * (pe.kinetic + pe.internal + pe.gravity));
  }
}

TEST(PerturbationEnergy, ZeroFieldAndHomogeneousField) {
  const LagrangianGrid g = make_grid(iso_ss(), 60);
  const ExpansionParams par = classify_expansion(-0.001, 1.0, std::sqrt(0.002));
  const PerturbationEnergy z = perturbation_energy_ss(field_on(g, Regime::SelfSimilar, 0.0, 0.0), g, par);
  EXPECT_NEAR(z.E, 0.0, 1e-14);
  EXPECT_NEAR(z.D, 0.0, 1e-14);
  const PerturbationEnergy h = perturbation_energy_ss(field_on(g, Regime::SelfSimilar, 0.03, -0.01), g, par);
  EXPECT_EQ(h.D, 0.0);
  EXPECT_GE(z.D, 0.0);
}

TEST(RelativeEntropy, ZeroAndConstant) {
  const std::vector<double> x = {0.0, 0.5, 1.0, 1.5};
  const RelativeEntropy z = relative_entropy(x, {0.0, 0.0, 0.0, 0.0});
  for (double v : z.H) EXPECT_EQ(v, 0.0);
  const RelativeEntropy c = relative_entropy(x, {0.1, 0.1, 0.1, 0.1});
  for (double v : c.H) EXPECT_NEAR(v, 3.0 * std::log(1.1), 1e-15);
  EXPECT_NEAR(3.0 * std::log(1.1), 0.2859305, 1e-6);
  for (double v : c.H_x) EXPECT_NEAR(v, 0.0, 1e-14);
}

TEST(RelativeEntropy, DomainViolation) {
  EXPECT_THROW(relative_entropy({0.0, 1.0}, {-1.5, -1.5}), Error);
}

TEST(FrakA, InequalityAndBoundaryTermForSeededPolynomials) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double R = 2.0;
  for (int k = 0; k < 50; ++k) {
    const double c1 = u(rng), c2 = u(rng), c3 = u(rng);
    auto hx = [=](double x) { return c1 + 2 * c2 * x + 3 * c3 * x * x; };
    auto hxx = [=](double x) { return 2 * c2 + 6 * c3 * x; };
    const FrakACheck r = frak_a_check(hx, hxx, R);
    EXPECT_GE(r.A, r.lower - 1e-12 * std::max(1.0, r.A));
    EXPECT_NEAR(r.A - r.lower, 4.0 * R * hx(R) * hx(R), 1e-9 * std::max(1.0, r.A));
    // independent quadrature of A
    const double A = oracle::simpson([&](double x) { const double v = 4 * hx(x) + x * hxx(x); return v * v; }, 0.0, R);
    EXPECT_NEAR(r.A, A, 1e-9 * std::max(1.0, A));
  }
}

TEST(Amplitude, ZeroConstantAndBoundaryQuotient) {
  const LagrangianGrid g = make_grid(iso0(), 40);
  EXPECT_EQ(amplitude(field_on(g, Regime::LinearIsentropic, 0.0, 0.0)), 0.0);
  EXPECT_DOUBLE_EQ(amplitude(field_on(g, Regime::LinearIsentropic, -0.3, 0.0)), 0.3);

  // zeta = sigma g(x) with sigma = R0 - x
  PerturbationField f = field_on(g, Regime::LinearThermo, 0.0, 0.0);
  f.zeta.resize(g.size());
  f.zeta_t.assign(g.size(), 0.0);
  double sup_g = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double gv = 0.01 * std::cos(g.x[i] / g.R0);
    f.zeta[i] = (g.R0 - g.x[i]) * gv;
    sup_g = std::max(sup_g, std::abs(gv));
  }
  EXPECT_NEAR(amplitude(f), sup_g, 1e-12);
}

TEST(Amplitude, ScaleToAmplitude) {
  const LagrangianGrid g = make_grid(iso0(), 40);
  ShapeSpec s;
  s.family = Family::RandomSmooth;
  s.amplitude = 0.7;
  InitialData d;
  d.theta0 = make_shape(g, s);
  s.seed = 4;
  d.theta1 = make_shape(g, s);
  scale_to_amplitude(d, g, 1e-3);
  PerturbationField f = field_on(g, Regime::LinearIsentropic, 0.0, 0.0);
  f.theta = d.theta0;
  f.theta_t = d.theta1;
  EXPECT_NEAR(amplitude(f), 1e-3, 1e-15);
  InitialData zero;
  zero.theta0.assign(g.size(), 0.0);
  zero.theta1.assign(g.size(), 0.0);
  scale_to_amplitude(zero, g, 1e-3);
  for (double v : zero.theta0) EXPECT_EQ(v, 0.0);
}

TEST(ViscousHeating, NonnegativeEverywhere) {
  const LagrangianGrid g = make_grid(iso0(), 40);
  ShapeSpec s;
  s.family = Family::RandomSmooth;
  s.amplitude = 0.05;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    s.seed = seed;
    PerturbationField f = field_on(g, Regime::LinearThermo, 0.0, 0.0);
    f.theta = make_shape(g, s);
    s.seed += 100;
    f.theta_t = make_shape(g, s);
    for (double q : viscous_heating(f)) EXPECT_GE(q, 0.0);
  }
}

TEST(Hardy, ClosedFormAtKTwo) {
  const HardyResult r = hardy_check(2.0, [](double s) { return s; }, [](double) { return 1.0; });
  EXPECT_NEAR(r.lhs, 1.0 / 3.0, 1e-8);
  EXPECT_NEAR(r.rhs, 8.0 / 15.0, 1e-8);
  EXPECT_NEAR(r.ratio, (1.0 / 3.0) / (8.0 / 15.0), 1e-8);
}

TEST(Hardy, ZeroFunctionAndExcludedK) {
  const HardyResult z = hardy_check(3.0, [](double) { return 0.0; }, [](double) { return 0.0; });
  EXPECT_EQ(z.lhs, 0.0);
  EXPECT_EQ(z.rhs, 0.0);
  EXPECT_EQ(z.ratio, 0.0);
  try {
    hardy_check(1.0, [](double s) { return s; }, [](double) { return 1.0; });
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::KEqualsOne);
  }
}

TEST(Hardy, SubtractsTraceBelowOne) {
  // k = 0.5, g = 1 + s: lhs = int s^{-3/2} s^2 = 2/3, rhs = int s^{1/2} = 2/3
  const HardyResult r = hardy_check(0.5, [](double s) { return 1.0 + s; }, [](double) { return 1.0; });
  EXPECT_NEAR(r.lhs, 2.0 / 3.0, 1e-8);
  EXPECT_NEAR(r.rhs, 2.0 / 3.0, 1e-8);
}

TEST(Hardy, SpanConstantIsMonotoneInTheFamily) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<std::vector<double>> fam;
  for (int i = 0; i < 8; ++i) fam.push_back({u(rng), u(rng), u(rng), u(rng)});
  const double small = hardy_span_constant(2.0, {fam.begin(), fam.begin() + 4});
  const double big = hardy_span_constant(2.0, fam);
  EXPECT_GT(small, 0.0);
  EXPECT_LE(small, big * (1 + 1e-12));
  // a single g = s reproduces the closed form ratio
  EXPECT_NEAR(hardy_span_constant(2.0, {{0.0, 1.0}}), 5.0 / 8.0, 1e-10);
}

TEST(Weights, DefaultsAndViolations) {
  EXPECT_TRUE(weight_violations(WeightSpec{}, true).empty());
  EXPECT_TRUE(weight_violations(WeightSpec{}, false).empty());
  const WeightSpec d;
  EXPECT_EQ(d.r1, 0.5);
  EXPECT_EQ(d.r2, -0.5);
  EXPECT_EQ(d.l1, -2.5);
  EXPECT_EQ(d.l2, -2.0);
  EXPECT_EQ(d.r_frak, -1.5);
  EXPECT_EQ(d.r3, -2.5);
  WeightSpec bad;
  bad.a = 1.5;
  const auto v = weight_violations(bad, false);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NE(v.front().find("0 < a < 1"), std::string::npos);
}

TEST(Cutoff, ShapeAndSlope) {
  const double R0 = 10.0;
  for (int i = 0; i <= 1000; ++i) {
    const double x = R0 * i / 1000.0;
    const double c = cutoff(x, R0), cp = cutoff_prime(x, R0);
    if (x <= R0 / 2) EXPECT_EQ(c, 1.0);
    if (x >= 0.75 * R0) EXPECT_EQ(c, 0.0);
    EXPECT_LE(cp, 0.0);
    EXPECT_GE(cp, -4.0);
    EXPECT_GE(c, 0.0);
    EXPECT_LE(c, 1.0);
  }
}

TEST(Ledger, ZeroSeriesHasZeroTerms) {
  const LagrangianGrid g = make_grid(iso0(), 30);
  const ExpansionParams par = classify_expansion(0.0, 1.0, 1.0);
  std::vector<PerturbationField> series;
  for (double c : {0.0, 0.5, 1.0}) {
    PerturbationField f = field_on(g, Regime::LinearIsentropic, 0.0, 0.0);
    f.clock = c;
    series.push_back(f);
  }
  for (const EnergyReport& r : total_energy_ledger(series, g, Regime::LinearIsentropic, par)) {
    for (const auto& [name, v] : r.ledger) EXPECT_EQ(v, 0.0) << name;
    EXPECT_EQ(r.E0, 0.0);
  }
}

TEST(Ledger, MissingSecondDerivativeIsReported) {
  const LagrangianGrid g = make_grid(iso0(), 30);
  PerturbationField f = field_on(g, Regime::LinearIsentropic, 0.0, 0.0);
  f.theta_tt.clear();
  try {
    total_energy_ledger({f}, g, Regime::LinearIsentropic, classify_expansion(0.0, 1.0, 1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingDerivative);
  }
}

TEST(Ledger, RejectsViolatedWeights) {
  const LagrangianGrid g = make_grid(iso0(), 30);
  WeightSpec w;
  w.a = 0.0;
  try {
    LedgerAccumulator acc(g, Regime::LinearIsentropic, classify_expansion(0.0, 1.0, 1.0), w);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::WeightViolation);
  }
}

TEST(Ledger, ColumnNamesArePublished) {
  const LagrangianGrid g = make_grid(iso0(), 30);
  PerturbationField f = field_on(g, Regime::LinearIsentropic, 0.0, 0.0);
  LedgerAccumulator acc(g, Regime::LinearIsentropic, classify_expansion(0.0, 1.0, 1.0));
  const EnergyReport& r = acc.observe(f);
  std::vector<std::string> names;
  for (const auto& [n, v] : r.ledger) names.push_back(n);
  const std::vector<std::string> expect = {"E.vel", "E.vel_a", "E.press", "E.grad4", "E.mass", "E.acc",
                                           "E.visc", "E.chi_vel", "E.chi", "E.chi_acc", "E.G", "E.G_t",
                                           "E.grad", "E.hess", "E.grad_t", "E.hess_t", "D.vel", "D.visc",
                                           "D.acc", "D.visc_t", "D.chi_vel", "D.chi_acc", "D.chi_acc2", "D.G"};
  EXPECT_EQ(names, expect);
  EXPECT_EQ(r.term("E.vel"), 0.0);
  EXPECT_THROW(r.term("nope"), std::exception);
}
