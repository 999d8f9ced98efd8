#include <gtest/gtest.h>

#include <cmath>

#include "oracle.hpp"
#include "starlab/error.hpp"
#include "starlab/homogeneous.hpp"

using namespace starlab;

TEST(PhaseRhs, SteadyPoint) {
  const auto [a, b] = phase_rhs({0.0, 0.0, -0.5});
  EXPECT_EQ(a, 0.0);
  EXPECT_EQ(b, 0.0);
}

TEST(PhaseRhs, WorkedValues) {
  {
    const auto [a, b] = phase_rhs({0.0, 0.1, -0.5});
    EXPECT_DOUBLE_EQ(a, 0.1);
    EXPECT_NEAR(b, -0.05, 1e-15);
  }
  {
    const auto [a, b] = phase_rhs({1.0, 0.0, -0.5});
    EXPECT_EQ(a, 0.0);
    EXPECT_NEAR(b, 0.875, 1e-15);
  }
}

TEST(PhaseRhs, DomainViolation) {
  try {
    phase_rhs({-1.0, 0.0, -0.5});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DomainViolation);
  }
}

TEST(Curve, Values) {
  EXPECT_EQ(curve_phi_s(0.0, -0.5), 0.0);
  EXPECT_NEAR(curve_phi_s(0.2, -0.5), -1.2 + 1.0 / std::sqrt(1.2), 1e-15);
  EXPECT_NEAR(curve_phi_s(0.2, -0.5), -0.287129, 1e-6);
}

TEST(Curve, EnergyVanishesOnCurve) {
  for (double delta : {-0.5, -0.001, -2.0}) {
    for (int i = 0; i <= 100; ++i) {
      const double phi = -0.95 + 2.9 * i / 100.0;
      const PhaseState st{phi, curve_phi_s(phi, delta), delta};
      EXPECT_NEAR(energy_homogeneous(st), 0.0, 1e-12 * (1.0 + std::abs(delta) * (1.0 + phi) * (1.0 + phi)));
      EXPECT_NEAR(phase_bracket(st), 0.0, 1e-12);
    }
  }
}

TEST(Energy, WorkedValues) {
  EXPECT_EQ(energy_homogeneous({0.0, 0.0, -0.5}), 0.0);
  EXPECT_NEAR(energy_homogeneous({0.0, 0.1, -0.5}), 0.105, 1e-15);
  EXPECT_NEAR(energy_homogeneous({0.0, -0.1, -0.5}), -0.095, 1e-15);
}

TEST(Bracket, IdentityHoldsEverywhere) {
  for (double phi : {-0.5, 0.0, 0.3, 2.0}) {
    for (double v : {-0.2, 0.0, 0.4}) {
      EXPECT_NEAR(phase_bracket_identity_residual({phi, v, -0.5}), 0.0, 1e-12);
    }
  }
}

TEST(Integrate, StationaryPoint) {
  const PhaseTrajectory tr = integrate_phase({0.0, 0.0, -0.5}, 5.0);
  EXPECT_EQ(tr.fate, PhaseFate::Stationary);
  for (std::size_t i = 0; i < tr.s.size(); ++i) {
    EXPECT_EQ(tr.phi[i], 0.0);
    EXPECT_EQ(tr.phi_s[i], 0.0);
  }
}

TEST(Integrate, PositiveBracketExpands) {
  const PhaseTrajectory tr = integrate_phase({0.0, 0.05, -0.5}, 20.0);
  EXPECT_EQ(tr.fate, PhaseFate::Expand);
  ASSERT_TRUE(tr.first_escape_s);
  EXPECT_GT(*tr.first_escape_s, 0.0);
}

TEST(Integrate, NegativeBracketCollapses) {
  const PhaseTrajectory tr = integrate_phase({0.0, -0.05, -0.5}, 20.0);
  EXPECT_EQ(tr.fate, PhaseFate::Collapse);
  ASSERT_TRUE(tr.first_escape_s);
  EXPECT_TRUE(tr.reached_floor);
  EXPECT_NEAR(tr.phi.back(), -1.0 + 1e-6, 1e-9);
}

TEST(Integrate, MatchesIndependentRk4) {
  for (const auto& [p0, v0] : {std::pair{0.01, 0.05}, std::pair{-0.1, 0.02}, std::pair{0.2, -0.1}}) {
    const double s_end = 1.5;
    const PhaseTrajectory tr = integrate_phase({p0, v0, -0.5}, s_end);
    ASSERT_NEAR(tr.s.back(), s_end, 1e-12);
    const auto ref = oracle::phase_state(p0, v0, -0.5, s_end);
    EXPECT_NEAR(tr.phi.back(), ref[0], 1e-8);
    EXPECT_NEAR(tr.phi_s.back(), ref[1], 1e-8);
  }
}

TEST(Integrate, CurveIsInvariant) {
  for (double phi : {-0.3, 0.1, 0.5}) {
    const PhaseTrajectory tr = integrate_phase({phi, curve_phi_s(phi, -0.5), -0.5}, 5.0);
    EXPECT_EQ(tr.fate, PhaseFate::OnCurve);
    EXPECT_LT(tr.max_curve_distance, 1e-8);
  }
}

TEST(Integrate, EscapeRateAtLeastExponential) {
  // the bracket grows at least like exp((b/2) s)
  const double delta = -0.5, b = 1.0;
  const PhaseTrajectory tr = integrate_phase({0.0, 0.01, delta}, 3.0);
  const double B0 = phase_bracket({tr.phi.front(), tr.phi_s.front(), delta});
  for (std::size_t i = 0; i < tr.s.size(); ++i) {
    const double B = phase_bracket({tr.phi[i], tr.phi_s[i], delta});
    EXPECT_GE(B, B0 * std::exp(0.5 * b * tr.s[i]) * (1.0 - 1e-8));
  }
}

TEST(Integrate, SamplesSatisfyEnergyAndDistanceAccessors) {
  const PhaseTrajectory tr = integrate_phase({0.1, 0.0, -0.5}, 1.0);
  for (std::size_t i = 0; i < tr.s.size(); ++i) {
    EXPECT_DOUBLE_EQ(tr.energy(i), energy_homogeneous({tr.phi[i], tr.phi_s[i], -0.5}));
    EXPECT_GE(tr.curve_distance(i), 0.0);
  }
}
