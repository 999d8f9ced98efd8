#pragma once

// Phase plane of x-independent perturbations of the self-similar solution:
//   phi_ss + (b/2) phi_s + |delta| (1/(1+phi)^2 - (1+phi)) = 0,  b = sqrt(2|delta|).

#include <optional>
#include <string_view>
#include <utility>
#include <vector>

namespace starlab {

struct PhaseState {
  double phi = 0.0;
  double phi_s = 0.0;
  double delta = -0.5;

  double b() const;
};

enum class PhaseFate { Stationary, OnCurve, Expand, Collapse };

std::string_view to_string(PhaseFate f);

std::pair<double, double> phase_rhs(const PhaseState& state);

// phi_s on the zero-energy curve through phi.
double curve_phi_s(double phi, double delta);

// (1/2)(phi_s + b(1+phi))^2 + delta/(1+phi)
double energy_homogeneous(const PhaseState& state);

// B = phi_s + b((1+phi) - (1+phi)^{-1/2}); zero exactly on the curve.
double phase_bracket(const PhaseState& state);

// dB/ds - (b/2)(1 + (1+phi)^{-3/2}) B evaluated through the vector field.
double phase_bracket_identity_residual(const PhaseState& state);

struct PhaseDtSpec {
  double max_step = 0.05;
  double rtol = 1e-10;
  double atol = 1e-10;
  double escape = 0.5;            // |phi| threshold for the fate label
  double collapse_floor = 1e-6;   // stop at phi = -1 + floor
  double phi_cap = 1e6;           // stop expanding runs here
  double curve_tol = 1e-8;        // OnCurve if the drift stays below this
};

struct PhaseTrajectory {
  double delta = -0.5;
  std::vector<double> s;
  std::vector<double> phi;
  std::vector<double> phi_s;
  PhaseFate fate = PhaseFate::Stationary;
  std::optional<double> first_escape_s;
  double max_curve_distance = 0.0;
  bool reached_floor = false;     // stopped at phi = -1 + floor

  double energy(std::size_t i) const;
  double curve_distance(std::size_t i) const;
};

PhaseTrajectory integrate_phase(const PhaseState& initial, double s_end,
                                const PhaseDtSpec& dt = {});

}  // namespace starlab
