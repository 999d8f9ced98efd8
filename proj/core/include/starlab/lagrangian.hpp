#pragma once

// Lagrangian perturbation solvers on the fixed mass domain [0, R0].
//
// Unknowns are the flow-map perturbation h = r/(alpha x) - 1 and its clock
// derivative. The momentum step works with q = h_t/(1 + h), in which the
// viscous operator is the symmetric flux (kappa q_x)_x with
// kappa = (4/3) mu x^4 (1+h)^4 / (1 + h + x h_x). The zero-flux condition at
// R0 is the natural boundary condition of that form.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "starlab/expansion.hpp"
#include "starlab/profile.hpp"

namespace starlab {

enum class Regime { SelfSimilar, LinearIsentropic, LinearThermo };

std::string_view to_string(Regime r);

// Profile data on a uniform node grid x_i = i R0/N with dual cells
// [x_{i-1/2}, x_{i+1/2}] clipped to [0, R0].
struct LagrangianGrid {
  bool thermo = false;
  std::size_t cells = 0;
  double R0 = 0.0;
  double dx = 0.0;
  double K = 1.0;  // pressure constant (thermo)

  std::vector<double> x;         // N + 1 nodes
  std::vector<double> rho;       // rho_bar at nodes
  std::vector<double> m2;        // int over the dual cell of x^2 rho_bar
  std::vector<double> m4;        // int over the dual cell of x^4 rho_bar
  std::vector<double> xh;        // N interfaces x_{i+1/2}
  std::vector<double> rho_h;     // rho_bar at interfaces
  std::vector<double> ref_h;     // equilibrium pressure at interfaces
  std::vector<double> e4_h;      // int over [x_i, x_{i+1}] of x^2 rho_bar^{4/3} (isentropic)
  double ref_center = 0.0;       // equilibrium pressure at x = 0
  std::vector<double> theta;     // theta_bar at nodes (thermo)
  std::vector<double> theta_h;   // theta_bar at interfaces (thermo)
  std::vector<double> theta_prime_h;
  double epsilon = 0.0;          // heat generation rate (thermo)
  double c_nu = 0.0;             // specific heat (thermo)

  // Gauss-Legendre points on each interval [x_i, x_{i+1}] (gauss_order per
  // interval, interval-major) with the profile evaluated there.
  static constexpr std::size_t gauss_order = 5;
  std::vector<double> gx;
  std::vector<double> gw;
  std::vector<double> grho;
  std::vector<double> gmass;
  std::vector<double> gtheta;

  std::size_t size() const { return x.size(); }
};

LagrangianGrid make_grid(const IsentropicProfile& profile, std::size_t cells);
LagrangianGrid make_grid(const ThermoProfile& profile, std::size_t cells);

// Perturbation state on the grid. theta is phi (self-similar), vartheta
// (linear isentropic) or xi (thermo); zeta is the thermo temperature
// perturbation with zeta(R0) = 0.
struct PerturbationField {
  Regime regime = Regime::SelfSimilar;
  double clock = 0.0;  // s or tau
  std::vector<double> x;
  std::vector<double> theta;
  std::vector<double> theta_t;
  std::vector<double> theta_tt;
  std::vector<double> zeta;    // thermo only
  std::vector<double> zeta_t;  // thermo only

  bool has_second_derivative() const { return !theta_tt.empty(); }
};

// Initial-data families. Constant ignores the shape fields; Bump is the
// compact cosine bump (1 + cos(pi (x - c)/w))/2; RandomSmooth is a seeded
// even cosine series sum_k c_k cos(k pi x/R0), k = 1..modes, scaled to the
// requested sup norm.
enum class Family { Zero, Constant, Bump, RandomSmooth };

std::string_view to_string(Family f);
Family family_from_string(std::string_view name);

struct ShapeSpec {
  Family family = Family::Zero;
  double amplitude = 0.0;
  double center = 0.0;   // as a fraction of R0
  double width = 0.25;   // as a fraction of R0
  int modes = 4;
  std::uint64_t seed = 1;
};

std::vector<double> make_shape(const LagrangianGrid& grid, const ShapeSpec& spec);

struct SolverSpec {
  double mu = 1.0;
  double dt_max = 0.05;
  double cfl = 0.5;
  double max_rel_change = 1e-3;           // bound on dt * max|q|
  std::optional<double> fixed_dt;         // disables adaptive control
  double dt_floor = 1e-12;                // CFLFloor below this
  std::vector<double> emit_at;            // clock values for snapshots
  std::optional<double> growth_threshold; // amplitude that ends the run
  std::size_t max_steps = 50'000'000;
};

enum class EventKind { JacobianDegenerate, GrowthThreshold, TemperatureNegative };

std::string_view to_string(EventKind k);

struct Event {
  EventKind kind;
  double clock = 0.0;
  std::string detail;
};

struct StepInfo {
  double clock = 0.0;
  double dt = 0.0;
  double dissipation = 0.0;  // int kappa q_x^2 at the new state (unweighted)
  double viscous_weight = 0.0;  // c_v multiplying the viscous operator
};

// Called once with the initial state (dt = 0), then after every accepted step.
using Observer = std::function<void(const PerturbationField&, const StepInfo&)>;

struct EvolutionRun {
  Regime regime = Regime::SelfSimilar;
  std::vector<PerturbationField> snapshots;  // initial state plus emissions
  std::vector<Event> events;
  PerturbationField last;
  std::size_t steps = 0;
  double min_dt = 0.0;
  double max_dt = 0.0;
  bool stopped_early() const { return !events.empty(); }
};

struct InitialData {
  std::vector<double> theta0;
  std::vector<double> theta1;
  std::vector<double> zeta0;  // thermo only; last entry is forced to 0
};

// Self-similar regime: params must be SelfSimilar and share delta with the profile.
EvolutionRun evolve_self_similar(const LagrangianGrid& grid, const ExpansionParams& params,
                                 const InitialData& init, double s_end, const SolverSpec& spec,
                                 const Observer& observer = {});

// Linear isentropic regime on the tau clock.
EvolutionRun evolve_linear_isentropic(const LagrangianGrid& grid, const ExpansionParams& params,
                                      const InitialData& init, double tau_end,
                                      const SolverSpec& spec, const Observer& observer = {});

// Thermodynamic regime, alpha = a0 + a1 t. Requires the 3K = c_nu gate.
EvolutionRun evolve_linear_thermo(const LagrangianGrid& grid, const ExpansionParams& params,
                                  const InitialData& init,
                                  double tau_end, const SolverSpec& spec,
                                  const Observer& observer = {});

// Weak threshold for the linear isentropic regime: delta > -a0 a1^2/8.
bool linear_regime_delta_ok(const ExpansionParams& params);

enum class WeightMode { Weighted, Pointwise };

struct SecondDerivatives {
  std::vector<double> theta2;
  std::vector<double> zeta1;  // thermo only
};

// Initial clock derivatives implied by the equations: theta_tt(0) and, for
// the thermo regime, zeta_t(0). Weighted mode solves the cell-integrated
// identities, which stay regular at the vacuum node. Pointwise mode divides
// by x rho_bar and throws DegenerateWeight at R0.
SecondDerivatives initial_second_derivatives(const LagrangianGrid& grid, Regime regime,
                                             const ExpansionParams& params,
                                             const InitialData& init, double mu = 1.0,
                                             WeightMode mode = WeightMode::Weighted);

// Clock-dependent coefficients of the momentum equation.
struct ClockCoefficients {
  double alpha = 1.0;      // alpha(t) at this clock value
  double alpha_dot = 0.0;  // alpha'(t)
  double c_mass = 1.0;
  double c_damp = 0.0;
  double c_visc = 1.0;
  double time_scale = 1.0; // dt/dclock
};

ClockCoefficients clock_coefficients(Regime regime, const ExpansionParams& params, double clock);

struct EulerianSnapshot {
  double t = 0.0;
  double alpha = 1.0;
  std::vector<double> x;
  std::vector<double> r;
  std::vector<double> r_x;
  std::vector<double> rho;
  std::vector<double> u;
  std::vector<double> u_x;
  std::vector<double> theta_abs;  // thermo only
  double R = 0.0;
};

EulerianSnapshot reconstruct_eulerian(const PerturbationField& field, const LagrangianGrid& grid,
                                      const ExpansionParams& params);

// Relative mass error max_i |int_0^{r(x_i)} s^2 rho ds - int_0^{x_i} s^2 rho_bar| /
// total mass, with the r-integral done by Gauss quadrature on each cell of
// the Hermite interpolant of r(x).
double mass_conservation_error(const EulerianSnapshot& snap, const ProfileSampler& profile,
                               double total_mass);

}  // namespace starlab
