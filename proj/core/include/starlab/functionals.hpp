#pragma once

// Energies, dissipations, amplitudes and the weighted energy ledgers
// evaluated on discrete Lagrangian fields.

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "starlab/expansion.hpp"
#include "starlab/lagrangian.hpp"

namespace starlab {

struct PhysicalEnergy {
  double E = 0.0;
  double D = 0.0;
  double kinetic = 0.0;
  double internal = 0.0;
  double gravity = 0.0;          // subtracted in E
  double boundary_flux = 0.0;    // thermo: R^2 theta_r(R)
  double heat_generation = 0.0;  // thermo: eps int r^2 rho dr
};

// Eulerian energy and dissipation by Gauss quadrature in the mass
// coordinate. The isentropic internal energy is 3 int r^2 rho^{4/3} dr, the
// thermo one c_nu int r^2 rho theta dr; D = (4 mu/3) int (r u_r - u)^2 dr.
PhysicalEnergy physical_energy(const EulerianSnapshot& snap, const LagrangianGrid& grid,
                               double mu = 1.0);

struct PerturbationEnergy {
  double E = 0.0;
  double D = 0.0;
};

// Self-similar perturbation energy E(s) and dissipation D(s); they satisfy
// dE/ds + alpha_bar^{3/2} D = 0 with alpha_bar = a0 exp(b s).
PerturbationEnergy perturbation_energy_ss(const PerturbationField& field,
                                          const LagrangianGrid& grid,
                                          const ExpansionParams& params, double mu = 1.0);

// Relative entropy H(h) = log[(1+h)^2 (1+h+x h_x)] and its x-derivative.
struct RelativeEntropy {
  std::vector<double> H;
  std::vector<double> H_x;
};

RelativeEntropy relative_entropy(const std::vector<double>& x, const std::vector<double>& h);

// A = int_0^R (4h' + x h'')^2 against its lower bound 12 int h'^2 + int x^2 h''^2.
// The difference equals 4 R h'(R)^2.
struct FrakACheck {
  double A = 0.0;
  double lower = 0.0;
  double boundary = 0.0;
};

FrakACheck frak_a_check(const std::function<double(double)>& h_x,
                        const std::function<double(double)>& h_xx, double R);

// max of the sup norms of h, x h_x, h_t, x h_xt; thermo fields add
// sup |zeta/(R0 - x)| with the one-sided limit at R0.
double amplitude(const PerturbationField& field);

// Pointwise viscous heating (4 mu/3) [(h_t + x h_xt)/(1 + h + x h_x) - h_t/(1 + h)]^2.
std::vector<double> viscous_heating(const PerturbationField& field, double mu = 1.0);

// Rescales all components of the initial data so that the amplitude of the
// initial field equals omega. Zero data is left unchanged.
void scale_to_amplitude(InitialData& init, const LagrangianGrid& grid, double omega);

// Self-similar data with E < 0 built from a shape phi0:
// phi1 = -(3|delta|/b) phi0 - c b, then rescaled to amplitude omega. The
// linear part of E is then -c b^2 int x^4 rho_bar < 0.
InitialData negative_energy_data(const LagrangianGrid& grid, const ExpansionParams& params,
                                 const std::vector<double>& phi0, double omega, double c = 0.2);

struct HardyResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;  // 0 when rhs = 0
};

// k > 1: (int s^{k-2} g^2, int s^k (g^2 + g'^2)); k < 1:
// (int s^{k-2} (g - g(0))^2, int s^k g'^2), all over (0, 1).
HardyResult hardy_check(double k, const std::function<double(double)>& g,
                        const std::function<double(double)>& g_prime);

// Best constant lhs/rhs over the linear span of polynomials given by their
// coefficients (constant term first), from closed-form monomial moments and
// a generalized eigenproblem. Throws OutOfRange when a span member makes the
// right-hand side diverge (k = -1 needs g'(0) = 0).
double hardy_span_constant(double k, const std::vector<std::vector<double>>& coefficients);

struct WeightSpec {
  double a = 0.5;  // isentropic decay exponent
  double r1 = 0.5;
  double r2 = -0.5;
  double l1 = -2.5;
  double l2 = -2.0;
  double r_frak = -1.5;
  double r3 = -2.5;
};

// Names of the violated constraints; empty when valid.
std::vector<std::string> weight_violations(const WeightSpec& w, bool thermo);

// C^1 cubic cut-off: 1 on [0, R0/2], 0 on [3R0/4, R0].
double cutoff(double x, double R0);
double cutoff_prime(double x, double R0);

struct EnergyReport {
  double clock = 0.0;
  double omega = 0.0;
  double E_pert = 0.0;
  double D_pert = 0.0;
  double identity_residual = 0.0;  // self-similar: E(s) - E(0) + int alpha^{3/2} D
  std::vector<std::pair<std::string, double>> ledger;
  double energy_total = 0.0;
  double dissipation_total = 0.0;
  double E0 = 0.0;

  double term(const std::string& name) const;
};

// Online ledger for one run: energy terms are evaluated at each observed
// field, dissipation terms are integrated in the clock by the trapezoid rule.
class LedgerAccumulator {
 public:
  LedgerAccumulator(const LagrangianGrid& grid, Regime regime, const ExpansionParams& params,
                    const WeightSpec& weights = {}, double mu = 1.0);

  const EnergyReport& observe(const PerturbationField& field);
  const EnergyReport& latest() const { return report_; }
  bool empty() const { return !started_; }

 private:
  std::vector<std::pair<std::string, double>> energy_terms(const PerturbationField& f,
                                                           double alpha) const;
  std::vector<std::pair<std::string, double>> dissipation_rates(const PerturbationField& f,
                                                                double alpha) const;
  double initial_energy(const PerturbationField& f) const;

  const LagrangianGrid& grid_;
  Regime regime_;
  ExpansionParams params_;
  WeightSpec weights_;
  double mu_;
  LinearClockState clock_;
  bool started_ = false;
  double prev_clock_ = 0.0;
  std::vector<std::pair<std::string, double>> prev_rates_;
  std::vector<double> integrals_;
  double ss_E0_ = 0.0;
  double ss_prev_weighted_D_ = 0.0;
  double ss_integral_ = 0.0;
  EnergyReport report_;
};

std::vector<EnergyReport> total_energy_ledger(const std::vector<PerturbationField>& series,
                                              const LagrangianGrid& grid, Regime regime,
                                              const ExpansionParams& params,
                                              const WeightSpec& weights = {}, double mu = 1.0);

}  // namespace starlab
