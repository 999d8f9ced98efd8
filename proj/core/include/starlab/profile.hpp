#pragma once

// Equilibrium profiles of the gaseous star: the isentropic profile
// w = rho_bar^{1/3} solving w'' + (2/y)w' + w^3/4 + 3 delta/4 = 0, and the
// thermodynamic pair (rho_bar, theta_bar) with heat generation epsilon.

#include <cstddef>
#include <functional>
#include <vector>

namespace starlab {

struct GridSpec {
  std::size_t cells = 200;       // uniform output grid on [0, R0]
  double rtol = 1e-10;
  double atol = 1e-10;
  double y_max = 400.0;          // give up searching for the first zero here
  double series_fraction = 1e-3; // series start as a fraction of the R0 guess
  double root_tol = 1e-12;       // |w(R0)| (resp. theta) relative to the center value
};

// Point evaluation of a profile. Fields that do not apply to a model are 0.
struct ProfileSample {
  double y = 0.0;
  double rho = 0.0;       // rho_bar
  double mass = 0.0;      // int_0^y s^2 rho_bar ds
  double moment4 = 0.0;   // int_0^y s^4 rho_bar ds
  double w = 0.0;         // rho_bar^{1/3} (isentropic)
  double w_prime = 0.0;
  double theta = 0.0;     // theta_bar (thermodynamic)
  double theta_prime = 0.0;
};

using ProfileSampler = std::function<ProfileSample(double)>;

struct IsentropicProfile {
  double delta = 0.0;
  double R0 = 0.0;
  double boundary_slope = 0.0;  // w'(R0)
  double fourth_moment = 0.0;   // int_0^R0 s^4 rho_bar
  double total_mass = 0.0;
  double y_series = 0.0;
  GridSpec spec;

  std::vector<double> y;
  std::vector<double> w;
  std::vector<double> w_prime;
  std::vector<double> rho_bar;
  std::vector<double> cumulative_mass;
  std::vector<double> cumulative_moment4;

  // Re-integrates the profile ODE from the nearest node below y.
  ProfileSample sample(double y) const;
  ProfileSampler sampler() const;
};

struct ThermoProfile {
  double K = 1.0;
  double epsilon = 0.25;
  double c_nu = 3.0;
  double central_density = 1.0;  // rho_bar(0); theta_bar(0) = 1
  double R0 = 0.0;
  double R0_density = 0.0;       // zero of rho_bar^{eps K/(1-eps K)} by secant extrapolation
  double theta_slope = 0.0;      // theta_bar'(R0)
  double density_power_slope = 0.0;  // d/dy rho_bar^{eps K/(1-eps K)} at R0
  double fourth_moment = 0.0;
  double total_mass = 0.0;
  double y_series = 0.0;
  GridSpec spec;

  std::vector<double> y;
  std::vector<double> theta_bar;
  std::vector<double> theta_bar_prime;
  std::vector<double> rho_bar;
  std::vector<double> cumulative_mass;
  std::vector<double> cumulative_moment4;

  // Exponent (1 - eps K)/(eps K) of the Lane-Emden reduction rho = A theta^n.
  double reduction_index() const { return (1.0 - epsilon * K) / (epsilon * K); }
  // rho_bar^{eps K/(1 - eps K)}, the quantity vanishing linearly at R0.
  double density_power(double rho) const;

  ProfileSample sample(double y) const;
  ProfileSampler sampler() const;
};

IsentropicProfile solve_isentropic_profile(double delta, const GridSpec& spec = {});

ThermoProfile solve_thermo_profile(double K, double epsilon, const GridSpec& spec = {},
                                   double central_density = 1.0);

struct MassMoments {
  std::vector<double> y;
  std::vector<double> cumulative_mass;
  double total_mass = 0.0;
  double fourth_moment = 0.0;
};

MassMoments profile_mass_moments(const IsentropicProfile& profile);
MassMoments profile_mass_moments(const ThermoProfile& profile);

}  // namespace starlab
