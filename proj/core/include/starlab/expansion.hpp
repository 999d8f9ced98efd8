#pragma once

// Expansion factor alpha(t) of the homogeneous solutions: alpha^2 alpha'' = delta.

#include <optional>
#include <string_view>
#include <vector>

namespace starlab {

enum class ExpansionClass { SelfSimilar, Linear, Collapse, PositiveDelta };

std::string_view to_string(ExpansionClass c);

struct ExpansionParams {
  double delta = 0.0;
  double a0 = 1.0;
  double a1 = 0.0;
  double a1_star = 0.0;          // sqrt(2|delta|/a0) for delta < 0, else 0
  std::optional<double> beta1;   // min{a1, sqrt(a1^2 + 2 delta/a0)} when real
  std::optional<double> beta2;
  ExpansionClass classification = ExpansionClass::Linear;

  // b = sqrt(2|delta|)
  double b() const;
  // alpha'(t)^2 as a function of alpha, from the first integral
  double speed_squared(double alpha) const;
};

ExpansionParams classify_expansion(double delta, double a0, double a1);

struct DtSpec {
  double max_step = 0.05;
  double rtol = 1e-10;
  double atol = 1e-10;
  double alpha_min_fraction = 1e-6;  // collapse event at alpha = fraction * a0
};

struct ExpansionPath {
  ExpansionParams params;
  std::vector<double> t;
  std::vector<double> alpha;
  std::vector<double> alpha_prime;
  std::vector<double> s;    // int_0^t alpha^{-3/2}
  std::vector<double> tau;  // int_0^t alpha^{-1}
  std::optional<double> T_collapse;
  // alpha ~ c1 (1 + c2 t) fitted at the end of Linear/PositiveDelta runs
  std::optional<double> fitted_c1;
  std::optional<double> fitted_c2;
};

ExpansionPath integrate_alpha(const ExpansionParams& params, double t_end, const DtSpec& dt = {});

// Closed form alpha(t) = (a0^{3/2} + 1.5 a0^{1/2} a1 t)^{2/3} of the self-similar branch.
double self_similar_alpha(double a0, double a1, double t);

std::vector<double> self_similar_clock(const ExpansionPath& path);

// tau(t) = ln(1 + a1 t/a0)/a1 for delta = 0, and its inverse.
double linear_clock(double a0, double a1, double t);
double linear_clock_inverse(double a0, double a1, double tau);

bool thermo_expansion_gate(double K, double c_nu, double rel_tol = 1e-12);

// Least-squares slope of log alpha against log(T - t) over the final decade.
double collapse_exponent(const ExpansionPath& path);

// alpha and its tau-derivative along the linear clock, advanced monotonically.
class LinearClockState {
 public:
  explicit LinearClockState(const ExpansionParams& params);
  struct Value {
    double alpha;
    double alpha_tau;
  };
  Value at(double tau);

 private:
  ExpansionParams params_;
  double tau_ = 0.0;
  double alpha_ = 0.0;
  double alpha_tau_ = 0.0;
};

}  // namespace starlab
