#include "starlab/profile.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ode.hpp"
#include "starlab/error.hpp"

namespace starlab {
namespace {

// ---------------------------------------------------------------- isentropic
// state: w, w', m2 = int y^2 w^3, m4 = int y^4 w^3
using IsoState = std::array<double, 4>;

void iso_rhs(double delta, const IsoState& s, IsoState& d, double y) {
  const double rho = s[0] * s[0] * s[0];
  d[0] = s[1];
  d[1] = -2.0 * s[1] / y - 0.25 * rho - 0.75 * delta;
  d[2] = y * y * rho;
  d[3] = y * y * y * y * rho;
}

IsoState iso_series(double delta, double y) {
  const double c2 = -(1.0 + 3.0 * delta) / 24.0;
  const double y2 = y * y;
  return {1.0 + c2 * y2, 2.0 * c2 * y, y * y2 / 3.0 + 0.6 * c2 * y2 * y2 * y,
          y2 * y2 * y / 5.0 + 3.0 * c2 * y2 * y2 * y2 * y / 7.0};
}

ProfileSample iso_sample_from(double y, const IsoState& s) {
  ProfileSample p;
  p.y = y;
  p.w = std::max(s[0], 0.0);
  p.w_prime = s[1];
  p.rho = p.w * p.w * p.w;
  p.mass = s[2];
  p.moment4 = s[3];
  return p;
}

// ------------------------------------------------------------ thermodynamic
// state: theta, m2, log rho, m4 (log form keeps relative accuracy of rho in
// the boundary layer, where rho ~ theta^n falls far below any absolute tolerance)
using ThState = std::array<double, 4>;

struct ThermoParams {
  double K, eps, A;
};

void thermo_rhs(const ThermoParams& p, const ThState& s, ThState& d, double y) {
  const double y2 = y * y;
  d[0] = -p.eps * s[1] / y2;
  const double rho = std::exp(s[2]);
  d[1] = y2 * rho;
  d[2] = -s[1] * (1.0 - p.eps * p.K) / (p.K * y2 * s[0]);
  d[3] = y2 * y2 * rho;
}

ThState thermo_series(const ThermoParams& p, double y) {
  const double y2 = y * y;
  return {1.0 - p.eps * p.A * y2 / 6.0, p.A * y * y2 / 3.0,
          std::log(p.A) - p.A * (1.0 - p.eps * p.K) * y2 / (6.0 * p.K), p.A * y2 * y2 * y / 5.0};
}

std::size_t node_below(const std::vector<double>& ys, double y) {
  auto it = std::upper_bound(ys.begin(), ys.end(), y);
  return it == ys.begin() ? 0 : static_cast<std::size_t>(it - ys.begin()) - 1;
}

}  // namespace

// ------------------------------------------------------------------ solvers

IsentropicProfile solve_isentropic_profile(double delta, const GridSpec& spec) {
  if (!(spec.rtol > 0.0) || !(spec.atol > 0.0) || spec.cells < 2) {
    throw Error(ErrorCode::InvalidParams, "tolerances must be positive and cells >= 2");
  }
  auto rhs = [delta](const IsoState& s, IsoState& d, double y) { iso_rhs(delta, s, d, y); };
  const double y_s = spec.series_fraction * 13.8;

  // pass 1: bracket and polish the first zero of w
  detail::Ode<4> ode(rhs, y_s, iso_series(delta, y_s), spec.rtol, spec.atol, 1e-3);
  ode.set_max_step(0.25);
  for (;;) {
    if (ode.t() >= spec.y_max) {
      throw Error(ErrorCode::NoFirstZero,
                  "w stays positive up to y_max = " + std::to_string(spec.y_max) +
                      " for delta = " + std::to_string(delta));
    }
    const double t_prev = ode.t();
    const IsoState prev = ode.x();
    ode.step(spec.y_max);
    if (ode.x()[0] <= 0.0) {
      ode.reset_to(t_prev, prev);
      break;
    }
  }
  IsoState at_root{};
  const double h0 = -ode.x()[0] / ode.x()[1];
  const double h = ode.polish_root([](const IsoState& s) { return s[0]; },
                                   [](const IsoState&, const IsoState& d) { return d[0]; }, h0,
                                   spec.root_tol, &at_root);
  if (std::abs(at_root[0]) > spec.root_tol) {
    throw Error(ErrorCode::ToleranceNotMet, "root polishing did not reach |w| < root_tol");
  }

  IsentropicProfile prof;
  prof.delta = delta;
  prof.spec = spec;
  prof.y_series = y_s;
  prof.R0 = ode.t() + h;
  prof.boundary_slope = at_root[1];
  if (!(prof.boundary_slope < 0.0) || !std::isfinite(prof.boundary_slope) ||
      prof.boundary_slope > -1e-8 || prof.boundary_slope < -1e8) {
    throw Error(ErrorCode::NonPhysicalVacuum,
                "boundary slope " + std::to_string(prof.boundary_slope) + " not finite negative");
  }
  prof.total_mass = at_root[2];
  prof.fourth_moment = at_root[3];

  // pass 2: values at uniform nodes
  const std::size_t n = spec.cells;
  prof.y.resize(n + 1);
  prof.w.resize(n + 1);
  prof.w_prime.resize(n + 1);
  prof.rho_bar.resize(n + 1);
  prof.cumulative_mass.resize(n + 1);
  prof.cumulative_moment4.resize(n + 1);
  detail::Ode<4> sweep(rhs, y_s, iso_series(delta, y_s), spec.rtol, spec.atol, 1e-3);
  sweep.set_max_step(0.25);
  for (std::size_t i = 0; i <= n; ++i) {
    const double yi = prof.R0 * static_cast<double>(i) / static_cast<double>(n);
    IsoState s{};
    if (i == n) {
      s = {0.0, prof.boundary_slope, prof.total_mass, prof.fourth_moment};
    } else if (i == 0) {
      s = {1.0, 0.0, 0.0, 0.0};
    } else if (yi <= y_s) {
      s = iso_series(delta, yi);
    } else {
      sweep.advance_to(yi);
      s = sweep.x();
    }
    const ProfileSample p = iso_sample_from(yi, s);
    prof.y[i] = yi;
    prof.w[i] = p.w;
    prof.w_prime[i] = p.w_prime;
    prof.rho_bar[i] = p.rho;
    prof.cumulative_mass[i] = p.mass;
    prof.cumulative_moment4[i] = p.moment4;
  }
  return prof;
}

ProfileSample IsentropicProfile::sample(double yq) const {
  if (yq <= 0.0) return iso_sample_from(0.0, {1.0, 0.0, 0.0, 0.0});
  if (yq >= R0) return iso_sample_from(R0, {0.0, boundary_slope, total_mass, fourth_moment});
  if (yq <= y_series) return iso_sample_from(yq, iso_series(delta, yq));
  const std::size_t k = node_below(y, yq);
  double y0 = y[k];
  IsoState s0{w[k], w_prime[k], cumulative_mass[k], cumulative_moment4[k]};
  if (y0 <= y_series) {
    y0 = y_series;
    s0 = iso_series(delta, y_series);
  }
  if (yq == y0) return iso_sample_from(yq, s0);
  const double d = delta;
  detail::Ode<4> ode([d](const IsoState& s, IsoState& ds, double t) { iso_rhs(d, s, ds, t); }, y0,
                     s0, spec.rtol, spec.atol, std::min(1e-2, yq - y0));
  ode.advance_to(yq);
  return iso_sample_from(yq, ode.x());
}

ProfileSampler IsentropicProfile::sampler() const {
  return [self = *this](double yq) { return self.sample(yq); };
}

// ---------------------------------------------------------------- thermo

double ThermoProfile::density_power(double rho) const {
  return rho > 0.0 ? std::pow(rho, 1.0 / reduction_index()) : 0.0;
}

ThermoProfile solve_thermo_profile(double K, double epsilon, const GridSpec& spec,
                                   double central_density) {
  const double ek = epsilon * K;
  if (!(K > 0.0) || !(epsilon > 0.0) || !(ek > 1.0 / 6.0) || !(ek < 1.0)) {
    throw Error(ErrorCode::OutOfRange,
                "eps K = " + std::to_string(ek) + " outside the admissible range (1/6, 1)");
  }
  if (!(central_density > 0.0)) {
    throw Error(ErrorCode::InvalidParams, "central density must be positive");
  }
  const ThermoParams par{K, epsilon, central_density};
  auto rhs = [par](const ThState& s, ThState& d, double y) { thermo_rhs(par, s, d, y); };
  auto positive = [](const ThState& s) { return s[0] > 0.0; };
  const double y_s = spec.series_fraction * 7.0 / std::sqrt(epsilon * central_density);

  detail::Ode<4> ode(rhs, y_s, thermo_series(par, y_s), spec.rtol, spec.atol, 1e-3, positive);
  ode.set_max_step(0.25);

  // march until theta is tiny; near the zero, steps are capped at half the
  // predicted distance so the approach is geometric.
  struct Rec {
    double y;
    ThState s;
  };
  std::vector<Rec> tail;
  const double theta_stop = spec.root_tol;
  while (ode.x()[0] > theta_stop) {
    if (ode.t() >= spec.y_max) {
      throw Error(ErrorCode::NoFirstZero, "theta_bar stays positive up to y_max");
    }
    const double y = ode.t();
    const double slope = -epsilon * ode.x()[1] / (y * y);
    const double dist = ode.x()[0] / std::max(-slope, 1e-300);
    ode.set_max_step(std::min(0.25, 0.5 * dist));
    const double before = ode.t();
    ode.step(spec.y_max);
    if (ode.t() == before) throw Error(ErrorCode::StepFailure, "no progress near the boundary");
    if (ode.x()[0] < 1e-4) tail.push_back({ode.t(), ode.x()});
  }

  ThermoProfile prof;
  prof.K = K;
  prof.epsilon = epsilon;
  prof.c_nu = 3.0 * K;
  prof.central_density = central_density;
  prof.spec = spec;
  prof.y_series = y_s;

  const double yk = ode.t();
  const ThState sk = ode.x();
  const double theta_prime = -epsilon * sk[1] / (yk * yk);
  prof.R0 = yk + sk[0] / (-theta_prime);
  prof.theta_slope = -epsilon * sk[1] / (prof.R0 * prof.R0);
  prof.total_mass = sk[1];
  prof.fourth_moment = sk[3];

  // independent estimate of the zero of rho^{1/n}: secant through two tail
  // states with theta around 1e-7 (well above roundoff, well inside the layer)
  const Rec* a = nullptr;
  const Rec* b = nullptr;
  for (const auto& r : tail) {
    if (r.s[0] < 1e-6 && r.s[0] > 1e-9) {
      a = b;
      b = &r;
    }
  }
  if (a == nullptr || b == nullptr) {
    if (tail.size() < 2) throw Error(ErrorCode::ToleranceNotMet, "boundary layer under-resolved");
    a = &tail[tail.size() - 2];
    b = &tail[tail.size() - 1];
  }
  const double pa = prof.density_power(std::exp(a->s[2]));
  const double pb = prof.density_power(std::exp(b->s[2]));
  prof.density_power_slope = (pb - pa) / (b->y - a->y);
  prof.R0_density = b->y - pb / prof.density_power_slope;
  if (!(prof.density_power_slope < 0.0) || !(prof.theta_slope < 0.0)) {
    throw Error(ErrorCode::NonPhysicalVacuum, "boundary slopes are not finite and negative");
  }
  if (std::abs(prof.R0_density - prof.R0) > 1e-6 * prof.R0) {
    throw Error(ErrorCode::ZerosDoNotCoincide,
                "rho_bar and theta_bar vanish at " + std::to_string(prof.R0_density) + " and " +
                    std::to_string(prof.R0));
  }

  const std::size_t n = spec.cells;
  prof.y.resize(n + 1);
  prof.theta_bar.resize(n + 1);
  prof.theta_bar_prime.resize(n + 1);
  prof.rho_bar.resize(n + 1);
  prof.cumulative_mass.resize(n + 1);
  prof.cumulative_moment4.resize(n + 1);
  detail::Ode<4> sweep(rhs, y_s, thermo_series(par, y_s), spec.rtol, spec.atol, 1e-3, positive);
  sweep.set_max_step(0.25);
  for (std::size_t i = 0; i <= n; ++i) {
    const double yi = prof.R0 * static_cast<double>(i) / static_cast<double>(n);
    ThState s{};
    if (i == n) {
      s = {0.0, prof.total_mass, -HUGE_VAL, prof.fourth_moment};
    } else if (i == 0) {
      s = {1.0, 0.0, std::log(central_density), 0.0};
    } else if (yi <= y_s) {
      s = thermo_series(par, yi);
    } else {
      sweep.advance_to(yi);
      s = sweep.x();
    }
    prof.y[i] = yi;
    prof.theta_bar[i] = s[0];
    prof.theta_bar_prime[i] = i == 0 ? 0.0 : -epsilon * s[1] / (yi * yi);
    prof.rho_bar[i] = std::exp(s[2]);
    prof.cumulative_mass[i] = s[1];
    prof.cumulative_moment4[i] = s[3];
  }
  return prof;
}

ProfileSample ThermoProfile::sample(double yq) const {
  ProfileSample p;
  p.y = yq;
  auto fill = [&](const ThState& s, double yy) {
    p.theta = s[0];
    p.mass = s[1];
    p.rho = std::exp(s[2]);
    p.moment4 = s[3];
    p.theta_prime = yy > 0.0 ? -epsilon * s[1] / (yy * yy) : 0.0;
    p.w = density_power(p.rho);
    return p;
  };
  const ThermoParams par{K, epsilon, central_density};
  if (yq <= 0.0) return fill({1.0, 0.0, std::log(central_density), 0.0}, 0.0);
  if (yq >= R0 * (1.0 - 1e-13)) {
    fill({0.0, total_mass, -HUGE_VAL, fourth_moment}, R0);
    p.theta_prime = theta_slope;
    return p;
  }
  if (yq <= y_series) return fill(thermo_series(par, yq), yq);
  const std::size_t k = node_below(y, yq);
  double y0 = y[k];
  ThState s0{theta_bar[k], cumulative_mass[k], std::log(rho_bar[k]), cumulative_moment4[k]};
  if (y0 <= y_series) {
    y0 = y_series;
    s0 = thermo_series(par, y_series);
  }
  if (yq == y0) return fill(s0, yq);
  detail::Ode<4> ode([par](const ThState& s, ThState& d, double t) { thermo_rhs(par, s, d, t); },
                     y0, s0, spec.rtol, spec.atol, std::min(1e-2, yq - y0),
                     [](const ThState& s) { return s[0] > 0.0; });
  ode.advance_to(yq);
  return fill(ode.x(), yq);
}

ProfileSampler ThermoProfile::sampler() const {
  return [self = *this](double yq) { return self.sample(yq); };
}

// ---------------------------------------------------------------- moments

MassMoments profile_mass_moments(const IsentropicProfile& profile) {
  return {profile.y, profile.cumulative_mass, profile.total_mass, profile.fourth_moment};
}

MassMoments profile_mass_moments(const ThermoProfile& profile) {
  return {profile.y, profile.cumulative_mass, profile.total_mass, profile.fourth_moment};
}

}  // namespace starlab
