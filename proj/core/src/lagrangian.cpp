#include "starlab/lagrangian.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <sstream>

#include "grid_ops.hpp"
#include "starlab/error.hpp"
#include "starlab/functionals.hpp"
#include "starlab/tridiag.hpp"

namespace starlab {

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::SelfSimilar: return "SelfSimilar";
    case Regime::LinearIsentropic: return "LinearIsentropic";
    case Regime::LinearThermo: return "LinearThermo";
  }
  return "Unknown";
}

std::string_view to_string(Family f) {
  switch (f) {
    case Family::Zero: return "zero";
    case Family::Constant: return "constant";
    case Family::Bump: return "single-bump";
    case Family::RandomSmooth: return "random-smooth";
  }
  return "unknown";
}

Family family_from_string(std::string_view name) {
  if (name == "zero") return Family::Zero;
  if (name == "constant") return Family::Constant;
  if (name == "single-bump" || name == "bump") return Family::Bump;
  if (name == "random-smooth" || name == "random") return Family::RandomSmooth;
  throw Error(ErrorCode::ConfigInvalid, "unknown perturbation family '" + std::string(name) + "'");
}

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::JacobianDegenerate: return "JacobianDegenerate";
    case EventKind::GrowthThreshold: return "GrowthThreshold";
    case EventKind::TemperatureNegative: return "TemperatureNegative";
  }
  return "Unknown";
}

namespace {

constexpr std::array<double, 5> kGaussNodes = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                               0.5384693101056831, 0.9061798459386640};
constexpr std::array<double, 5> kGaussWeights = {0.2369268850561891, 0.4786286704993665,
                                                 0.5688888888888889, 0.4786286704993665,
                                                 0.2369268850561891};

void require_cells(std::size_t cells) {
  if (cells < 4) throw Error(ErrorCode::InvalidParams, "the Lagrangian grid needs at least 4 cells");
}

// Shared layout: nodes, interfaces, dual-cell moments and Gauss samples.
template <class Profile>
LagrangianGrid base_grid(const Profile& profile, std::size_t cells) {
  require_cells(cells);
  LagrangianGrid g;
  g.cells = cells;
  g.R0 = profile.R0;
  g.dx = profile.R0 / static_cast<double>(cells);
  const std::size_t n = cells + 1;
  g.x.resize(n);
  for (std::size_t i = 0; i < n; ++i) g.x[i] = g.dx * static_cast<double>(i);
  g.x.back() = g.R0;

  std::vector<ProfileSample> node(n), half(cells);
  for (std::size_t i = 0; i < n; ++i) node[i] = profile.sample(g.x[i]);
  g.xh.resize(cells);
  for (std::size_t i = 0; i < cells; ++i) {
    g.xh[i] = 0.5 * (g.x[i] + g.x[i + 1]);
    half[i] = profile.sample(g.xh[i]);
  }
  g.rho.resize(n);
  for (std::size_t i = 0; i < n; ++i) g.rho[i] = std::max(node[i].rho, 0.0);
  g.rho.back() = 0.0;
  g.rho_h.resize(cells);
  for (std::size_t i = 0; i < cells; ++i) g.rho_h[i] = std::max(half[i].rho, 0.0);

  g.m2.resize(n);
  g.m4.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double lo_m2 = i == 0 ? 0.0 : half[i - 1].mass;
    const double lo_m4 = i == 0 ? 0.0 : half[i - 1].moment4;
    const double hi_m2 = i == cells ? profile.total_mass : half[i].mass;
    const double hi_m4 = i == cells ? profile.fourth_moment : half[i].moment4;
    g.m2[i] = hi_m2 - lo_m2;
    g.m4[i] = hi_m4 - lo_m4;
  }

  const std::size_t q = LagrangianGrid::gauss_order;
  g.gx.resize(cells * q);
  g.gw.resize(cells * q);
  g.grho.resize(cells * q);
  g.gmass.resize(cells * q);
  g.gtheta.assign(cells * q, 0.0);
  for (std::size_t i = 0; i < cells; ++i) {
    for (std::size_t k = 0; k < q; ++k) {
      const std::size_t j = i * q + k;
      g.gx[j] = g.xh[i] + 0.5 * g.dx * kGaussNodes[k];
      g.gw[j] = 0.5 * g.dx * kGaussWeights[k];
      const ProfileSample ps = profile.sample(g.gx[j]);
      g.grho[j] = std::max(ps.rho, 0.0);
      g.gmass[j] = ps.mass;
      g.gtheta[j] = ps.theta;
    }
  }
  return g;
}

}  // namespace

LagrangianGrid make_grid(const IsentropicProfile& profile, std::size_t cells) {
  LagrangianGrid g = base_grid(profile, cells);
  g.thermo = false;
  g.ref_h.resize(cells);
  for (std::size_t i = 0; i < cells; ++i) g.ref_h[i] = std::pow(g.rho_h[i], 4.0 / 3.0);
  g.ref_center = std::pow(g.rho[0], 4.0 / 3.0);
  g.e4_h.assign(cells, 0.0);
  const std::size_t q = LagrangianGrid::gauss_order;
  for (std::size_t i = 0; i < cells; ++i) {
    for (std::size_t k = 0; k < q; ++k) {
      const std::size_t j = i * q + k;
      g.e4_h[i] += g.gw[j] * g.gx[j] * g.gx[j] * std::pow(g.grho[j], 4.0 / 3.0);
    }
  }
  return g;
}

LagrangianGrid make_grid(const ThermoProfile& profile, std::size_t cells) {
  LagrangianGrid g = base_grid(profile, cells);
  g.thermo = true;
  g.K = profile.K;
  g.epsilon = profile.epsilon;
  g.c_nu = profile.c_nu;
  const std::size_t n = cells + 1;
  g.theta.resize(n);
  for (std::size_t i = 0; i < n; ++i) g.theta[i] = std::max(profile.sample(g.x[i]).theta, 0.0);
  g.theta.back() = 0.0;
  g.theta_h.resize(cells);
  g.theta_prime_h.resize(cells);
  g.ref_h.resize(cells);
  for (std::size_t i = 0; i < cells; ++i) {
    const ProfileSample ps = profile.sample(g.xh[i]);
    g.theta_h[i] = ps.theta;
    g.theta_prime_h[i] = ps.theta_prime;
    g.ref_h[i] = g.K * g.rho_h[i] * g.theta_h[i];
  }
  g.ref_center = g.K * g.rho[0] * g.theta[0];
  return g;
}

std::vector<double> make_shape(const LagrangianGrid& grid, const ShapeSpec& spec) {
  const std::size_t n = grid.size();
  std::vector<double> f(n, 0.0);
  switch (spec.family) {
    case Family::Zero: break;
    case Family::Constant: std::fill(f.begin(), f.end(), spec.amplitude); break;
    case Family::Bump: {
      const double c = spec.center * grid.R0;
      const double w = spec.width * grid.R0;
      if (!(w > 0.0)) throw Error(ErrorCode::ConfigInvalid, "bump width must be positive");
      for (std::size_t i = 0; i < n; ++i) {
        const double d = grid.x[i] - c;
        if (std::abs(d) < w) f[i] = spec.amplitude * 0.5 * (1.0 + std::cos(M_PI * d / w));
      }
      break;
    }
    case Family::RandomSmooth: {
      if (spec.modes < 1) throw Error(ErrorCode::ConfigInvalid, "random-smooth needs modes >= 1");
      std::mt19937_64 rng(spec.seed);
      std::uniform_real_distribution<double> coef(-1.0, 1.0);
      std::vector<double> c(static_cast<std::size_t>(spec.modes) + 1, 0.0);
      for (int k = 1; k <= spec.modes; ++k) c[static_cast<std::size_t>(k)] = coef(rng) / k;
      double sup = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double v = 0.0;
        for (int k = 1; k <= spec.modes; ++k) {
          v += c[static_cast<std::size_t>(k)] * std::cos(k * M_PI * grid.x[i] / grid.R0);
        }
        f[i] = v;
        sup = std::max(sup, std::abs(v));
      }
      const double scale = sup > 0.0 ? spec.amplitude / sup : 0.0;
      for (double& v : f) v *= scale;
      break;
    }
  }
  return f;
}

bool linear_regime_delta_ok(const ExpansionParams& params) {
  return params.delta > -params.a0 * params.a1 * params.a1 / 8.0;
}

ClockCoefficients clock_coefficients(Regime regime, const ExpansionParams& params, double clock) {
  ClockCoefficients c;
  switch (regime) {
    case Regime::SelfSimilar: {
      const double b = params.b();
      c.alpha = params.a0 * std::exp(b * clock);
      c.time_scale = std::pow(c.alpha, 1.5);
      c.alpha_dot = b * c.alpha / c.time_scale;
      c.c_mass = 1.0;
      c.c_damp = 0.5 * b;
      c.c_visc = std::pow(c.alpha, 2.5);
      break;
    }
    case Regime::LinearIsentropic:
    case Regime::LinearThermo: {
      LinearClockState st(params);
      const auto v = st.at(clock);
      c.alpha = v.alpha;
      c.time_scale = v.alpha;
      c.alpha_dot = v.alpha_tau / v.alpha;
      c.c_mass = v.alpha;
      c.c_damp = v.alpha_tau;
      c.c_visc = v.alpha * v.alpha * v.alpha;
      break;
    }
  }
  return c;
}

namespace {

// Geometry of the flow map for one state: psi = 1 + h at nodes, its
// interface average, and Lambda = (x psi)_x on interfaces and nodes.
struct Geometry {
  std::vector<double> psi;
  std::vector<double> psi_h;
  std::vector<double> lam_h;
  std::vector<double> lam;  // node values (center: psi_0)
  std::vector<double> kappa_h;
};

// Returns false (with a message) if the flow map degenerates.
bool build_geometry(const LagrangianGrid& g, const std::vector<double>& h, double mu, Geometry& geo,
                    std::string* why) {
  const std::size_t n = g.size();
  const std::size_t m = g.cells;
  geo.psi.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    geo.psi[i] = 1.0 + h[i];
    if (!(geo.psi[i] > 0.0)) {
      if (why) *why = "1 + h <= 0 at x = " + std::to_string(g.x[i]);
      return false;
    }
  }
  geo.psi_h.resize(m);
  geo.lam_h.resize(m);
  geo.kappa_h.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    geo.psi_h[i] = 0.5 * (geo.psi[i] + geo.psi[i + 1]);
    geo.lam_h[i] = (g.x[i + 1] * geo.psi[i + 1] - g.x[i] * geo.psi[i]) / g.dx;
    if (!(geo.lam_h[i] > 0.0)) {
      if (why) *why = "1 + h + x h_x <= 0 near x = " + std::to_string(g.xh[i]);
      return false;
    }
    const double x2 = g.xh[i] * g.xh[i];
    const double p2 = geo.psi_h[i] * geo.psi_h[i];
    geo.kappa_h[i] = (4.0 / 3.0) * mu * x2 * x2 * p2 * p2 / geo.lam_h[i];
  }
  geo.lam.resize(n);
  std::vector<double> xpsi(n);
  for (std::size_t i = 0; i < n; ++i) xpsi[i] = g.x[i] * geo.psi[i];
  geo.lam = detail::diff1(xpsi, g.dx);
  geo.lam[0] = geo.psi[0];
  return true;
}

// Cell-integrated pressure force x^3 psi^3 [Pi_x - ref_x/psi^4].
std::vector<double> pressure_force(const LagrangianGrid& g, const Geometry& geo,
                                   const std::vector<double>& zeta) {
  const std::size_t n = g.size();
  const std::size_t m = g.cells;
  std::vector<double> pi_h(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double jac = geo.psi_h[i] * geo.psi_h[i] * geo.lam_h[i];
    if (g.thermo) {
      const double z = 0.5 * (zeta[i] + zeta[i + 1]);
      pi_h[i] = g.K * g.rho_h[i] * (z + g.theta_h[i]) / jac;
    } else {
      pi_h[i] = std::pow(g.rho_h[i] / jac, 4.0 / 3.0);
    }
  }
  const double p0 = geo.psi[0];
  const double pi_center = g.thermo ? g.K * g.rho[0] * (zeta[0] + g.theta[0]) / (p0 * p0 * p0)
                                    : std::pow(g.rho[0] / (p0 * p0 * p0), 4.0 / 3.0);
  std::vector<double> f(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double lo_pi = i == 0 ? pi_center : pi_h[i - 1];
    const double lo_ref = i == 0 ? g.ref_center : g.ref_h[i - 1];
    const double hi_pi = i == m ? 0.0 : pi_h[i];
    const double hi_ref = i == m ? 0.0 : g.ref_h[i];
    const double p = geo.psi[i];
    const double p4 = p * p * p * p;
    // center cell: weight int x^4/int x over [0, dx/2], exact for Pi_x linear in x
    const double hc = 0.5 * g.dx;
    const double x3 = i == 0 ? 0.4 * hc * hc * hc : g.x[i] * g.x[i] * g.x[i];
    f[i] = x3 * p * p * p * ((hi_pi - lo_pi) - (hi_ref - lo_ref) / p4);
  }
  return f;
}

double gravity_delta(Regime regime, const ExpansionParams& params) {
  return regime == Regime::LinearThermo ? 0.0 : params.delta;
}

// Viscous operator (A q)_i = sum of kappa-weighted differences.
std::vector<double> apply_viscous(const LagrangianGrid& g, const Geometry& geo,
                                  const std::vector<double>& q) {
  const std::size_t n = g.size();
  std::vector<double> a(n, 0.0);
  for (std::size_t i = 0; i < g.cells; ++i) {
    const double flux = geo.kappa_h[i] * (q[i + 1] - q[i]) / g.dx;
    a[i] += flux;
    a[i + 1] -= flux;
  }
  return a;
}

double discrete_dissipation(const LagrangianGrid& g, const Geometry& geo,
                            const std::vector<double>& q) {
  double d = 0.0;
  for (std::size_t i = 0; i < g.cells; ++i) {
    const double dq = q[i + 1] - q[i];
    d += geo.kappa_h[i] * dq * dq / g.dx;
  }
  return d;
}

// Work term W_i = rho/(psi^2 Lambda) [(x^3 psi^3 q)_{i+1/2} - (x^3 psi^3 q)_{i-1/2}].
std::vector<double> work_term(const LagrangianGrid& g, const Geometry& geo,
                              const std::vector<double>& q) {
  const std::size_t n = g.size();
  std::vector<double> flux(g.cells);
  for (std::size_t i = 0; i < g.cells; ++i) {
    const double x3 = g.xh[i] * g.xh[i] * g.xh[i];
    const double p3 = geo.psi_h[i] * geo.psi_h[i] * geo.psi_h[i];
    flux[i] = x3 * p3 * 0.5 * (q[i] + q[i + 1]);
  }
  std::vector<double> w(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double lo = i == 0 ? 0.0 : flux[i - 1];
    const double jac = geo.psi[i] * geo.psi[i] * geo.lam[i];
    w[i] = g.rho[i] / jac * (flux[i] - lo);
  }
  return w;
}

// Viscous heating share of each node: half of kappa_h (dq)^2/dx from both sides.
std::vector<double> heating(const LagrangianGrid& g, const Geometry& geo,
                            const std::vector<double>& q) {
  std::vector<double> h(g.size(), 0.0);
  for (std::size_t i = 0; i < g.cells; ++i) {
    const double dq = q[i + 1] - q[i];
    const double d = geo.kappa_h[i] * dq * dq / g.dx;
    h[i] += 0.5 * d;
    h[i + 1] += 0.5 * d;
  }
  return h;
}

// Interface temperature coefficient a_h = psi^2/Lambda.
std::vector<double> conductivity(const LagrangianGrid& g, const Geometry& geo) {
  std::vector<double> a(g.cells);
  for (std::size_t i = 0; i < g.cells; ++i) a[i] = geo.psi_h[i] * geo.psi_h[i] / geo.lam_h[i];
  return a;
}

// Right-hand side pieces of the temperature equation that do not involve
// the unknown: heating and the theta_bar source flux difference.
std::vector<double> temperature_explicit(const LagrangianGrid& g, const Geometry& geo,
                                         const std::vector<double>& q, double alpha) {
  const std::vector<double> heat = heating(g, geo, q);
  const std::vector<double> a = conductivity(g, geo);
  std::vector<double> src(g.cells);
  for (std::size_t i = 0; i < g.cells; ++i) {
    src[i] = (a[i] - 1.0) * g.xh[i] * g.xh[i] * g.theta_prime_h[i];
  }
  std::vector<double> r(g.size(), 0.0);
  for (std::size_t i = 0; i + 1 < g.size(); ++i) {
    const double lo = i == 0 ? 0.0 : src[i - 1];
    r[i] = alpha * heat[i] + alpha * alpha * (src[i] - lo);
  }
  return r;
}

std::vector<double> ratio(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] / b[i];
  return r;
}

void check_init(const LagrangianGrid& g, const InitialData& init, bool thermo) {
  if (init.theta0.size() != g.size() || init.theta1.size() != g.size()) {
    throw Error(ErrorCode::InvalidParams, "initial data must have one value per grid node");
  }
  if (thermo && !init.zeta0.empty() && init.zeta0.size() != g.size()) {
    throw Error(ErrorCode::InvalidParams, "initial zeta must have one value per grid node");
  }
}

std::vector<double> zeta_or_zero(const LagrangianGrid& g, const InitialData& init) {
  std::vector<double> z = init.zeta0.empty() ? std::vector<double>(g.size(), 0.0) : init.zeta0;
  z.back() = 0.0;
  return z;
}

class Evolver {
 public:
  Evolver(const LagrangianGrid& g, Regime regime, const ExpansionParams& params,
          const SolverSpec& spec)
      : g_(g), regime_(regime), params_(params), spec_(spec), clock_state_(params) {}

  EvolutionRun run(const InitialData& init, double clock_end, const Observer& observer) {
    const bool thermo = regime_ == Regime::LinearThermo;
    check_init(g_, init, thermo);
    EvolutionRun out;
    out.regime = regime_;

    PerturbationField f;
    f.regime = regime_;
    f.clock = 0.0;
    f.x = g_.x;
    f.theta = init.theta0;
    f.theta_t = init.theta1;
    if (thermo) {
      f.zeta = zeta_or_zero(g_, init);
    }
    std::string why;
    Geometry geo;
    if (!build_geometry(g_, f.theta, spec_.mu, geo, &why)) {
      throw Error(ErrorCode::JacobianDegenerate, "initial data: " + why);
    }
    {
      InitialData fixed = init;
      if (thermo) fixed.zeta0 = f.zeta;
      const SecondDerivatives sd =
          initial_second_derivatives(g_, regime_, params_, fixed, spec_.mu);
      f.theta_tt = sd.theta2;
      if (thermo) f.zeta_t = sd.zeta1;
    }
    out.snapshots.push_back(f);
    if (observer) {
      StepInfo info;
      info.clock = f.clock;
      info.dissipation = discrete_dissipation(g_, geo, ratio(f.theta_t, geo.psi));
      info.viscous_weight = coefficients(f.clock).c_visc;
      observer(f, info);
    }

    std::vector<double> emit = spec_.emit_at;
    emit.push_back(clock_end);
    std::sort(emit.begin(), emit.end());
    emit.erase(std::remove_if(emit.begin(), emit.end(),
                              [&](double c) { return c <= 0.0 || c > clock_end; }),
               emit.end());
    emit.erase(std::unique(emit.begin(), emit.end()), emit.end());
    std::size_t next_emit = 0;
    out.min_dt = HUGE_VAL;
    out.max_dt = 0.0;

    const double dgrav = gravity_delta(regime_, params_);
    const double tiny = 1e-12 * std::max(1.0, clock_end);

    while (f.clock < clock_end - tiny && out.steps < spec_.max_steps) {
      const std::size_t n = g_.size();
      std::vector<double> q = ratio(f.theta_t, geo.psi);
      const ClockCoefficients cnow = coefficients(f.clock);
      const std::vector<double> force = pressure_force(g_, geo, f.zeta);

      // step size
      double dt = spec_.dt_max;
      if (spec_.fixed_dt) {
        dt = *spec_.fixed_dt;
      } else {
        double c2 = 0.0;
        for (std::size_t i = 0; i < g_.cells; ++i) {
          if (g_.rho_h[i] <= 0.0) continue;
          const double jac = geo.psi_h[i] * geo.psi_h[i] * geo.lam_h[i];
          const double pi = g_.thermo
                                ? g_.K * g_.rho_h[i] *
                                      (0.5 * (f.zeta[i] + f.zeta[i + 1]) + g_.theta_h[i]) / jac
                                : std::pow(g_.rho_h[i] / jac, 4.0 / 3.0);
          c2 = std::max(c2, (4.0 / 3.0) * std::abs(pi) / (g_.rho_h[i] * cnow.c_mass));
        }
        if (c2 > 0.0) dt = std::min(dt, spec_.cfl * g_.dx / std::sqrt(c2));
        double qmax = 0.0;
        for (double v : q) qmax = std::max(qmax, std::abs(v));
        if (qmax > 0.0) dt = std::min(dt, spec_.max_rel_change / qmax);
        if (dt < spec_.dt_floor) {
          throw Error(ErrorCode::CFLFloor, "step size " + std::to_string(dt) +
                                               " below the floor at clock " +
                                               std::to_string(f.clock));
        }
      }
      double target = clock_end;
      if (next_emit < emit.size()) target = std::min(target, emit[next_emit]);
      if (f.clock + dt >= target - tiny) dt = target - f.clock;
      const double clock_new = f.clock + dt;
      const ClockCoefficients cn = coefficients(clock_new);

      // momentum: implicit damping and viscosity, lagged coefficients
      std::vector<double> s(n), l(n, 0.0), u(n, 0.0), r(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double mass = g_.m4[i] * geo.psi[i] * geo.psi[i];
        const double p = geo.psi[i];
        const double grav = dgrav * (p * p - 1.0 / p) * g_.m4[i];
        s[i] = cn.c_mass * mass / dt + cn.c_damp * mass;
        r[i] = cn.c_mass * mass * q[i] / dt - cn.c_mass * mass * q[i] * q[i] - grav - force[i];
      }
      for (std::size_t i = 0; i < g_.cells; ++i) {
        const double k = cn.c_visc * geo.kappa_h[i] / g_.dx;
        u[i] = k;
        l[i + 1] = k;
      }
      const std::vector<double> qn = solve_excess_tridiagonal(s, l, u, r);

      PerturbationField nf;
      nf.regime = regime_;
      nf.clock = clock_new;
      nf.x = g_.x;
      nf.theta.resize(n);
      nf.theta_t.resize(n);
      nf.theta_tt.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double e = dt * qn[i];
        nf.theta[i] = f.theta[i] * std::exp(e) + std::expm1(e);
        nf.theta_t[i] = qn[i] * (1.0 + nf.theta[i]);
        nf.theta_tt[i] = (nf.theta_t[i] - f.theta_t[i]) / dt;
      }
      Geometry ngeo;
      if (!build_geometry(g_, nf.theta, spec_.mu, ngeo, &why)) {
        out.events.push_back({EventKind::JacobianDegenerate, clock_new, why});
        break;
      }

      if (thermo) {
        if (!temperature_step(f, ngeo, qn, cn.alpha, dt, nf, out)) break;
      }

      out.steps++;
      out.min_dt = std::min(out.min_dt, dt);
      out.max_dt = std::max(out.max_dt, dt);
      f = std::move(nf);
      geo = std::move(ngeo);

      if (observer) {
        StepInfo info;
        info.clock = f.clock;
        info.dt = dt;
        info.dissipation = discrete_dissipation(g_, geo, qn);
        info.viscous_weight = cn.c_visc;
        observer(f, info);
      }
      if (next_emit < emit.size() && f.clock >= emit[next_emit] - tiny) {
        f.clock = emit[next_emit];
        out.snapshots.push_back(f);
        ++next_emit;
      }
      if (spec_.growth_threshold) {
        const double w = amplitude(f);
        if (w > *spec_.growth_threshold) {
          std::ostringstream os;
          os << "amplitude " << w << " exceeds " << *spec_.growth_threshold;
          out.events.push_back({EventKind::GrowthThreshold, f.clock, os.str()});
          break;
        }
      }
    }
    if (out.steps == 0) out.min_dt = 0.0;
    out.last = f;
    if (out.snapshots.back().clock != f.clock) out.snapshots.push_back(f);
    return out;
  }

 private:
  ClockCoefficients coefficients(double clock) {
    if (regime_ == Regime::SelfSimilar) return clock_coefficients(regime_, params_, clock);
    ClockCoefficients c;
    const auto v = clock_state_.at(clock);
    c.alpha = v.alpha;
    c.time_scale = v.alpha;
    c.alpha_dot = v.alpha_tau / v.alpha;
    c.c_mass = v.alpha;
    c.c_damp = v.alpha_tau;
    c.c_visc = v.alpha * v.alpha * v.alpha;
    return c;
  }

  // Implicit conduction, explicit heating; zeta(R0) = 0 is a Dirichlet row.
  bool temperature_step(const PerturbationField& f, const Geometry& ngeo,
                        const std::vector<double>& qn, double alpha, double dt,
                        PerturbationField& nf, EvolutionRun& out) {
    const std::size_t n = g_.size();
    const std::size_t m = n - 1;  // unknowns 0..N-1
    const std::vector<double> w = work_term(g_, ngeo, qn);
    const std::vector<double> rhs_ex = temperature_explicit(g_, ngeo, qn, alpha);
    const std::vector<double> a = conductivity(g_, ngeo);
    std::vector<double> s(m), l(m, 0.0), u(m, 0.0), r(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double cap = 3.0 * g_.K * g_.m2[i] / dt;
      s[i] = cap;
      r[i] = cap * f.zeta[i] + rhs_ex[i];
      const double kw = g_.K * w[i];
      if (kw > 0.0) {
        s[i] += kw;
        r[i] -= kw * g_.theta[i];
      } else {
        r[i] -= kw * (f.zeta[i] + g_.theta[i]);
      }
    }
    for (std::size_t i = 0; i < g_.cells; ++i) {
      const double k = alpha * alpha * a[i] * g_.xh[i] * g_.xh[i] / g_.dx;
      if (i + 1 < m) {
        u[i] = k;
        l[i + 1] = k;
      } else {
        s[i] += k;  // coupling to the Dirichlet node acts as a sink
      }
    }
    const std::vector<double> z = solve_excess_tridiagonal(s, l, u, r);
    nf.zeta.assign(n, 0.0);
    nf.zeta_t.assign(n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      nf.zeta[i] = z[i];
      nf.zeta_t[i] = (z[i] - f.zeta[i]) / dt;
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (!(nf.zeta[i] + g_.theta[i] > 0.0)) {
        out.events.push_back({EventKind::TemperatureNegative, nf.clock,
                              "zeta + theta_bar <= 0 at x = " + std::to_string(g_.x[i])});
        return false;
      }
    }
    return true;
  }

  const LagrangianGrid& g_;
  Regime regime_;
  ExpansionParams params_;
  SolverSpec spec_;
  LinearClockState clock_state_;
};

}  // namespace

EvolutionRun evolve_self_similar(const LagrangianGrid& grid, const ExpansionParams& params,
                                 const InitialData& init, double s_end, const SolverSpec& spec,
                                 const Observer& observer) {
  if (grid.thermo) throw Error(ErrorCode::InvalidParams, "self-similar runs need an isentropic grid");
  if (params.classification != ExpansionClass::SelfSimilar) {
    throw Error(ErrorCode::WrongClassification, "evolve_self_similar needs SelfSimilar parameters");
  }
  return Evolver(grid, Regime::SelfSimilar, params, spec).run(init, s_end, observer);
}

EvolutionRun evolve_linear_isentropic(const LagrangianGrid& grid, const ExpansionParams& params,
                                      const InitialData& init, double tau_end,
                                      const SolverSpec& spec, const Observer& observer) {
  if (grid.thermo) throw Error(ErrorCode::InvalidParams, "linear isentropic runs need an isentropic grid");
  if (params.classification != ExpansionClass::Linear &&
      params.classification != ExpansionClass::PositiveDelta) {
    throw Error(ErrorCode::WrongClassification,
                "evolve_linear_isentropic needs an expanding (Linear or PositiveDelta) branch");
  }
  return Evolver(grid, Regime::LinearIsentropic, params, spec).run(init, tau_end, observer);
}

EvolutionRun evolve_linear_thermo(const LagrangianGrid& grid, const ExpansionParams& params,
                                  const InitialData& init, double tau_end,
                                  const SolverSpec& spec, const Observer& observer) {
  if (!grid.thermo) throw Error(ErrorCode::InvalidParams, "thermo runs need a thermo grid");
  if (!thermo_expansion_gate(grid.K, grid.c_nu)) {
    throw Error(ErrorCode::InvalidParams, "3K - c_nu = 0 is required for expanding solutions");
  }
  if (params.delta != 0.0 || !(params.a1 > 0.0)) {
    throw Error(ErrorCode::InvalidParams, "thermo runs use alpha = a0 + a1 t with a1 > 0");
  }
  return Evolver(grid, Regime::LinearThermo, params, spec).run(init, tau_end, observer);
}

SecondDerivatives initial_second_derivatives(const LagrangianGrid& grid, Regime regime,
                                             const ExpansionParams& params,
                                             const InitialData& init, double mu,
                                             WeightMode mode) {
  const bool thermo = regime == Regime::LinearThermo;
  if (thermo != grid.thermo) {
    throw Error(ErrorCode::InvalidParams, "regime and grid model disagree");
  }
  check_init(grid, init, thermo);
  Geometry geo;
  std::string why;
  if (!build_geometry(grid, init.theta0, mu, geo, &why)) {
    throw Error(ErrorCode::JacobianDegenerate, why);
  }
  const std::size_t n = grid.size();
  const std::vector<double> zeta = thermo ? zeta_or_zero(grid, init) : std::vector<double>{};
  const ClockCoefficients c = clock_coefficients(regime, params, 0.0);
  const std::vector<double> q = ratio(init.theta1, geo.psi);
  const std::vector<double> force = pressure_force(grid, geo, zeta);
  const std::vector<double> visc = apply_viscous(grid, geo, q);
  const double dgrav = gravity_delta(regime, params);

  SecondDerivatives out;
  out.theta2.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = geo.psi[i];
    double weight = grid.m4[i];
    if (mode == WeightMode::Pointwise) {
      // nodal x^4 rho_bar times the dual-cell width; vanishes at R0
      if (grid.rho[i] <= 0.0) {
        throw Error(ErrorCode::DegenerateWeight,
                    "pointwise identity requested at the vacuum node x = " +
                        std::to_string(grid.x[i]));
      }
      if (i > 0) {
        const double x2 = grid.x[i] * grid.x[i];
        const double width = i + 1 == n ? 0.5 * grid.dx : grid.dx;
        weight = x2 * x2 * grid.rho[i] * width;
      }
    }
    const double mass = weight * p * p;
    const double grav = dgrav * (p * p - 1.0 / p) * weight;
    const double qs = (c.c_visc * visc[i] - grav - force[i]) / (c.c_mass * mass) - q[i] * q[i] -
                      (c.c_damp / c.c_mass) * q[i];
    out.theta2[i] = p * (qs + q[i] * q[i]);
  }

  if (thermo) {
    out.zeta1.assign(n, 0.0);
    const std::vector<double> w = work_term(grid, geo, q);
    const std::vector<double> rhs = temperature_explicit(grid, geo, q, c.alpha);
    const std::vector<double> a = conductivity(grid, geo);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double lo = i == 0 ? 0.0 : a[i - 1] * grid.xh[i - 1] * grid.xh[i - 1] *
                                           (zeta[i] - zeta[i - 1]) / grid.dx;
      const double hi = a[i] * grid.xh[i] * grid.xh[i] * (zeta[i + 1] - zeta[i]) / grid.dx;
      const double num = -grid.K * w[i] * (zeta[i] + grid.theta[i]) +
                         c.alpha * c.alpha * (hi - lo) + rhs[i];
      out.zeta1[i] = num / (3.0 * grid.K * grid.m2[i]);
    }
  }
  return out;
}

EulerianSnapshot reconstruct_eulerian(const PerturbationField& field, const LagrangianGrid& grid,
                                      const ExpansionParams& params) {
  Geometry geo;
  std::string why;
  if (!build_geometry(grid, field.theta, 1.0, geo, &why)) {
    throw Error(ErrorCode::JacobianDegenerate, why);
  }
  const ClockCoefficients c = clock_coefficients(field.regime, params, field.clock);
  const std::size_t n = grid.size();
  EulerianSnapshot snap;
  snap.alpha = c.alpha;
  switch (field.regime) {
    case Regime::SelfSimilar:
      snap.t = (std::pow(c.alpha, 1.5) - std::pow(params.a0, 1.5)) /
               (1.5 * std::sqrt(params.a0) * params.a1);
      break;
    case Regime::LinearIsentropic:
    case Regime::LinearThermo:
      if (params.delta == 0.0) {
        snap.t = linear_clock_inverse(params.a0, params.a1, field.clock);
      } else {
        // t = int alpha dtau, trapezoid on a fine tau grid
        LinearClockState st(params);
        const int m = 2000;
        double t = 0.0, prev = params.a0;
        for (int k = 1; k <= m; ++k) {
          const double a = st.at(field.clock * k / m).alpha;
          t += 0.5 * (a + prev) * field.clock / m;
          prev = a;
        }
        snap.t = t;
      }
      break;
  }
  snap.x = grid.x;
  snap.r.resize(n);
  snap.r_x.resize(n);
  snap.rho.resize(n);
  snap.u.resize(n);
  std::vector<double> xpt(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = geo.psi[i];
    const double lam = geo.lam[i];
    snap.r[i] = c.alpha * grid.x[i] * p;
    snap.r_x[i] = c.alpha * lam;
    snap.rho[i] = grid.rho[i] / (c.alpha * c.alpha * c.alpha * p * p * lam);
    const double ht = field.theta_t[i] / c.time_scale;
    snap.u[i] = c.alpha_dot * grid.x[i] * p + c.alpha * grid.x[i] * ht;
    xpt[i] = grid.x[i] * ht;
  }
  const std::vector<double> dxpt = detail::diff1(xpt, grid.dx);
  snap.u_x.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    snap.u_x[i] = c.alpha_dot * geo.lam[i] + c.alpha * (i == 0 ? field.theta_t[0] / c.time_scale
                                                                : dxpt[i]);
  }
  if (field.regime == Regime::LinearThermo) {
    snap.theta_abs.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double z = field.zeta.empty() ? 0.0 : field.zeta[i];
      snap.theta_abs[i] = (z + grid.theta[i]) / c.alpha;
    }
  }
  snap.R = snap.r.back();
  return snap;
}

double mass_conservation_error(const EulerianSnapshot& snap, const ProfileSampler& profile,
                               double total_mass) {
  const std::size_t n = snap.x.size();
  double cumulative = 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double x0 = snap.x[i], x1 = snap.x[i + 1];
    const double h = x1 - x0;
    const double r0 = snap.r[i], r1 = snap.r[i + 1];
    const double d0 = snap.r_x[i] * h, d1 = snap.r_x[i + 1] * h;
    if (!(r1 > r0)) throw Error(ErrorCode::JacobianDegenerate, "r is not increasing");
    // cubic Hermite r(x0 + h t)
    auto H = [&](double t) {
      const double t2 = t * t, t3 = t2 * t;
      return (2 * t3 - 3 * t2 + 1) * r0 + (t3 - 2 * t2 + t) * d0 + (-2 * t3 + 3 * t2) * r1 +
             (t3 - t2) * d1;
    };
    auto dH = [&](double t) {
      const double t2 = t * t;
      return (6 * t2 - 6 * t) * r0 + (3 * t2 - 4 * t + 1) * d0 + (-6 * t2 + 6 * t) * r1 +
             (3 * t2 - 2 * t) * d1;
    };
    double cell = 0.0;
    for (std::size_t k = 0; k < kGaussNodes.size(); ++k) {
      const double rg = 0.5 * (r0 + r1) + 0.5 * (r1 - r0) * kGaussNodes[k];
      double t = (rg - r0) / (r1 - r0);
      for (int it = 0; it < 50; ++it) {
        const double step = (H(t) - rg) / dH(t);
        t = std::clamp(t - step, 0.0, 1.0);
        if (std::abs(step) < 1e-15) break;
      }
      const double xg = x0 + h * t;
      const double rx = dH(t) / h;
      const double rho_bar = profile(xg).rho;
      // s^2 rho(s) at s = r(xg), with rho = x^2 rho_bar/(r^2 r_x)
      const double integrand = xg * xg * std::max(rho_bar, 0.0) / rx;
      cell += 0.5 * (r1 - r0) * kGaussWeights[k] * integrand;
    }
    cumulative += cell;
    const double expected = profile(x1).mass;
    worst = std::max(worst, std::abs(cumulative - expected));
  }
  return worst / total_mass;
}

}  // namespace starlab
