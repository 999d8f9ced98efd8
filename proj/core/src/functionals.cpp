#include "starlab/functionals.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <Eigen/Dense>

#include "grid_ops.hpp"
#include "starlab/error.hpp"

namespace starlab {

using detail::diff1;
using detail::diff2;
using detail::trapezoid;

namespace {

double grid_dx(const std::vector<double>& x) {
  if (x.size() < 2) throw Error(ErrorCode::InvalidParams, "field needs at least two nodes");
  return x[1] - x[0];
}

double sup_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double a : v) m = std::max(m, std::abs(a));
  return m;
}

std::vector<double> times_x(const std::vector<double>& x, const std::vector<double>& f) {
  std::vector<double> r(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) r[i] = x[i] * f[i];
  return r;
}

}  // namespace

PhysicalEnergy physical_energy(const EulerianSnapshot& snap, const LagrangianGrid& grid,
                               double mu) {
  const std::size_t n = grid.size();
  if (snap.r.size() != n) throw Error(ErrorCode::InvalidParams, "snapshot does not match grid");
  const double a = snap.alpha;
  // psi = r/(alpha x) and v = u/x at nodes, with their center limits
  std::vector<double> psi(n), v(n), zeta(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0) {
      psi[i] = snap.r_x[0] / a;
      v[i] = snap.u_x[0];
    } else {
      psi[i] = snap.r[i] / (a * grid.x[i]);
      v[i] = snap.u[i] / grid.x[i];
    }
    if (grid.thermo && !snap.theta_abs.empty()) zeta[i] = a * snap.theta_abs[i] - grid.theta[i];
  }
  PhysicalEnergy e;
  const std::size_t q = LagrangianGrid::gauss_order;
  for (std::size_t i = 0; i < grid.cells; ++i) {
    const double dpsi = (psi[i + 1] - psi[i]) / grid.dx;
    const double dv = (v[i + 1] - v[i]) / grid.dx;
    const double dz = (zeta[i + 1] - zeta[i]) / grid.dx;
    for (std::size_t k = 0; k < q; ++k) {
      const std::size_t j = i * q + k;
      const double x = grid.gx[j];
      const double w = grid.gw[j];
      const double rho_bar = grid.grho[j];
      const double t = x - grid.x[i];
      const double p = psi[i] + dpsi * t;
      const double vv = v[i] + dv * t;
      const double lam = p + x * dpsi;
      const double r = a * x * p;
      const double r_x = a * lam;
      const double u = x * vv;
      const double u_x = vv + x * dv;
      const double rho = rho_bar / (a * a * a * p * p * lam);
      e.kinetic += 0.5 * w * x * x * rho_bar * u * u;
      if (grid.thermo) {
        const double theta = (zeta[i] + dz * t + grid.gtheta[j]) / a;
        e.internal += grid.c_nu * w * x * x * rho_bar * theta;
      } else {
        e.internal += 3.0 * w * x * x * rho_bar * std::cbrt(rho);
      }
      e.gravity += w * x * rho_bar * grid.gmass[j] / (a * p);
      const double shear = r * u_x / r_x - u;
      e.D += (4.0 / 3.0) * mu * w * shear * shear * r_x;
    }
  }
  e.E = e.kinetic + e.internal - e.gravity;
  if (grid.thermo && !snap.theta_abs.empty()) {
    const std::vector<double> th_x = diff1(snap.theta_abs, grid.dx);
    e.boundary_flux = snap.R * snap.R * th_x.back() / snap.r_x.back();
    double mass = 0.0;
    for (double m : grid.m2) mass += m;
    e.heat_generation = grid.epsilon * mass;
  }
  return e;
}

PerturbationEnergy perturbation_energy_ss(const PerturbationField& field,
                                          const LagrangianGrid& grid,
                                          const ExpansionParams& params, double mu) {
  if (grid.thermo) throw Error(ErrorCode::InvalidParams, "self-similar energy needs an isentropic grid");
  const std::size_t n = grid.size();
  if (field.theta.size() != n || field.theta_t.size() != n) {
    throw Error(ErrorCode::InvalidParams, "field does not match grid");
  }
  const double b = params.b();
  const double delta = params.delta;
  const double abar = params.a0 * std::exp(b * field.clock);
  std::vector<double> psi(n), q(n);
  for (std::size_t i = 0; i < n; ++i) {
    psi[i] = 1.0 + field.theta[i];
    if (!(psi[i] > 0.0)) throw Error(ErrorCode::DomainViolation, "1 + phi <= 0");
    q[i] = field.theta_t[i] / psi[i];
  }
  double kin = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = psi[i];
    const double ps = field.theta_t[i];
    kin += grid.m4[i] * (0.5 * ps * ps + b * p * ps - delta * p * p + delta / p);
  }
  double internal = 0.0, diss = 0.0;
  for (std::size_t i = 0; i < grid.cells; ++i) {
    const double ph = 0.5 * (psi[i] + psi[i + 1]);
    const double lam = (grid.x[i + 1] * psi[i + 1] - grid.x[i] * psi[i]) / grid.dx;
    if (!(lam > 0.0)) throw Error(ErrorCode::DomainViolation, "1 + phi + x phi_x <= 0");
    internal += grid.e4_h[i] * (3.0 / std::cbrt(ph * ph * lam) - 3.0 / ph + (lam - ph) / (ph * ph));
    const double x2 = grid.xh[i] * grid.xh[i];
    const double kappa = (4.0 / 3.0) * mu * x2 * x2 * ph * ph * ph * ph / lam;
    const double dq = q[i + 1] - q[i];
    diss += kappa * dq * dq / grid.dx;
  }
  return {(kin + internal) / abar, diss};
}

RelativeEntropy relative_entropy(const std::vector<double>& x, const std::vector<double>& h) {
  const double dx = grid_dx(x);
  const std::vector<double> hx = diff1(h, dx);
  const std::vector<double> hxx = diff2(h, dx);
  RelativeEntropy out;
  out.H.resize(h.size());
  out.H_x.resize(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double p = 1.0 + h[i];
    const double lam = p + x[i] * hx[i];
    if (!(p > 0.0) || !(lam > 0.0)) {
      throw Error(ErrorCode::DomainViolation, "relative entropy needs 1 + h > 0 and 1 + h + x h_x > 0");
    }
    out.H[i] = std::log(p * p * lam);
    out.H_x[i] = 2.0 * hx[i] / p + (2.0 * hx[i] + x[i] * hxx[i]) / lam;
  }
  return out;
}

FrakACheck frak_a_check(const std::function<double(double)>& h_x,
                        const std::function<double(double)>& h_xx, double R) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  FrakACheck c;
  c.A = GK::integrate([&](double x) {
    const double v = 4.0 * h_x(x) + x * h_xx(x);
    return v * v;
  }, 0.0, R, 15, 1e-14);
  c.lower = GK::integrate([&](double x) {
    const double a = h_x(x), b = h_xx(x);
    return 12.0 * a * a + x * x * b * b;
  }, 0.0, R, 15, 1e-14);
  const double hr = h_x(R);
  c.boundary = 4.0 * R * hr * hr;
  return c;
}

double amplitude(const PerturbationField& f) {
  const std::size_t n = f.x.size();
  if (n < 3) return 0.0;
  const double dx = grid_dx(f.x);
  double w = std::max(sup_abs(f.theta), sup_abs(f.theta_t));
  w = std::max(w, sup_abs(times_x(f.x, diff1(f.theta, dx))));
  w = std::max(w, sup_abs(times_x(f.x, diff1(f.theta_t, dx))));
  if (!f.zeta.empty()) {
    const double R0 = f.x.back();
    for (std::size_t i = 0; i + 1 < n; ++i) w = std::max(w, std::abs(f.zeta[i] / (R0 - f.x[i])));
    // zeta/sigma -> -zeta_x at R0, one-sided with zeta(R0) = 0
    const double slope = (3.0 * f.zeta[n - 1] - 4.0 * f.zeta[n - 2] + f.zeta[n - 3]) / (2.0 * dx);
    w = std::max(w, std::abs(slope));
  }
  return w;
}

void scale_to_amplitude(InitialData& init, const LagrangianGrid& grid, double omega) {
  PerturbationField f;
  f.x = grid.x;
  f.theta = init.theta0;
  f.theta_t = init.theta1;
  if (grid.thermo) {
    f.zeta = init.zeta0.empty() ? std::vector<double>(grid.size(), 0.0) : init.zeta0;
    f.zeta.back() = 0.0;
  }
  const double w = amplitude(f);
  if (!(w > 0.0)) return;
  const double k = omega / w;
  for (auto* v : {&init.theta0, &init.theta1, &init.zeta0})
    for (double& e : *v) e *= k;
}

InitialData negative_energy_data(const LagrangianGrid& grid, const ExpansionParams& params,
                                 const std::vector<double>& phi0, double omega, double c) {
  if (!(params.delta < 0.0)) throw Error(ErrorCode::InvalidParams, "negative-energy data needs delta < 0");
  if (phi0.size() != grid.size()) throw Error(ErrorCode::InvalidParams, "shape does not match grid");
  const double b = params.b();
  InitialData d;
  d.theta0 = phi0;
  d.theta1.resize(phi0.size());
  for (std::size_t i = 0; i < phi0.size(); ++i) {
    d.theta1[i] = -(3.0 * std::abs(params.delta) / b) * phi0[i] - c * b;
  }
  scale_to_amplitude(d, grid, omega);
  return d;
}

std::vector<double> viscous_heating(const PerturbationField& f, double mu) {
  const std::size_t n = f.x.size();
  if (n < 3) return std::vector<double>(n, 0.0);
  const double dx = grid_dx(f.x);
  const std::vector<double> hx = diff1(f.theta, dx);
  const std::vector<double> htx = diff1(f.theta_t, dx);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = 1.0 + f.theta[i];
    const double v = (f.theta_t[i] + f.x[i] * htx[i]) / (p + f.x[i] * hx[i]) - f.theta_t[i] / p;
    out[i] = (4.0 / 3.0) * mu * v * v;
  }
  return out;
}

HardyResult hardy_check(double k, const std::function<double(double)>& g,
                        const std::function<double(double)>& g_prime) {
  if (std::abs(k - 1.0) < 1e-14) throw Error(ErrorCode::KEqualsOne, "the Hardy inequality excludes k = 1");
  using GL = boost::math::quadrature::gauss<double, 20>;
  // g(s) - g(0) as an integral of g', free of cancellation near 0
  auto increment = [&](double s) {
    return GL::integrate([&](double t) { return g_prime(t); }, 0.0, s);
  };
  auto graded = [](const std::function<double(double)>& f) {
    double acc = 0.0;
    double hi = 1.0;
    for (int j = 0; j < 120; ++j) {
      const double lo = 0.5 * hi;
      acc += GL::integrate(f, lo, hi);
      hi = lo;
    }
    return acc;
  };
  HardyResult r;
  if (k > 1.0) {
    r.lhs = graded([&](double s) { const double v = g(s); return std::pow(s, k - 2.0) * v * v; });
    r.rhs = graded([&](double s) {
      const double v = g(s), d = g_prime(s);
      return std::pow(s, k) * (v * v + d * d);
    });
  } else {
    r.lhs = graded([&](double s) { const double v = increment(s); return std::pow(s, k - 2.0) * v * v; });
    r.rhs = graded([&](double s) { const double d = g_prime(s); return std::pow(s, k) * d * d; });
  }
  r.ratio = r.rhs > 0.0 ? r.lhs / r.rhs : 0.0;
  return r;
}

double hardy_span_constant(double k, const std::vector<std::vector<double>>& coefficients) {
  if (std::abs(k - 1.0) < 1e-14) throw Error(ErrorCode::KEqualsOne, "the Hardy inequality excludes k = 1");
  std::size_t deg = 0;
  for (const auto& c : coefficients) deg = std::max(deg, c.size());
  if (deg == 0) return 0.0;
  const bool shifted = k < 1.0;  // g - g(0): the constant term drops out
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(coefficients.size()),
                                            static_cast<Eigen::Index>(deg));
  for (std::size_t r = 0; r < coefficients.size(); ++r)
    for (std::size_t j = 0; j < coefficients[r].size(); ++j)
      if (!(shifted && j == 0)) C(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = coefficients[r][j];

  // monomial moments int_0^1 s^p; infinite for p <= -1
  auto moment = [](double p) { return p > -1.0 ? 1.0 / (p + 1.0) : HUGE_VAL; };
  const auto n = static_cast<Eigen::Index>(deg);
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n), R = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double ij = static_cast<double>(i * j);
      const double p = static_cast<double>(i + j);
      if (!(shifted && (i == 0 || j == 0))) L(i, j) = moment(k - 2.0 + p);
      double r = ij > 0.0 ? ij * moment(k - 2.0 + p) : 0.0;
      if (!shifted) r += moment(k + p);
      R(i, j) = r;
    }
  }
  // restrict both forms to the row space of C
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-12 * sv(0)) ++rank;
  if (rank == 0) return 0.0;
  const Eigen::MatrixXd V = svd.matrixV().leftCols(rank);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (V.row(i).norm() > 1e-12 && (!std::isfinite(L(i, i)) || !std::isfinite(R(i, i)))) {
      throw Error(ErrorCode::OutOfRange, "the family contains members with a divergent Hardy integral");
    }
  }
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!std::isfinite(L(i, j))) L(i, j) = 0.0;
      if (!std::isfinite(R(i, j))) R(i, j) = 0.0;
    }
  const Eigen::MatrixXd Ls = V.transpose() * L * V;
  const Eigen::MatrixXd Rs = V.transpose() * R * V;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Ls, Rs);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::OutOfRange, "right-hand Hardy form is not positive on the family span");
  }
  return es.eigenvalues().maxCoeff();
}

std::vector<std::string> weight_violations(const WeightSpec& w, bool thermo) {
  std::vector<std::string> v;
  if (!thermo) {
    if (!(w.a > 0.0 && w.a < 1.0)) v.emplace_back("0 < a < 1");
    return v;
  }
  if (!(w.r1 > -1.0 && w.r1 < 1.0)) v.emplace_back("-1 < r1 < 1");
  if (!(w.r1 - 3.0 <= w.l1 && w.l1 < -2.0)) v.emplace_back("r1 - 3 <= l1 < -2");
  if (!(w.r2 <= w.r1 - 1.0)) v.emplace_back("r2 <= r1 - 1");
  if (!(w.l2 + 2.0 <= 0.0)) v.emplace_back("l2 + 2 <= 0");
  if (!(0.0 <= w.r2 - w.l2 && w.r2 - w.l2 <= 2.0)) v.emplace_back("0 <= r2 - l2 <= 2");
  if (!(w.r_frak > -3.0 && w.r_frak <= w.r2 - 1.0)) v.emplace_back("-3 < r_frak <= r2 - 1");
  if (!(w.r3 <= w.r2 - 2.0)) v.emplace_back("r3 <= r2 - 2");
  if (!(w.l2 + 2.0 >= 0.0)) v.emplace_back("l2 + 2 >= 0");
  return v;
}

double cutoff(double x, double R0) {
  const double t = (x - 0.5 * R0) / (0.25 * R0);
  if (t <= 0.0) return 1.0;
  if (t >= 1.0) return 0.0;
  return 1.0 - 3.0 * t * t + 2.0 * t * t * t;
}

double cutoff_prime(double x, double R0) {
  const double t = (x - 0.5 * R0) / (0.25 * R0);
  if (t <= 0.0 || t >= 1.0) return 0.0;
  return (-6.0 * t + 6.0 * t * t) / (0.25 * R0);
}

double EnergyReport::term(const std::string& name) const {
  for (const auto& [k, v] : ledger)
    if (k == name) return v;
  throw Error(ErrorCode::InvalidParams, "no ledger term named " + name);
}

namespace {

// Spatial derivatives shared by the ledger terms.
struct Derivs {
  std::vector<double> hx, hxx, htx, htxx, httx, zx, zxx, ztx, Gx, Gxt, chi;
};

Derivs derivatives(const PerturbationField& f, const LagrangianGrid& g) {
  Derivs d;
  const double dx = g.dx;
  d.hx = diff1(f.theta, dx);
  d.hxx = diff2(f.theta, dx);
  d.htx = diff1(f.theta_t, dx);
  d.htxx = diff2(f.theta_t, dx);
  d.httx = diff1(f.theta_tt, dx);
  if (!f.zeta.empty()) {
    d.zx = diff1(f.zeta, dx);
    d.zxx = diff2(f.zeta, dx);
    d.ztx = f.zeta_t.empty() ? std::vector<double>(f.zeta.size(), 0.0) : diff1(f.zeta_t, dx);
  }
  const std::size_t n = g.size();
  d.Gx.resize(n);
  std::vector<double> Gt(n);
  d.chi.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = g.x[i];
    const double p = 1.0 + f.theta[i];
    const double lam = p + x * d.hx[i];
    d.Gx[i] = 2.0 * d.hx[i] / p + (2.0 * d.hx[i] + x * d.hxx[i]) / lam;
    Gt[i] = 2.0 * f.theta_t[i] / p + (f.theta_t[i] + x * d.htx[i]) / lam;
    d.chi[i] = cutoff(x, g.R0);
  }
  d.Gxt = diff1(Gt, dx);
  return d;
}

// int of weight(i) * value(i) over the grid by the trapezoid rule
template <class F>
double integrate(const LagrangianGrid& g, F f) {
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) v[i] = f(i);
  return trapezoid(v, g.dx);
}

}  // namespace

LedgerAccumulator::LedgerAccumulator(const LagrangianGrid& grid, Regime regime,
                                     const ExpansionParams& params, const WeightSpec& weights,
                                     double mu)
    : grid_(grid), regime_(regime), params_(params), weights_(weights), mu_(mu), clock_(params) {
  const auto bad = weight_violations(weights, regime == Regime::LinearThermo);
  if (!bad.empty()) throw Error(ErrorCode::WeightViolation, "violated constraint: " + bad.front());
  if (regime != Regime::SelfSimilar && 0.25 * grid.R0 * 4.0 < 6.0) {
    // the cubic cut-off has chi' >= -6/R0, which must stay >= -4
    throw Error(ErrorCode::WeightViolation, "-4 <= chi' needs R0 >= 1.5");
  }
}

std::vector<std::pair<std::string, double>> LedgerAccumulator::energy_terms(
    const PerturbationField& f, double alpha) const {
  const Derivs d = derivatives(f, grid_);
  const auto& g = grid_;
  const auto& x = g.x;
  const auto& rho = g.rho;
  std::vector<std::pair<std::string, double>> t;
  auto visc = [&](std::size_t i) {
    const double v = (1.0 + f.theta[i]) * x[i] * d.htx[i] - x[i] * d.hx[i] * f.theta_t[i];
    return x[i] * x[i] * v * v;
  };
  auto x4 = [&](std::size_t i) { const double s = x[i] * x[i]; return s * s; };
  if (regime_ == Regime::LinearThermo) {
    const WeightSpec& w = weights_;
    const double a1 = params_.a1;
    const double tau = f.clock;
    auto E = [&](double k) { return std::exp(k * a1 * tau); };
    t.emplace_back("E.vel", E(1 + w.r1) * integrate(g, [&](auto i) { return x4(i) * rho[i] * f.theta_t[i] * f.theta_t[i]; }));
    t.emplace_back("E.temp", E(w.l1) * integrate(g, [&](auto i) { return x[i] * x[i] * rho[i] * f.zeta[i] * f.zeta[i]; }));
    t.emplace_back("E.mass", integrate(g, [&](auto i) { return x4(i) * rho[i] * f.theta[i] * f.theta[i]; }));
    t.emplace_back("E.grad4", integrate(g, [&](auto i) { return x4(i) * d.hx[i] * d.hx[i]; }));
    t.emplace_back("E.l2", integrate(g, [&](auto i) { return x[i] * x[i] * f.theta[i] * f.theta[i]; }));
    t.emplace_back("E.acc", E(w.r2 - 2) * integrate(g, [&](auto i) { return x4(i) * rho[i] * f.theta_tt[i] * f.theta_tt[i]; }));
    t.emplace_back("E.temp_t", E(w.l2 - 2) * integrate(g, [&](auto i) { return x[i] * x[i] * rho[i] * f.zeta_t[i] * f.zeta_t[i]; }));
    t.emplace_back("E.temp_grad", E((w.l1 + w.l2) / 2 + 1) * integrate(g, [&](auto i) { return x[i] * x[i] * d.zx[i] * d.zx[i]; }));
    t.emplace_back("E.visc", E((w.r1 + w.r2) / 2 + 1.5) * integrate(g, visc));
    t.emplace_back("E.chi", integrate(g, [&](auto i) { return d.chi[i] * (f.theta[i] * f.theta[i] + x[i] * x[i] * d.hx[i] * d.hx[i]); }));
    t.emplace_back("E.chi_vel", E(w.r2 + 2) * integrate(g, [&](auto i) { return d.chi[i] * (x[i] * x[i] * d.htx[i] * d.htx[i] + f.theta_t[i] * f.theta_t[i]); }));
    t.emplace_back("E.chi_acc", E(w.r3 - 2) * integrate(g, [&](auto i) { return d.chi[i] * x[i] * x[i] * rho[i] * f.theta_tt[i] * f.theta_tt[i]; }));
    t.emplace_back("E.grad", integrate(g, [&](auto i) { return d.hx[i] * d.hx[i]; }));
    t.emplace_back("E.hess", integrate(g, [&](auto i) { return x[i] * x[i] * d.hxx[i] * d.hxx[i]; }));
    t.emplace_back("E.temp_grad0", integrate(g, [&](auto i) { return d.zx[i] * d.zx[i]; }));
    t.emplace_back("E.grad_t", E(w.r3 + 2) * integrate(g, [&](auto i) { return d.htx[i] * d.htx[i] + x[i] * x[i] * d.htxx[i] * d.htxx[i]; }));
    t.emplace_back("E.temp_hess", integrate(g, [&](auto i) { return x[i] * x[i] * d.zxx[i] * d.zxx[i]; }));
    return t;
  }
  const double a = weights_.a;
  const double Aa = std::pow(alpha, a);
  t.emplace_back("E.vel", alpha * integrate(g, [&](auto i) { return x4(i) * rho[i] * f.theta_t[i] * f.theta_t[i]; }));
  t.emplace_back("E.vel_a", alpha * Aa * integrate(g, [&](auto i) { return x4(i) * rho[i] * f.theta_t[i] * f.theta_t[i]; }));
  t.emplace_back("E.press", integrate(g, [&](auto i) { return x4(i) * std::pow(rho[i], 4.0 / 3.0) * d.hx[i] * d.hx[i]; }));
  t.emplace_back("E.grad4", integrate(g, [&](auto i) { return x4(i) * d.hx[i] * d.hx[i]; }));
  t.emplace_back("E.mass", integrate(g, [&](auto i) { return x4(i) * rho[i] * f.theta[i] * f.theta[i]; }));
  t.emplace_back("E.acc", Aa * std::pow(alpha, -3.0) * integrate(g, [&](auto i) { return x4(i) * rho[i] * f.theta_tt[i] * f.theta_tt[i]; }));
  t.emplace_back("E.visc", alpha * Aa * integrate(g, visc));
  t.emplace_back("E.chi_vel", alpha * Aa * integrate(g, [&](auto i) { return d.chi[i] * (f.theta_t[i] * f.theta_t[i] + x[i] * x[i] * d.htx[i] * d.htx[i]); }));
  t.emplace_back("E.chi", integrate(g, [&](auto i) { return d.chi[i] * (f.theta[i] * f.theta[i] + x[i] * x[i] * d.hx[i] * d.hx[i]); }));
  t.emplace_back("E.chi_acc", Aa * std::pow(alpha, -5.0) * integrate(g, [&](auto i) { return d.chi[i] * x[i] * x[i] * rho[i] * f.theta_tt[i] * f.theta_tt[i]; }));
  t.emplace_back("E.G", integrate(g, [&](auto i) { return d.Gx[i] * d.Gx[i]; }));
  t.emplace_back("E.G_t", Aa / alpha * integrate(g, [&](auto i) { return d.Gxt[i] * d.Gxt[i]; }));
  t.emplace_back("E.grad", integrate(g, [&](auto i) { return d.hx[i] * d.hx[i]; }));
  t.emplace_back("E.hess", integrate(g, [&](auto i) { return x[i] * x[i] * d.hxx[i] * d.hxx[i]; }));
  t.emplace_back("E.grad_t", Aa / alpha * integrate(g, [&](auto i) { return d.htx[i] * d.htx[i]; }));
  t.emplace_back("E.hess_t", Aa / alpha * integrate(g, [&](auto i) { return x[i] * x[i] * d.htxx[i] * d.htxx[i]; }));
  return t;
}

std::vector<std::pair<std::string, double>> LedgerAccumulator::dissipation_rates(
    const PerturbationField& f, double alpha) const {
  const Derivs d = derivatives(f, grid_);
  const auto& g = grid_;
  const auto& x = g.x;
  const auto& rho = g.rho;
  std::vector<std::pair<std::string, double>> t;
  auto x4 = [&](std::size_t i) { const double s = x[i] * x[i]; return s * s; };
  auto visc = [&](std::size_t i) {
    const double v = (1.0 + f.theta[i]) * x[i] * d.htx[i] - x[i] * d.hx[i] * f.theta_t[i];
    return x[i] * x[i] * v * v;
  };
  auto visc_t = [&](std::size_t i) {
    const double v = (1.0 + f.theta[i]) * x[i] * d.httx[i] - x[i] * d.hx[i] * f.theta_tt[i];
    return x[i] * x[i] * v * v;
  };
  if (regime_ == Regime::LinearThermo) {
    const WeightSpec& w = weights_;
    const double a1 = params_.a1;
    const double tau = f.clock;
    auto E = [&](double k) { return std::exp(k * a1 * tau); };
    t.emplace_back("D.vel", a1 * E(1 + w.r1) * integrate(g, [&](auto i) { return x4(i) * rho[i] * f.theta_t[i] * f.theta_t[i]; }));
    t.emplace_back("D.visc", E(3 + w.r1) * integrate(g, visc));
    t.emplace_back("D.temp", a1 * E(w.l1) * integrate(g, [&](auto i) { return x[i] * x[i] * rho[i] * f.zeta[i] * f.zeta[i]; }));
    t.emplace_back("D.temp_grad", E(2 + w.l1) * integrate(g, [&](auto i) { return x[i] * x[i] * d.zx[i] * d.zx[i]; }));
    t.emplace_back("D.acc", a1 * E(w.r2 - 2) * integrate(g, [&](auto i) { return x4(i) * rho[i] * f.theta_tt[i] * f.theta_tt[i]; }));
    t.emplace_back("D.visc_t", E(w.r2) * integrate(g, visc_t));
    t.emplace_back("D.temp_t", E(w.l2) * integrate(g, [&](auto i) { return x[i] * x[i] * d.ztx[i] * d.ztx[i]; }));
    t.emplace_back("D.chi_vel", E(3 + w.r_frak) * integrate(g, [&](auto i) { return d.chi[i] * (x[i] * x[i] * d.htx[i] * d.htx[i] + f.theta_t[i] * f.theta_t[i]); }));
    t.emplace_back("D.chi_acc", E(w.r3) * integrate(g, [&](auto i) { return d.chi[i] * (x[i] * x[i] * d.httx[i] * d.httx[i] + f.theta_tt[i] * f.theta_tt[i]); }));
    return t;
  }
  const double a = weights_.a;
  const double Aa = std::pow(alpha, a);
  t.emplace_back("D.vel", (alpha + alpha * Aa) * integrate(g, [&](auto i) { return x4(i) * rho[i] * f.theta_t[i] * f.theta_t[i]; }));
  t.emplace_back("D.visc", (alpha * alpha * alpha) * (1.0 + Aa) * integrate(g, visc));
  t.emplace_back("D.acc", Aa * std::pow(alpha, -3.0) * integrate(g, [&](auto i) { return x4(i) * rho[i] * f.theta_tt[i] * f.theta_tt[i]; }));
  t.emplace_back("D.visc_t", Aa / alpha * integrate(g, visc_t));
  t.emplace_back("D.chi_vel", alpha * Aa * integrate(g, [&](auto i) { return d.chi[i] * (f.theta_t[i] * f.theta_t[i] + x[i] * x[i] * d.htx[i] * d.htx[i]); }));
  t.emplace_back("D.chi_acc", Aa * std::pow(alpha, -5.0) * integrate(g, [&](auto i) { return d.chi[i] * x[i] * x[i] * rho[i] * f.theta_tt[i] * f.theta_tt[i]; }));
  t.emplace_back("D.chi_acc2", Aa * std::pow(alpha, -3.0) * integrate(g, [&](auto i) { return d.chi[i] * (f.theta_tt[i] * f.theta_tt[i] + x[i] * x[i] * d.httx[i] * d.httx[i]); }));
  t.emplace_back("D.G", std::pow(alpha, -3.0) * integrate(g, [&](auto i) { return std::pow(rho[i], 4.0 / 3.0) * d.Gx[i] * d.Gx[i]; }));
  return t;
}

double LedgerAccumulator::initial_energy(const PerturbationField& f) const {
  const Derivs d = derivatives(f, grid_);
  const auto& g = grid_;
  const auto& x = g.x;
  const auto& rho = g.rho;
  auto x4 = [&](std::size_t i) { const double s = x[i] * x[i]; return s * s; };
  double e = 0.0;
  e += integrate(g, [&](auto i) { return x4(i) * rho[i] * f.theta_t[i] * f.theta_t[i]; });
  e += integrate(g, [&](auto i) { return x4(i) * rho[i] * f.theta[i] * f.theta[i]; });
  e += integrate(g, [&](auto i) { return x4(i) * d.hx[i] * d.hx[i]; });
  e += integrate(g, [&](auto i) { return x4(i) * rho[i] * f.theta_tt[i] * f.theta_tt[i]; });
  e += integrate(g, [&](auto i) { return d.chi[i] * (f.theta[i] * f.theta[i] + x[i] * x[i] * d.hx[i] * d.hx[i]); });
  e += integrate(g, [&](auto i) { return d.chi[i] * x[i] * x[i] * rho[i] * f.theta_tt[i] * f.theta_tt[i]; });
  e += integrate(g, [&](auto i) { return d.hx[i] * d.hx[i] + x[i] * x[i] * d.hxx[i] * d.hxx[i]; });
  if (regime_ == Regime::LinearThermo) {
    e += integrate(g, [&](auto i) { return x[i] * x[i] * rho[i] * f.zeta[i] * f.zeta[i]; });
    e += integrate(g, [&](auto i) { return x[i] * x[i] * rho[i] * f.zeta_t[i] * f.zeta_t[i]; });
  } else {
    e += integrate(g, [&](auto i) { return x4(i) * std::pow(rho[i], 4.0 / 3.0) * d.hx[i] * d.hx[i]; });
  }
  return e;
}

const EnergyReport& LedgerAccumulator::observe(const PerturbationField& f) {
  if (!f.has_second_derivative()) {
    throw Error(ErrorCode::MissingDerivative, "ledger needs the second clock derivative");
  }
  if (regime_ == Regime::LinearThermo && (f.zeta.empty() || f.zeta_t.empty())) {
    throw Error(ErrorCode::MissingDerivative, "thermo ledger needs zeta and zeta_t");
  }
  EnergyReport r;
  r.clock = f.clock;
  r.omega = amplitude(f);

  if (regime_ == Regime::SelfSimilar) {
    const PerturbationEnergy pe = perturbation_energy_ss(f, grid_, params_, mu_);
    const double abar = params_.a0 * std::exp(params_.b() * f.clock);
    const double wd = std::pow(abar, 1.5) * pe.D;
    if (!started_) {
      ss_E0_ = pe.E;
      ss_integral_ = 0.0;
    } else {
      ss_integral_ += 0.5 * (wd + ss_prev_weighted_D_) * (f.clock - prev_clock_);
    }
    ss_prev_weighted_D_ = wd;
    r.E_pert = pe.E;
    r.D_pert = pe.D;
    r.E0 = ss_E0_;
    r.identity_residual = pe.E - ss_E0_ + ss_integral_;
    r.ledger = {{"E", pe.E}, {"D", pe.D}, {"int_alpha_D", ss_integral_}};
    r.energy_total = pe.E;
    r.dissipation_total = ss_integral_;
  } else {
    double alpha;
    if (regime_ == Regime::LinearThermo) {
      alpha = params_.a0 * std::exp(params_.a1 * f.clock);
    } else {
      alpha = clock_.at(f.clock).alpha;
    }
    auto energy = energy_terms(f, alpha);
    auto rates = dissipation_rates(f, alpha);
    if (!started_) {
      integrals_.assign(rates.size(), 0.0);
      report_.E0 = initial_energy(f);
    } else {
      const double dt = f.clock - prev_clock_;
      for (std::size_t k = 0; k < rates.size(); ++k) {
        integrals_[k] += 0.5 * (rates[k].second + prev_rates_[k].second) * dt;
      }
    }
    r.E0 = report_.E0;
    for (const auto& [name, v] : energy) {
      r.ledger.emplace_back(name, v);
      r.energy_total += v;
    }
    for (std::size_t k = 0; k < rates.size(); ++k) {
      r.ledger.emplace_back(rates[k].first, integrals_[k]);
      r.dissipation_total += integrals_[k];
    }
    prev_rates_ = std::move(rates);
  }
  started_ = true;
  prev_clock_ = f.clock;
  report_ = std::move(r);
  return report_;
}

std::vector<EnergyReport> total_energy_ledger(const std::vector<PerturbationField>& series,
                                              const LagrangianGrid& grid, Regime regime,
                                              const ExpansionParams& params,
                                              const WeightSpec& weights, double mu) {
  LedgerAccumulator acc(grid, regime, params, weights, mu);
  std::vector<EnergyReport> out;
  out.reserve(series.size());
  for (const auto& f : series) out.push_back(acc.observe(f));
  return out;
}

}  // namespace starlab
