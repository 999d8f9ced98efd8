#include "starlab/expansion.hpp"

#include <cmath>
#include <limits>

#include "ode.hpp"
#include "starlab/error.hpp"

namespace starlab {

std::string_view to_string(ExpansionClass c) {
  switch (c) {
    case ExpansionClass::SelfSimilar: return "SelfSimilar";
    case ExpansionClass::Linear: return "Linear";
    case ExpansionClass::Collapse: return "Collapse";
    case ExpansionClass::PositiveDelta: return "PositiveDelta";
  }
  return "Unknown";
}

double ExpansionParams::b() const { return std::sqrt(2.0 * std::abs(delta)); }

double ExpansionParams::speed_squared(double alpha) const {
  return a1 * a1 + 2.0 * delta / a0 - 2.0 * delta / alpha;
}

ExpansionParams classify_expansion(double delta, double a0, double a1) {
  if (!(a0 > 0.0) || !std::isfinite(a0) || !std::isfinite(a1) || !std::isfinite(delta)) {
    throw Error(ErrorCode::InvalidParams, "a0 must be positive and all inputs finite");
  }
  ExpansionParams p;
  p.delta = delta;
  p.a0 = a0;
  p.a1 = a1;
  p.a1_star = delta < 0.0 ? std::sqrt(2.0 * std::abs(delta) / a0) : 0.0;
  const double disc = a1 * a1 + 2.0 * delta / a0;
  if (disc >= 0.0) {
    const double r = std::sqrt(disc);
    p.beta1 = std::min(a1, r);
    p.beta2 = std::max(a1, r);
  }
  if (delta > 0.0) {
    p.classification = ExpansionClass::PositiveDelta;
  } else if (delta == 0.0) {
    // alpha = a0 + a1 t reaches zero at t = a0/|a1| when a1 < 0
    p.classification = a1 < 0.0 ? ExpansionClass::Collapse : ExpansionClass::Linear;
  } else if (std::abs(a1 - p.a1_star) <= 1e-12 * p.a1_star) {
    p.classification = ExpansionClass::SelfSimilar;
  } else if (a1 > p.a1_star) {
    p.classification = ExpansionClass::Linear;
  } else {
    p.classification = ExpansionClass::Collapse;
  }
  return p;
}

double self_similar_alpha(double a0, double a1, double t) {
  return std::pow(std::pow(a0, 1.5) + 1.5 * std::sqrt(a0) * a1 * t, 2.0 / 3.0);
}

ExpansionPath integrate_alpha(const ExpansionParams& params, double t_end, const DtSpec& dt) {
  if (!(params.a0 > 0.0)) throw Error(ErrorCode::InvalidParams, "a0 must be positive");
  // state: alpha, alpha', s, tau
  using S = std::array<double, 4>;
  const double delta = params.delta;
  auto rhs = [delta](const S& x, S& d, double) {
    d[0] = x[1];
    d[1] = delta / (x[0] * x[0]);
    d[2] = 1.0 / (x[0] * std::sqrt(x[0]));
    d[3] = 1.0 / x[0];
  };
  const double alpha_min = dt.alpha_min_fraction * params.a0;
  detail::Ode<4> ode(rhs, 0.0, S{params.a0, params.a1, 0.0, 0.0}, dt.rtol, dt.atol,
                     std::min(1e-3, dt.max_step), [alpha_min](const S& x) { return x[0] > 0.0; });
  ode.set_max_step(dt.max_step);

  ExpansionPath path;
  path.params = params;
  auto record = [&](double t, const S& x) {
    path.t.push_back(t);
    path.alpha.push_back(x[0]);
    path.alpha_prime.push_back(x[1]);
    path.s.push_back(x[2]);
    path.tau.push_back(x[3]);
  };
  record(0.0, ode.x());
  const bool collapsing = params.classification == ExpansionClass::Collapse ||
                          (params.delta == 0.0 && params.a1 < 0.0);
  while (ode.t() < t_end) {
    // near the singularity keep steps proportional to the remaining time
    if (collapsing && ode.x()[1] < 0.0) {
      const double remaining = -ode.x()[0] / ode.x()[1];
      ode.set_max_step(std::min(dt.max_step, 0.05 * remaining));
    }
    const double t_prev = ode.t();
    const S prev = ode.x();
    ode.step(t_end);
    if (ode.x()[0] <= alpha_min) {
      if (!collapsing) {
        throw Error(ErrorCode::CollapseReached,
                    "alpha reached alpha_min on a non-collapsing branch at t = " +
                        std::to_string(ode.t()));
      }
      ode.reset_to(t_prev, prev);
      S hit{};
      const double h = ode.polish_root([alpha_min](const S& x) { return x[0] - alpha_min; },
                                       [](const S&, const S& d) { return d[0]; },
                                       (alpha_min - prev[0]) / prev[1], 1e-6 * alpha_min, &hit);
      record(t_prev + h, hit);
      // alpha^{3/2} is asymptotically linear in (T - t); extrapolate it to zero
      const double a = hit[0];
      const double ap = hit[1];
      const double p = params.delta == 0.0 ? 1.0 : 1.5;
      path.T_collapse = t_prev + h - a / (p * ap);
      return path;
    }
    record(ode.t(), ode.x());
  }
  if (params.classification == ExpansionClass::Linear ||
      params.classification == ExpansionClass::PositiveDelta) {
    const double te = path.t.back();
    const double ae = path.alpha.back();
    const double ape = path.alpha_prime.back();
    const double c1 = ae - ape * te;
    if (c1 != 0.0 && te > 0.0) {
      path.fitted_c1 = c1;
      path.fitted_c2 = ape / c1;
    }
  }
  return path;
}

std::vector<double> self_similar_clock(const ExpansionPath& path) {
  if (path.params.classification != ExpansionClass::SelfSimilar) {
    throw Error(ErrorCode::WrongClassification, "self-similar clock requires a SelfSimilar path");
  }
  return path.s;
}

double linear_clock(double a0, double a1, double t) {
  if (a1 == 0.0) return t / a0;
  return std::log1p(a1 * t / a0) / a1;
}

double linear_clock_inverse(double a0, double a1, double tau) {
  if (a1 == 0.0) return a0 * tau;
  return a0 / a1 * std::expm1(a1 * tau);
}

bool thermo_expansion_gate(double K, double c_nu, double rel_tol) {
  if (!(K > 0.0) || !(c_nu > 0.0)) return false;
  return std::abs(3.0 * K - c_nu) <= rel_tol * std::max(3.0 * K, c_nu);
}

double collapse_exponent(const ExpansionPath& path) {
  if (!path.T_collapse) {
    throw Error(ErrorCode::WrongClassification, "collapse exponent requires a collapsed path");
  }
  const double T = *path.T_collapse;
  const std::size_t n = path.t.size();
  const double gap_min = T - path.t[n - 1];
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double gap = T - path.t[i];
    if (gap <= 0.0 || gap > 10.0 * gap_min) continue;
    const double lx = std::log(gap);
    const double ly = std::log(path.alpha[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++m;
  }
  if (m < 3) throw Error(ErrorCode::ToleranceNotMet, "too few samples in the final decade");
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

LinearClockState::LinearClockState(const ExpansionParams& params)
    : params_(params), alpha_(params.a0), alpha_tau_(params.a0 * params.a1) {}

LinearClockState::Value LinearClockState::at(double tau) {
  if (params_.delta == 0.0) {
    const double a = params_.a0 * std::exp(params_.a1 * tau);
    return {a, params_.a1 * a};
  }
  if (tau < tau_) {
    tau_ = 0.0;
    alpha_ = params_.a0;
    alpha_tau_ = params_.a0 * params_.a1;
  }
  if (tau > tau_) {
    using S = std::array<double, 2>;
    const double d = params_.delta;
    detail::Ode<2> ode(
        [d](const S& x, S& dx, double) {
          dx[0] = x[1];
          dx[1] = d + x[1] * x[1] / x[0];
        },
        tau_, S{alpha_, alpha_tau_}, 1e-12, 1e-14, std::min(1e-2, tau - tau_),
        [](const S& x) { return x[0] > 0.0; });
    ode.advance_to(tau);
    tau_ = tau;
    alpha_ = ode.x()[0];
    alpha_tau_ = ode.x()[1];
  }
  return {alpha_, alpha_tau_};
}

}  // namespace starlab
