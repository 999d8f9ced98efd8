#include "starlab/homogeneous.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "ode.hpp"
#include "starlab/error.hpp"

namespace starlab {
namespace {

void require_domain(double phi) {
  if (!(1.0 + phi > 0.0)) {
    throw Error(ErrorCode::DomainViolation, "1 + phi must be positive, got phi = " +
                                                std::to_string(phi));
  }
}

}  // namespace

double PhaseState::b() const { return std::sqrt(2.0 * std::abs(delta)); }

std::string_view to_string(PhaseFate f) {
  switch (f) {
    case PhaseFate::Stationary: return "Stationary";
    case PhaseFate::OnCurve: return "OnCurve";
    case PhaseFate::Expand: return "Expand";
    case PhaseFate::Collapse: return "Collapse";
  }
  return "Unknown";
}

std::pair<double, double> phase_rhs(const PhaseState& st) {
  require_domain(st.phi);
  const double psi = 1.0 + st.phi;
  return {st.phi_s, -0.5 * st.b() * st.phi_s - std::abs(st.delta) * (1.0 / (psi * psi) - psi)};
}

double curve_phi_s(double phi, double delta) {
  require_domain(phi);
  const double b = std::sqrt(2.0 * std::abs(delta));
  const double psi = 1.0 + phi;
  return -b * psi + b / std::sqrt(psi);
}

double energy_homogeneous(const PhaseState& st) {
  require_domain(st.phi);
  const double psi = 1.0 + st.phi;
  const double v = st.phi_s + st.b() * psi;
  return 0.5 * v * v + st.delta / psi;
}

double phase_bracket(const PhaseState& st) {
  require_domain(st.phi);
  const double psi = 1.0 + st.phi;
  return st.phi_s + st.b() * (psi - 1.0 / std::sqrt(psi));
}

double phase_bracket_identity_residual(const PhaseState& st) {
  const auto [dphi, dphis] = phase_rhs(st);
  const double psi = 1.0 + st.phi;
  const double b = st.b();
  const double dB = dphis + b * (1.0 + 0.5 * std::pow(psi, -1.5)) * dphi;
  return dB - 0.5 * b * (1.0 + std::pow(psi, -1.5)) * phase_bracket(st);
}

double PhaseTrajectory::energy(std::size_t i) const {
  return energy_homogeneous({phi[i], phi_s[i], delta});
}

double PhaseTrajectory::curve_distance(std::size_t i) const {
  return std::abs(phi_s[i] - curve_phi_s(phi[i], delta));
}

PhaseTrajectory integrate_phase(const PhaseState& initial, double s_end, const PhaseDtSpec& dt) {
  require_domain(initial.phi);
  if (!(initial.delta < 0.0)) {
    throw Error(ErrorCode::InvalidParams, "the phase plane requires delta < 0");
  }
  PhaseTrajectory tr;
  tr.delta = initial.delta;
  auto record = [&](double s, double p, double ps) {
    tr.s.push_back(s);
    tr.phi.push_back(p);
    tr.phi_s.push_back(ps);
    tr.max_curve_distance = std::max(tr.max_curve_distance, tr.curve_distance(tr.s.size() - 1));
  };
  record(0.0, initial.phi, initial.phi_s);

  if (initial.phi == 0.0 && initial.phi_s == 0.0) {
    record(s_end, 0.0, 0.0);
    tr.fate = PhaseFate::Stationary;
    return tr;
  }

  using S = std::array<double, 2>;
  const double delta = initial.delta;
  const double bb = std::sqrt(2.0 * std::abs(delta));
  // NaN outside the domain makes the driver reject and shrink the step
  auto rhs = [delta, bb](const S& x, S& d, double) {
    const double psi = 1.0 + x[0];
    if (!(psi > 0.0)) {
      d.fill(std::numeric_limits<double>::quiet_NaN());
      return;
    }
    d[0] = x[1];
    d[1] = -0.5 * bb * x[1] - std::abs(delta) * (1.0 / (psi * psi) - psi);
  };
  const double floor_phi = -1.0 + dt.collapse_floor;
  detail::Ode<2> ode(rhs, 0.0, S{initial.phi, initial.phi_s}, dt.rtol, dt.atol,
                     std::min(1e-3, dt.max_step),
                     [floor_phi](const S& x) { return x[0] > -1.0 + 0.5 * (floor_phi + 1.0); });
  ode.set_max_step(dt.max_step);

  const double B0 = phase_bracket(initial);
  const bool on_curve = std::abs(B0) <= 1e-14 * (1.0 + std::abs(initial.phi_s));

  while (ode.t() < s_end) {
    const double s_prev = ode.t();
    const S prev = ode.x();
    if (prev[1] < 0.0) {
      // approach to the floor: cap steps by the predicted distance
      const double dist = (prev[0] - floor_phi) / -prev[1];
      ode.set_max_step(std::min(dt.max_step, std::max(0.25 * dist, 1e-12)));
    } else {
      ode.set_max_step(dt.max_step);
    }
    ode.step(s_end);
    const S cur = ode.x();
    if (!tr.first_escape_s && std::abs(cur[0]) > dt.escape) {
      const double target = cur[0] > 0.0 ? dt.escape : -dt.escape;
      detail::Ode<2> probe(rhs, s_prev, prev, dt.rtol, dt.atol, 1e-3);
      const double h = probe.polish_root([target](const S& x) { return x[0] - target; },
                                         [](const S&, const S& d) { return d[0]; },
                                         (target - prev[0]) / (prev[1] != 0.0 ? prev[1] : 1.0),
                                         1e-13, nullptr);
      tr.first_escape_s = s_prev + h;
    }
    if (cur[0] <= floor_phi) {
      ode.reset_to(s_prev, prev);
      S hit{};
      const double h = ode.polish_root([floor_phi](const S& x) { return x[0] - floor_phi; },
                                       [](const S&, const S& d) { return d[0]; },
                                       (floor_phi - prev[0]) / prev[1], 1e-14, &hit);
      record(s_prev + h, hit[0], hit[1]);
      tr.reached_floor = true;
      break;
    }
    record(ode.t(), cur[0], cur[1]);
    if (cur[0] > dt.phi_cap) break;
  }

  const double phi_end = tr.phi.back();
  if (on_curve && tr.max_curve_distance <= dt.curve_tol) {
    tr.fate = PhaseFate::OnCurve;
  } else if (tr.first_escape_s) {
    tr.fate = phi_end > 0.0 ? PhaseFate::Expand : PhaseFate::Collapse;
  } else {
    const double Bend = phase_bracket({phi_end, tr.phi_s.back(), delta});
    tr.fate = Bend > 0.0 ? PhaseFate::Expand : PhaseFate::Collapse;
  }
  return tr;
}

}  // namespace starlab
