#pragma once

// Thin adaptive-step driver over Boost.Odeint's Dormand-Prince 5(4) pair.
// Adds a state-validity guard (rejected steps shrink), clipping to a target
// time, and single fixed-size trial steps for event polishing.

#include <array>
#include <cmath>
#include <functional>
#include <limits>

#include <boost/numeric/odeint.hpp>

#include "starlab/error.hpp"

namespace starlab::detail {

template <std::size_t N>
class Ode {
 public:
  using State = std::array<double, N>;
  using Rhs = std::function<void(const State&, State&, double)>;
  using Valid = std::function<bool(const State&)>;

  Ode(Rhs rhs, double t0, const State& x0, double rtol, double atol, double h0,
      Valid valid = {})
      : rhs_(std::move(rhs)),
        valid_(std::move(valid)),
        ctrl_(boost::numeric::odeint::make_controlled(atol, rtol, Stepper())),
        t_(t0),
        x_(x0),
        dt_(h0) {}

  double t() const { return t_; }
  const State& x() const { return x_; }
  double dt() const { return dt_; }
  void set_max_step(double h) { max_step_ = h; }
  std::size_t steps() const { return steps_; }

  // Takes one accepted step that does not pass t_limit.
  void step(double t_limit) {
    auto sys = [this](const State& x, State& dxdt, double t) { rhs_(x, dxdt, t); };
    const double floor = 1e-15 * std::max(1.0, std::abs(t_));
    for (int attempt = 0; attempt < 10000; ++attempt) {
      double h = std::min({dt_, t_limit - t_, max_step_});
      const bool clipped = h < dt_ || h >= t_limit - t_;
      if (h <= 0.0) return;
      if (h < floor && !clipped) {
        throw Error(ErrorCode::StepFailure, "step size underflow at t = " + std::to_string(t_));
      }
      State x = x_;
      double t = t_;
      double h_io = h;
      auto res = ctrl_.try_step(sys, x, t, h_io);
      if (res != boost::numeric::odeint::success) {
        dt_ = h_io;
        continue;
      }
      if (!finite(x) || (valid_ && !valid_(x))) {
        ctrl_.reset();
        dt_ = 0.5 * h;
        continue;
      }
      x_ = x;
      t_ = (t_limit - t < 1e-14 * std::max(1.0, std::abs(t_limit))) ? t_limit : t;
      if (!clipped) dt_ = h_io;
      ++steps_;
      return;
    }
    throw Error(ErrorCode::StepFailure, "too many rejected steps at t = " + std::to_string(t_));
  }

  void advance_to(double t_target) {
    while (t_ < t_target) step(t_target);
  }

  // One unadapted Dormand-Prince step of size h from the current state.
  State trial(double h) const {
    auto sys = [this](const State& x, State& dxdt, double t) { rhs_(x, dxdt, t); };
    Stepper st;
    State out{};
    st.do_step(sys, x_, t_, out, h);
    return out;
  }

  // Replaces the state (e.g. after event polishing).
  void reset_to(double t, const State& x) {
    t_ = t;
    x_ = x;
    ctrl_.reset();
  }

  // Newton iteration on the step size h so that g(trial(h)) = 0, starting
  // from the current state. dg returns the time derivative of g.
  template <class G, class DG>
  double polish_root(G g, DG dg, double h_guess, double tol, State* out) const {
    double h = h_guess;
    State y = trial(h);
    for (int it = 0; it < 60; ++it) {
      const double gv = g(y);
      if (std::abs(gv) <= tol) break;
      State dy{};
      rhs_(y, dy, t_ + h);
      const double slope = dg(y, dy);
      if (slope == 0.0 || !std::isfinite(slope)) break;
      h -= gv / slope;
      y = trial(h);
    }
    if (out) *out = y;
    return h;
  }

 private:
  using Stepper = boost::numeric::odeint::runge_kutta_dopri5<State>;
  using Controlled = decltype(boost::numeric::odeint::make_controlled(1.0, 1.0, Stepper()));

  static bool finite(const State& x) {
    for (double v : x)
      if (!std::isfinite(v)) return false;
    return true;
  }

  Rhs rhs_;
  Valid valid_;
  Controlled ctrl_;
  double t_;
  State x_;
  double dt_;
  double max_step_ = std::numeric_limits<double>::infinity();
  std::size_t steps_ = 0;
};

}  // namespace starlab::detail
