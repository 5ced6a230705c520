#ifndef HAPTO_MODEL_HPP
#define HAPTO_MODEL_HPP

// One time step of
//   u_t = Lap u - chi div(u grad v) - xi div(u grad w)
//   tau v_t = Lap v - v + u
//   w_t = -v w + eta w (1 - w)
// with no-flux boundaries. Sub-step order is v -> w -> u: v by an elliptic
// solve (tau = 0) or backward Euler (tau = 1), w by its closed-form
// solution along accumulated time integrals of v, and u by implicit
// diffusion plus explicit first-order upwind taxis fluxes.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hapto/error.hpp"
#include "hapto/grid.hpp"
#include "hapto/linsolve.hpp"

namespace hapto {

enum class Mode { full, chemotaxis_only, haptotaxis_only };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::full: return "full";
    case Mode::chemotaxis_only: return "chemotaxis-only";
    case Mode::haptotaxis_only: return "haptotaxis-only";
  }
  return "full";
}

struct Params {
  double chi = 1.0;
  double xi = 0.0;
  double eta = 0.0;
  int tau = 1;
  Mode mode = Mode::full;

  void validate() const {
    if (!(chi >= 0.0) || !(xi >= 0.0) || !(eta >= 0.0))
      throw Error(ErrorCode::invalid_argument, "chi, xi and eta must be nonnegative");
    if (tau != 0 && tau != 1) throw Error(ErrorCode::invalid_argument, "tau must be 0 or 1");
    if (mode == Mode::haptotaxis_only && chi != 0.0)
      throw Error(ErrorCode::invalid_argument, "haptotaxis-only mode requires chi = 0");
  }

  bool tracks_w() const { return mode != Mode::chemotaxis_only; }
};

struct StepControl {
  double dt_max = 1e-2;
  double cfl = 0.4;
  double dt_min = 1e-9;
  double tol = 1e-10;
  int max_iter = 0;

  void validate() const {
    if (!(cfl > 0.0 && cfl < 1.0)) throw Error(ErrorCode::invalid_argument, "cfl must lie in (0,1)");
    if (!(dt_min > 0.0) || !(dt_min < dt_max))
      throw Error(ErrorCode::invalid_argument, "need 0 < dt_min < dt_max");
  }
};

/// Solution triple plus the history the closed-form w needs.
///
/// w(t) = w_base e^{g(t)} / (1 + eta w_base w_denom_accum(t)),
/// g(t) = eta (t - t_base) - (v_accum(t) - v_accum_base),
/// w_denom_accum(t) = int_{t_base}^t e^{g(s)} ds.
/// Initially t_base = 0 and w_base = w0, which is the textbook formula; the
/// base is moved forward only if g would leave the range of double.
struct State {
  double t = 0.0;
  Field u, v, w;
  Field w0;
  Field v_accum;         // int_0^t v dr, trapezoid rule
  Field w_denom_accum;   // int_{t_base}^t e^{g(s)} ds
  Field w_base;
  Field v_accum_base;
  double t_base = 0.0;
  double k_clamp = 1.0;  // max{1, sup w0}
};

inline State make_state(Field u0, Field v0, Field w0, const Params& p,
                        const StepControl& control = {}) {
  p.validate();
  require_same_grid(u0.grid, v0.grid);
  require_same_grid(u0.grid, w0.grid);
  for (double x : u0.values)
    if (!(x >= 0.0) || !std::isfinite(x))
      throw Error(ErrorCode::invalid_argument, "u0 must be finite and nonnegative");
  for (double x : w0.values)
    if (!(x >= 0.0) || !std::isfinite(x))
      throw Error(ErrorCode::invalid_argument, "w0 must be finite and nonnegative");
  if (!p.tracks_w()) std::fill(w0.values.begin(), w0.values.end(), 0.0);

  State s;
  const Grid g = u0.grid;
  if (p.tau == 0) {
    v0 = helmholtz_solve(u0, {control.tol, control.max_iter, nullptr}).x;
  }
  s.k_clamp = std::max(1.0, norm_linf(w0));
  s.u = std::move(u0);
  s.v = std::move(v0);
  s.w = w0;
  s.w_base = w0;
  s.w0 = std::move(w0);
  s.v_accum = Field(g);
  s.v_accum_base = Field(g);
  s.w_denom_accum = Field(g);
  return s;
}

/// Face velocities chi grad v + xi grad w.
inline FluxField taxis_velocity(const Field& v, const Field& w, const Params& p) {
  FluxField gv = gradient(v);
  const FluxField gw = gradient(w);
  for (std::size_t k = 0; k < gv.fx.size(); ++k) gv.fx[k] = p.chi * gv.fx[k] + p.xi * gw.fx[k];
  for (std::size_t k = 0; k < gv.fy.size(); ++k) gv.fy[k] = p.chi * gv.fy[k] + p.xi * gw.fy[k];
  return gv;
}

/// First-order upwind face flux u_upwind * velocity; boundary faces stay 0.
inline FluxField advective_flux(const Field& u, const FluxField& velocity) {
  require_same_grid(u.grid, velocity.grid);
  const Grid& g = u.grid;
  FluxField f(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i) {
      const double a = velocity.fx[f.ix(i, j)];
      f.fx[f.ix(i, j)] = a > 0.0 ? a * u(i - 1, j) : a * u(i, j);
    }
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double a = velocity.fy[f.iy(i, j)];
      f.fy[f.iy(i, j)] = a > 0.0 ? a * u(i, j - 1) : a * u(i, j);
    }
  return f;
}

/// max over cells of the total outflow rate sum(outward velocity)/h. An
/// explicit upwind update keeps u >= 0 whenever dt * rate <= 1.
inline double outflow_rate(const FluxField& velocity) {
  const Grid& g = velocity.grid;
  double rate = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double right = std::max(velocity.fx[velocity.ix(i + 1, j)], 0.0);
      const double left = std::max(-velocity.fx[velocity.ix(i, j)], 0.0);
      const double top = std::max(velocity.fy[velocity.iy(i, j + 1)], 0.0);
      const double bottom = std::max(-velocity.fy[velocity.iy(i, j)], 0.0);
      rate = std::max(rate, (right + left) / g.hx + (top + bottom) / g.hy);
    }
  return rate;
}

struct WUpdate {
  Field w;
  Field v_accum;
  Field w_denom_accum;
  Field w_base;
  Field v_accum_base;
  double t_base = 0.0;
};

namespace detail {

// Exponents above this trigger a rebase of the closed-form w.
inline constexpr double kRebaseExponent = 300.0;

// int_0^dt exp(g_a + (g_b - g_a) s/dt) ds, exact for g linear in time.
inline double exp_segment(double g_a, double g_b, double dt) {
  const double d = g_b - g_a;
  if (std::abs(d) < 1e-12) return dt * std::exp(0.5 * (g_a + g_b));
  return dt * std::exp(g_a) * std::expm1(d) / d;
}

}  // namespace detail

/// Advances the w history over [t, t + dt] with v_next the chemical at the
/// end of the interval and evaluates w there. The exponent integral uses
/// the trapezoid rule; the denominator integral is exact for piecewise
/// linear exponents, so frozen v reproduces the exact solution.
inline WUpdate w_exact_update(const State& s, const Field& v_next, double dt, double eta) {
  require_same_grid(s.v.grid, v_next.grid);
  WUpdate out{Field(s.w.grid), s.v_accum, s.w_denom_accum, s.w_base, s.v_accum_base, s.t_base};
  const double t0 = s.t - s.t_base;
  const double t1 = s.t + dt - s.t_base;
  double max_exponent = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < out.w.size(); ++k) {
    const double acc_old = s.v_accum[k];
    const double acc_new = acc_old + 0.5 * dt * (s.v[k] + v_next[k]);
    out.v_accum[k] = acc_new;
    const double g_old = eta * t0 - (acc_old - s.v_accum_base[k]);
    const double g_new = eta * t1 - (acc_new - s.v_accum_base[k]);
    out.w_denom_accum[k] += detail::exp_segment(g_old, g_new, dt);
    const double wb = s.w_base[k];
    double w = wb * std::exp(g_new) / (1.0 + eta * wb * out.w_denom_accum[k]);
    // [0, K] holds structurally; the clamp only removes last-bit excess.
    w = std::clamp(w, 0.0, s.k_clamp);
    out.w[k] = w;
    max_exponent = std::max(max_exponent, std::abs(g_new));
  }
  if (max_exponent > detail::kRebaseExponent) {
    out.w_base = out.w;
    out.v_accum_base = out.v_accum;
    out.t_base = s.t + dt;
    std::fill(out.w_denom_accum.values.begin(), out.w_denom_accum.values.end(), 0.0);
  }
  return out;
}

/// Two-sided bound on w in terms of w0 and int_0^t (v - eta).
struct WBounds {
  Field lower;
  Field upper;
};

inline WBounds w_two_sided_bounds(const State& s, double eta) {
  WBounds b{Field(s.w.grid), Field(s.w.grid)};
  for (std::size_t k = 0; k < s.w.size(); ++k) {
    const double w0 = s.w0[k];
    const double decay = std::exp(eta * s.t - s.v_accum[k]);
    b.upper[k] = w0 * decay;
    b.lower[k] = w0 / (1.0 + w0 * std::expm1(eta * s.t)) * decay;
  }
  return b;
}

struct StepResult {
  State state;
  double dt = 0.0;
  bool cfl_limited = false;
  bool dt_collapsed = false;
  SolveReport v_report;
  SolveReport u_report;
};

struct StepRequest {
  double dt_limit = std::numeric_limits<double>::infinity();  // e.g. distance to t_end
  double forced_dt = 0.0;                                     // > 0 bypasses adaptivity
};

inline StepResult step(const State& s, const Params& p, const StepControl& c,
                       const StepRequest& req = {}) {
  const SolveOptions opt_v{c.tol, c.max_iter, &s.v};
  const SolveOptions opt_u{c.tol, c.max_iter, &s.u};
  const bool forced = req.forced_dt > 0.0;

  StepResult res;
  double dt = 0.0;
  if (forced) {
    dt = req.forced_dt;
  } else {
    const double rate = outflow_rate(taxis_velocity(s.v, s.w, p));
    const double dt_cfl = rate > 0.0 ? c.cfl / rate : std::numeric_limits<double>::infinity();
    dt = std::min({c.dt_max, req.dt_limit, dt_cfl});
    res.cfl_limited = dt_cfl < std::min(c.dt_max, req.dt_limit);
  }
  if (!(dt > 0.0)) throw Error(ErrorCode::invalid_argument, "non-positive time step");

  Field v_new;
  WUpdate wu;
  FluxField vel;
  if (p.tau == 0) {
    auto sol = helmholtz_solve(s.u, opt_v);
    v_new = std::move(sol.x);
    res.v_report = sol.report;
  }
  for (int attempt = 0;; ++attempt) {
    if (p.tau == 1) {
      Field rhs = s.v;
      for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] += dt * s.u[k];
      auto sol = implicit_heat_solve(rhs, dt, opt_v);
      v_new = std::move(sol.x);
      res.v_report = sol.report;
    }
    if (p.tracks_w()) {
      wu = w_exact_update(s, v_new, dt, p.eta);
    } else {
      wu = WUpdate{s.w, s.v_accum, s.w_denom_accum, s.w_base, s.v_accum_base, s.t_base};
      for (std::size_t k = 0; k < wu.v_accum.size(); ++k)
        wu.v_accum[k] += 0.5 * dt * (s.v[k] + v_new[k]);
    }
    vel = taxis_velocity(v_new, wu.w, p);
    const double rate = outflow_rate(vel);
    if (forced || dt * rate <= c.cfl * (1.0 + 1e-12)) break;
    if (attempt >= 20) throw Error(ErrorCode::solver_failure, "CFL retries exhausted");
    dt = 0.9 * c.cfl / rate;
    res.cfl_limited = true;
  }

  Field rhs = s.u;
  {
    const Field div = divergence(advective_flux(s.u, vel));
    for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] -= dt * div[k];
  }
  auto usol = implicit_diffusion_solve(rhs, dt, opt_u);
  res.u_report = usol.report;
  Field u_new = std::move(usol.x);

  // Roundoff-level negatives from the inexact solve are clipped and the
  // mass restored by scaling; anything larger means positivity was lost.
  double negative = 0.0;
  double total = 0.0;
  for (double x : u_new.values) {
    if (x < 0.0) negative -= x;
    total += x;
  }
  if (negative > 0.0) {
    if (negative > 1e-9 * std::abs(total))
      throw Error(ErrorCode::solver_failure,
                  "cell density lost positivity at t=" + std::to_string(s.t + dt));
    double target = 0.0;
    for (double x : rhs.values) target += x;
    double clipped = 0.0;
    for (double& x : u_new.values) {
      x = std::max(x, 0.0);
      clipped += x;
    }
    const double scale = target / clipped;
    for (double& x : u_new.values) x *= scale;
  }
  for (double x : u_new.values)
    if (!std::isfinite(x))
      throw Error(ErrorCode::solver_failure, "non-finite density at t=" + std::to_string(s.t + dt));

  State& n = res.state;
  n.t = s.t + dt;
  n.u = std::move(u_new);
  n.v = std::move(v_new);
  n.w = std::move(wu.w);
  n.w0 = s.w0;
  n.v_accum = std::move(wu.v_accum);
  n.w_denom_accum = std::move(wu.w_denom_accum);
  n.w_base = std::move(wu.w_base);
  n.v_accum_base = std::move(wu.v_accum_base);
  n.t_base = wu.t_base;
  n.k_clamp = s.k_clamp;
  res.dt = dt;
  res.dt_collapsed = res.cfl_limited && dt < c.dt_min;
  return res;
}

}  // namespace hapto

#endif  // HAPTO_MODEL_HPP
