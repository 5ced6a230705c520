#ifndef HAPTO_DIAGNOSTICS_HPP
#define HAPTO_DIAGNOSTICS_HPP

// Functionals evaluated along trajectories: the energy F and its
// chemotaxis-only part F_ks, the residual of the energy identity, decay-rate
// fitting, the blow-up detector and the almost-blow-up bound check.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "hapto/constants.hpp"
#include "hapto/error.hpp"
#include "hapto/grid.hpp"
#include "hapto/initdata.hpp"
#include "hapto/model.hpp"

namespace hapto {

/// int u ln u with 0 ln 0 = 0 (signed, unlike entropy_l1).
inline double u_log_u(const Field& u) {
  double s = 0.0;
  for (double x : u.values) {
    if (x < 0.0) throw Error(ErrorCode::domain_error, "u ln u of a negative value");
    if (x > 0.0) s += x * std::log(x);
  }
  return s * u.grid.cell_area();
}

/// (1/2) int (v^2 + |grad v|^2), gradient on faces.
inline double half_h1_energy(const Field& v) {
  const FluxField gv = gradient(v);
  return 0.5 * (pairing(v, v) + face_pairing(gv, gv));
}

inline double energy_F_ks(const Field& u, const Field& v, double chi) {
  return u_log_u(u) - chi * pairing(u, v) + chi * half_h1_energy(v);
}

inline double energy_F(const Field& u, const Field& v, const Field& w, const Params& p) {
  return energy_F_ks(u, v, p.chi) - p.xi * pairing(u, w);
}

inline double energy_F(const State& s, const Params& p) { return energy_F(s.u, s.v, s.w, p); }

namespace detail {

inline Field midpoint(const Field& a, const Field& b) {
  Field m(a.grid);
  for (std::size_t k = 0; k < m.size(); ++k) m[k] = 0.5 * (a[k] + b[k]);
  return m;
}

// int u |grad(ln u - chi v - xi w)|^2 on faces with the arithmetic mean of
// u; faces touching an empty cell contribute nothing.
inline double fisher_dissipation(const Field& u, const Field& v, const Field& w, const Params& p) {
  const Grid& g = u.grid;
  auto mu = [&](std::size_t k) { return std::log(u[k]) - p.chi * v[k] - p.xi * w[k]; };
  double s = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i + 1 < g.nx; ++i) {
      const std::size_t a = g.index(i, j);
      const std::size_t b = a + 1;
      if (u[a] <= 0.0 || u[b] <= 0.0) continue;
      const double d = (mu(b) - mu(a)) / g.hx;
      s += 0.5 * (u[a] + u[b]) * d * d;
    }
  for (int j = 0; j + 1 < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t a = g.index(i, j);
      const std::size_t b = g.index(i, j + 1);
      if (u[a] <= 0.0 || u[b] <= 0.0) continue;
      const double d = (mu(b) - mu(a)) / g.hy;
      s += 0.5 * (u[a] + u[b]) * d * d;
    }
  return s * g.cell_area();
}

inline double triple_pairing(const Field& a, const Field& b, const Field& c) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k] * c[k];
  return s * a.grid.cell_area();
}

}  // namespace detail

/// Mismatch in the energy identity over one step:
/// |dF/dt + tau chi int v_t^2 + int u|grad mu|^2 - xi int uvw - eta xi int uw(w-1)|,
/// with dF/dt a difference quotient and the integrals at the midpoint state.
inline double dissipation_residual(const State& prev, const State& next, const Params& p) {
  const double dt = next.t - prev.t;
  if (!(dt > 0.0)) return 0.0;
  const double dF = (energy_F(next, p) - energy_F(prev, p)) / dt;
  double vt2 = 0.0;
  if (p.tau == 1) {
    for (std::size_t k = 0; k < prev.v.size(); ++k) {
      const double vt = (next.v[k] - prev.v[k]) / dt;
      vt2 += vt * vt;
    }
    vt2 *= prev.v.grid.cell_area();
  }
  const Field u = detail::midpoint(prev.u, next.u);
  const Field v = detail::midpoint(prev.v, next.v);
  const Field w = detail::midpoint(prev.w, next.w);
  const double diss = detail::fisher_dissipation(u, v, w, p);
  Field wm1 = w;
  for (double& x : wm1.values) x -= 1.0;
  const double rhs = p.xi * detail::triple_pairing(u, v, w) +
                     p.eta * p.xi * detail::triple_pairing(u, w, wm1);
  return std::abs(dF + p.tau * p.chi * vt2 + diss - rhs);
}

struct DiagRecord {
  double t = 0.0;
  double mass_u = 0.0;
  double l1_v = 0.0;
  double linf_u = 0.0;
  double linf_v = 0.0;
  double linf_w = 0.0;
  double linf_grad_w = 0.0;
  double l1_uv = 0.0;
  double l1_ulnu = 0.0;
  double F = 0.0;
  double F_ks = 0.0;
  double dissipation_residual = 0.0;
  double dt = 0.0;
  bool blowup = false;
};

inline DiagRecord make_record(const State& prev, const State& cur, const Params& p, double dt,
                              bool blowup) {
  DiagRecord r;
  r.t = cur.t;
  r.mass_u = integrate(cur.u);
  r.l1_v = norm_l1(cur.v);
  r.linf_u = norm_linf(cur.u);
  r.linf_v = norm_linf(cur.v);
  r.linf_w = norm_linf(cur.w);
  r.linf_grad_w = max_abs_face(gradient(cur.w));
  {
    double s = 0.0;
    for (std::size_t k = 0; k < cur.u.size(); ++k) s += std::abs(cur.u[k] * cur.v[k]);
    r.l1_uv = s * cur.u.grid.cell_area();
  }
  r.l1_ulnu = entropy_l1(cur.u);
  r.F_ks = energy_F_ks(cur.u, cur.v, p.chi);
  r.F = r.F_ks - p.xi * pairing(cur.u, cur.w);
  r.dissipation_residual = dissipation_residual(prev, cur, p);
  r.dt = dt;
  r.blowup = blowup;
  return r;
}

inline constexpr const char* kDiagHeader =
    "t,mass_u,l1_v,linf_u,linf_v,linf_w,linf_grad_w,l1_uv,l1_ulnu,F,F_ks,dissipation_residual,dt,"
    "blowup";

inline void write_diag_header(std::ostream& os) { os << kDiagHeader << '\n'; }

inline void write_diag_row(std::ostream& os, const DiagRecord& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n",
                r.t, r.mass_u, r.l1_v, r.linf_u, r.linf_v, r.linf_w, r.linf_grad_w, r.l1_uv,
                r.l1_ulnu, r.F, r.F_ks, r.dissipation_residual, r.dt, r.blowup ? 1 : 0);
  os << buf;
}

struct RateFit {
  double rate = 0.0;
  double r2 = 0.0;
  double t_a = 0.0;
  double t_b = 0.0;
  int samples = 0;
};

/// Least-squares slope of ln(value) against t over the window, negated.
inline RateFit fit_decay_rate(const std::vector<std::pair<double, double>>& series, double t_a,
                              double t_b) {
  if (!(t_a < t_b)) throw Error(ErrorCode::invalid_argument, "fit window needs t_a < t_b");
  std::vector<double> ts;
  std::vector<double> ys;
  for (const auto& [t, value] : series) {
    if (t < t_a || t > t_b) continue;
    if (!(value > 0.0))
      throw Error(ErrorCode::domain_error, "decay fit needs positive values, got " +
                                               std::to_string(value) + " at t=" + std::to_string(t));
    ts.push_back(t);
    ys.push_back(std::log(value));
  }
  if (ts.size() < 5)
    throw Error(ErrorCode::insufficient_data,
                "decay fit needs >= 5 samples in window, got " + std::to_string(ts.size()));
  const double n = static_cast<double>(ts.size());
  double mt = 0.0;
  double my = 0.0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    mt += ts[k];
    my += ys[k];
  }
  mt /= n;
  my /= n;
  double stt = 0.0;
  double sty = 0.0;
  double syy = 0.0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    stt += (ts[k] - mt) * (ts[k] - mt);
    sty += (ts[k] - mt) * (ys[k] - my);
    syy += (ys[k] - my) * (ys[k] - my);
  }
  if (!(stt > 0.0)) throw Error(ErrorCode::insufficient_data, "decay fit needs distinct times");
  const double slope = sty / stt;
  double r2 = 1.0;
  if (syy > 0.0) {
    double ss_res = 0.0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
      const double e = ys[k] - (my + slope * (ts[k] - mt));
      ss_res += e * e;
    }
    r2 = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
  }
  return RateFit{-slope, r2, t_a, t_b, static_cast<int>(ts.size())};
}

struct BlowupThresholds {
  double u_max = std::numeric_limits<double>::infinity();  // absolute sup-norm threshold
  double dt_min = 0.0;
};

/// Default sup-norm threshold: 1e4 times the initial sup norm.
inline BlowupThresholds default_thresholds(const State& s0, const StepControl& c,
                                           double factor = 1e4) {
  return {factor * norm_linf(s0.u), c.dt_min};
}

inline bool blowup_detector(const State& s, double dt_used, bool cfl_limited,
                            const BlowupThresholds& th) {
  if (norm_linf(s.u) > th.u_max) return true;
  return cfl_limited && dt_used < th.dt_min;
}

/// Running suprema needed by the almost-blow-up check. int U (V)^+ uses the
/// translated chemical V = v - offset(t).
class BlowupTracker {
 public:
  BlowupTracker(double inf_v_eps, double m) : inf_v_eps_(inf_v_eps), m_(m) {}

  void observe(const State& s) {
    const Field vt = translate_v(s.v, s.t, inf_v_eps_, m_);
    double uvp = 0.0;
    double uv = 0.0;
    for (std::size_t k = 0; k < s.u.size(); ++k) {
      uvp += s.u[k] * std::max(vt[k], 0.0);
      uv += std::abs(s.u[k] * s.v[k]);
    }
    const double a = s.u.grid.cell_area();
    sup_uvplus = std::max(sup_uvplus, uvp * a);
    sup_uv = std::max(sup_uv, uv * a);
    sup_u = std::max(sup_u, norm_linf(s.u));
    sup_v = std::max(sup_v, norm_linf(s.v));
  }

  double sup_uvplus = 0.0;
  double sup_uv = 0.0;
  double sup_u = 0.0;
  double sup_v = 0.0;

 private:
  double inf_v_eps_;
  double m_;
};

struct BlowupReport {
  bool applicable = false;
  std::string note;
  bool blowup_signal = false;
  char alternative = '?';  // 'A' blow-up signal fired, 'B' bounded
  double bound_per_log = 0.0;  // coefficient of ln(1/eps) for sup ||uv||_1
  double bound_uv = 0.0;       // bound_per_log * ln(1/eps)
  double bound_min_norm = 0.0; // bound_uv / m
  double sup_uvplus = 0.0;
  double sup_uv = 0.0;
  double sup_u = 0.0;
  double sup_v = 0.0;
  bool meets_bound = false;
  bool consistent = false;
};

/// Compares the observed suprema of a concentrated-data run with the
/// almost-blow-up lower bound.
inline BlowupReport blowup_bound_check(const BlowupTracker& tr, bool blowup_signal,
                                       const Params& p, double m, double eps, double k_clamp,
                                       const DomainSpec& d) {
  BlowupReport r;
  r.blowup_signal = blowup_signal;
  r.alternative = blowup_signal ? 'A' : 'B';
  r.sup_uvplus = tr.sup_uvplus;
  r.sup_uv = tr.sup_uv;
  r.sup_u = tr.sup_u;
  r.sup_v = tr.sup_v;
  const double log_inv_eps = std::log(1.0 / eps);
  try {
    r.bound_per_log = blowup_lower_bound(m, p.chi, p.xi, p.eta, k_clamp, d.diam());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::alternative_a_forced) {
      r.applicable = true;
      r.bound_per_log = std::numeric_limits<double>::infinity();
      r.bound_uv = r.bound_min_norm = r.bound_per_log;
      r.note = "xi = 0: bound is infinite, only blow-up is consistent";
      r.consistent = blowup_signal;
      return r;
    }
    if (e.code() == ErrorCode::invalid_regime) {
      r.applicable = false;
      r.note = std::string("check skipped (invalid regime): ") + e.what();
      r.consistent = true;
      return r;
    }
    throw;
  }
  r.applicable = true;
  r.bound_uv = r.bound_per_log * log_inv_eps;
  r.bound_min_norm = r.bound_uv / m;
  r.meets_bound = r.sup_uvplus >= r.bound_uv && std::min(r.sup_u, r.sup_v) >= r.bound_min_norm;
  r.consistent = blowup_signal || r.meets_bound;
  r.note = blowup_signal ? "alternative A: blow-up signal fired"
                         : (r.meets_bound ? "alternative B: bounded, suprema above the bound"
                                          : "bounded run below the asymptotic bound");
  return r;
}

}  // namespace hapto

#endif  // HAPTO_DIAGNOSTICS_HPP
