#ifndef HAPTO_CONSTANTS_HPP
#define HAPTO_CONSTANTS_HPP

// Closed-form thresholds of the chemotaxis-haptotaxis system: the Gaussian
// kernel integral zeta, the lower bound v_t^m for the chemical, the time
// delta, the almost-blow-up lower bound and the energy upper bound for the
// concentrated initial-data family. Everything here is a pure function of
// its arguments.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "hapto/error.hpp"
#include "hapto/quadrature.hpp"

namespace hapto {

struct DomainSpec {
  double lx = 1.0;
  double ly = 1.0;

  double diam() const { return std::sqrt(lx * lx + ly * ly); }
  double area() const { return lx * ly; }

  void validate() const {
    if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly))
      throw Error(ErrorCode::invalid_domain, "side lengths must be positive and finite");
  }

  friend bool operator==(const DomainSpec&, const DomainSpec&) = default;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Sentinel for an unbounded upper time limit.
struct InfiniteTime {};
inline constexpr InfiniteTime infinite_time{};

struct KernelConstants {
  double m = 0.0;
  double v_inf_m = 0.0;
  double delta = std::numeric_limits<double>::infinity();  // +inf when eta >= v_inf_m
  double lambda1 = 0.0;
};

namespace detail {

inline constexpr double kFourPi = 4.0 * std::numbers::pi;
// Cut-offs of the zeta integrand in log-time. Below s_lo the factor
// exp(-d^2/4s) is < e^-45; above s_hi the tail is < e^-50/(4 pi 50).
inline constexpr double kLowerExponent = 45.0;
inline constexpr double kUpperTime = 50.0;
inline constexpr double kZetaTol = 1e-15;

inline void check_diam(double diam) {
  if (!(diam > 0.0) || !std::isfinite(diam))
    throw Error(ErrorCode::invalid_domain, "diam must be positive, got " + std::to_string(diam));
}

// zeta in the variable y = ln s: the 1/s factor is absorbed by ds = s dy and
// the integrand is bounded by exp(-d)/(4 pi).
inline double zeta_between(double s_a, double s_b, double diam) {
  if (s_b <= s_a) return 0.0;
  const double quarter_d2 = 0.25 * diam * diam;
  auto integrand = [quarter_d2](double y) {
    const double s = std::exp(y);
    return std::exp(-(s + quarter_d2 / s)) / kFourPi;
  };
  const auto r = quad::adaptive_simpson(integrand, std::log(s_a), std::log(s_b), kZetaTol);
  if (!r.converged)
    throw Error(ErrorCode::numerical_integration, "zeta quadrature did not converge");
  return r.value;
}

inline double zeta_full(double diam) {
  return zeta_between(diam * diam / (4.0 * kLowerExponent), kUpperTime, diam);
}

// Past the median time d/2 the value is the limit minus a shrinking tail, so
// zeta stays monotone to the last bit.
inline double zeta_upto(double t_upper, double diam) {
  const double s_lo = diam * diam / (4.0 * kLowerExponent);
  if (t_upper <= 0.5 * diam) return zeta_between(s_lo, t_upper, diam);
  if (t_upper >= kUpperTime) return zeta_full(diam);
  return zeta_full(diam) - zeta_between(t_upper, kUpperTime, diam);
}

}  // namespace detail

/// zeta(t) = int_0^t exp(-(s + d^2/(4s))) / (4 pi s) ds, absolute error <= 1e-12.
inline double zeta(double t, double diam) {
  detail::check_diam(diam);
  if (std::isnan(t) || t < 0.0)
    throw Error(ErrorCode::invalid_argument, "zeta requires t >= 0");
  if (t == 0.0) return 0.0;
  if (std::isinf(t)) return detail::zeta_full(diam);
  return detail::zeta_upto(t, diam);
}

inline double zeta(InfiniteTime, double diam) {
  detail::check_diam(diam);
  return detail::zeta_full(diam);
}

/// Lower bound m * zeta(t) for the chemical concentration after time t.
inline double v_threshold(double m, double diam, double t) {
  if (!(m > 0.0)) throw Error(ErrorCode::invalid_mass, "mass must be positive");
  return m * zeta(t, diam);
}

inline double v_threshold(double m, double diam, InfiniteTime) {
  if (!(m > 0.0)) throw Error(ErrorCode::invalid_mass, "mass must be positive");
  return m * zeta(infinite_time, diam);
}

/// Solves m * zeta(delta) = (eta + v_inf^m) / 2 by bisection.
inline double compute_delta(double m, double eta, double diam) {
  const double v_inf = v_threshold(m, diam, infinite_time);
  if (!(eta >= 0.0)) throw Error(ErrorCode::invalid_argument, "eta must be nonnegative");
  if (eta >= v_inf)
    throw Error(ErrorCode::no_finite_root,
                "eta >= v_inf^m: m*zeta never reaches the midpoint level");
  const double target = 0.5 * (eta + v_inf);
  auto residual = [&](double t) { return m * zeta(t, diam) - target; };

  double lo = 1e-8;
  double hi = 1e4;
  while (residual(lo) > 0.0) {
    lo *= 1e-2;
    if (lo < 1e-300) throw Error(ErrorCode::no_finite_root, "failed to bracket delta from below");
  }
  if (residual(hi) < 0.0)
    throw Error(ErrorCode::no_finite_root, "target indistinguishable from v_inf^m in double precision");

  // Geometric bisection until the bracket is exhausted in double precision.
  for (int it = 0; it < 400; ++it) {
    const double mid = (lo > 0.0 && hi / lo > 4.0) ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double r = residual(mid);
    if (r == 0.0) return mid;
    if (r < 0.0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
  }
  return std::abs(residual(lo)) < std::abs(residual(hi)) ? lo : hi;
}

/// First nonzero Neumann eigenvalue of -Laplace on the rectangle.
inline double neumann_lambda1(const DomainSpec& d) {
  d.validate();
  const double pi = std::numbers::pi;
  return std::min(pi * pi / (d.lx * d.lx), pi * pi / (d.ly * d.ly));
}

inline KernelConstants kernel_constants(double m, double eta, const DomainSpec& d) {
  d.validate();
  KernelConstants k;
  k.m = m;
  k.v_inf_m = v_threshold(m, d.diam(), infinite_time);
  if (eta < k.v_inf_m) k.delta = compute_delta(m, eta, d.diam());
  k.lambda1 = neumann_lambda1(d);
  return k;
}

/// Per-(-ln eps) lower bound on sup_t ||u v||_{L^1} in the almost-blow-up
/// alternative. Divide by m for the bound on min{||u||_inf, ||v||_inf}.
/// `k_clamp` is max{1, sup w0}.
inline double blowup_lower_bound(double m, double chi, double xi, double eta, double k_clamp,
                                 double diam) {
  if (!(m > 0.0)) throw Error(ErrorCode::invalid_mass, "mass must be positive");
  if (!(chi > 0.0)) throw Error(ErrorCode::invalid_argument, "chi must be positive");
  if (!(k_clamp >= 1.0)) throw Error(ErrorCode::invalid_argument, "K must be >= 1");
  if (!(m * chi > 4.0 * std::numbers::pi))
    throw Error(ErrorCode::invalid_regime, "requires supercritical mass m*chi > 4 pi");
  if (xi == 0.0)
    throw Error(ErrorCode::alternative_a_forced,
                "xi = 0: the bound is infinite, so only blow-up is consistent");
  if (!(xi > 0.0)) throw Error(ErrorCode::invalid_argument, "xi must be positive");
  const double v_inf = v_threshold(m, diam, infinite_time);
  if (!(eta < v_inf)) throw Error(ErrorCode::invalid_regime, "requires eta < v_inf^m");
  const double delta = compute_delta(m, eta, diam);
  const double gap = v_inf - eta;
  return 4.0 * (m * chi - 4.0 * std::numbers::pi) * gap /
         (k_clamp * chi * xi * (2.0 + gap * delta));
}

/// Largest distance from x0 to a point of the closed rectangle.
inline double farthest_distance(const DomainSpec& d, Point x0) {
  const double dx = std::max(x0.x, d.lx - x0.x);
  const double dy = std::max(x0.y, d.ly - x0.y);
  return std::sqrt(dx * dx + dy * dy);
}

inline bool on_boundary(const DomainSpec& d, Point x0, double tol = 1e-12) {
  const double scale = std::max(d.lx, d.ly);
  const bool inside = x0.x >= -tol * scale && x0.x <= d.lx + tol * scale &&
                      x0.y >= -tol * scale && x0.y <= d.ly + tol * scale;
  const bool edge = std::abs(x0.x) <= tol * scale || std::abs(x0.x - d.lx) <= tol * scale ||
                    std::abs(x0.y) <= tol * scale || std::abs(x0.y - d.ly) <= tol * scale;
  return inside && edge;
}

/// Domain integrals of ln(eps^2 + pi |x - x0|^2) and of its square.
struct LogKernelIntegrals {
  double log_q = 0.0;
  double log_q_sq = 0.0;
};

inline LogKernelIntegrals log_kernel_integrals(double eps, const DomainSpec& d, Point x0,
                                               double tol = 1e-9) {
  const double e2 = eps * eps;
  const double pi = std::numbers::pi;
  auto lq = [&](double x, double y) {
    const double dx = x - x0.x;
    const double dy = y - x0.y;
    return std::log(e2 + pi * (dx * dx + dy * dy));
  };
  auto r1 = quad::integrate_rectangle(lq, 0.0, d.lx, 0.0, d.ly, tol, x0.x, x0.y);
  auto r2 = quad::integrate_rectangle(
      [&](double x, double y) {
        const double v = lq(x, y);
        return v * v;
      },
      0.0, d.lx, 0.0, d.ly, tol, x0.x, x0.y);
  if (!r1.converged || !r2.converged || r1.error > 1e-8 || r2.error > 1e-8)
    throw Error(ErrorCode::numerical_integration, "log-kernel quadrature did not converge");
  return {r1.value, r2.value};
}

struct FksUpperBound {
  double log_coefficient = 0.0;  // -4 (m - 4 pi / chi)
  double log_inv_eps = 0.0;
  double r_eps = 0.0;
  double value = 0.0;
};

/// Upper bound -4(m - 4 pi/chi) ln(1/eps) + R_eps on F_ks(U_eps, V_eps).
inline FksUpperBound f_ks_upper_bound(double eps, double m, double chi, const DomainSpec& d,
                                      Point x0) {
  d.validate();
  if (!(eps > 0.0)) throw Error(ErrorCode::invalid_argument, "eps must be positive");
  if (!(chi > 0.0)) throw Error(ErrorCode::invalid_argument, "chi must be positive");
  if (!(m > 0.0)) throw Error(ErrorCode::invalid_mass, "mass must be positive");
  if (!on_boundary(d, x0)) throw Error(ErrorCode::invalid_argument, "x0 must lie on the boundary");

  const double pi = std::numbers::pi;
  const double area = d.area();
  const double r_far = farthest_distance(d, x0);
  const double e2 = eps * eps;
  const double q_far = e2 + pi * r_far * r_far;

  const auto ints = log_kernel_integrals(eps, d, x0);
  // ln((.)^2) = 2 ln(.), ln^2((.)^2) = 4 ln^2(.)
  const double i1 = 2.0 * ints.log_q;
  const double i2 = 4.0 * ints.log_q_sq;

  FksUpperBound b;
  b.log_coefficient = -4.0 * (m - 4.0 * pi / chi);
  b.log_inv_eps = std::log(1.0 / eps);
  b.r_eps = m * std::log(m) - m / area * i1 - m * std::log(area / (q_far * q_far)) +
            8.0 * pi / chi * (std::log(q_far) + e2 / q_far - 1.0) + i2 / (2.0 * chi) -
            i1 * i1 / (2.0 * chi * area);
  b.value = b.log_coefficient * b.log_inv_eps + b.r_eps;
  return b;
}

}  // namespace hapto

#endif  // HAPTO_CONSTANTS_HPP
