#ifndef HAPTO_INITDATA_HPP
#define HAPTO_INITDATA_HPP

// Initial data: the concentrated family (U_eps, V_eps) anchored at a
// boundary point, smooth cosine bumps, and the uniform shift linking the
// original system to the translated one.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "hapto/constants.hpp"
#include "hapto/error.hpp"
#include "hapto/grid.hpp"

namespace hapto {

struct BlowupFamilySpec {
  double eps = 0.05;
  double m = 1.0;
  double chi = 1.0;
  Point x0{0.0, 0.0};
};

/// Nearest centre of a boundary face; ties go to bottom, top, left, right
/// in that order and to the lower cell index.
inline Point snap_to_boundary_face(const Grid& g, Point p) {
  Point best{};
  double best_d = std::numeric_limits<double>::infinity();
  auto consider = [&](double x, double y) {
    const double d = (x - p.x) * (x - p.x) + (y - p.y) * (y - p.y);
    if (d < best_d) {
      best_d = d;
      best = {x, y};
    }
  };
  for (int i = 0; i < g.nx; ++i) consider(g.xc(i), 0.0);
  for (int i = 0; i < g.nx; ++i) consider(g.xc(i), g.domain.ly);
  for (int j = 0; j < g.ny; ++j) consider(0.0, g.yc(j));
  for (int j = 0; j < g.ny; ++j) consider(g.domain.lx, g.yc(j));
  return best;
}

/// Validated spec: x0 snapped to a boundary face centre, eps floored at two
/// cell widths. Adjustments are reported in `warnings`.
struct ResolvedFamily {
  BlowupFamilySpec spec;
  std::vector<std::string> warnings;
};

inline ResolvedFamily resolve_family(const Grid& g, BlowupFamilySpec spec) {
  if (!(spec.eps > 0.0)) throw Error(ErrorCode::invalid_argument, "eps must be positive");
  if (!(spec.m > 0.0)) throw Error(ErrorCode::invalid_mass, "mass must be positive");
  if (!(spec.chi > 0.0))
    throw Error(ErrorCode::invalid_argument, "the concentrated family needs chi > 0");
  ResolvedFamily r{spec, {}};
  const double floor_eps = 2.0 * std::max(g.hx, g.hy);
  if (spec.eps < floor_eps) {
    r.spec.eps = floor_eps;
    r.warnings.push_back("eps raised from " + std::to_string(spec.eps) + " to " +
                         std::to_string(floor_eps) + " (two cells)");
  }
  r.spec.x0 = snap_to_boundary_face(g, spec.x0);
  return r;
}

namespace detail {

inline double log_profile(const BlowupFamilySpec& s, double x, double y) {
  const double dx = x - s.x0.x;
  const double dy = y - s.x0.y;
  const double q = s.eps * s.eps + std::numbers::pi * (dx * dx + dy * dy);
  return std::log(s.eps * s.eps / (q * q));
}

}  // namespace detail

/// V_eps at cell centres with the mean removed by the discrete quadrature.
/// The spec is used as given; call resolve_family first for the snapped one.
inline Field v_eps(const Grid& g, const BlowupFamilySpec& s) {
  Field lp = Field::sample(g, [&](double x, double y) { return detail::log_profile(s, x, y); });
  const double mean = integrate(lp) / g.domain.area();
  for (double& v : lp.values) v = (v - mean) / s.chi;
  return lp;
}

/// U_eps = m e^{chi V} / int e^{chi V}, normalised against the discrete
/// integral. The exponent is shifted by its maximum before exponentiating.
inline Field u_eps(const Field& v, const BlowupFamilySpec& s) {
  Field u(v.grid);
  double peak = -std::numeric_limits<double>::infinity();
  for (double x : v.values) peak = std::max(peak, s.chi * x);
  for (std::size_t k = 0; k < u.size(); ++k) u[k] = std::exp(s.chi * v[k] - peak);
  const double scale = s.m / integrate(u);
  for (double& x : u.values) x *= scale;
  return u;
}

/// -inf V_eps from the continuous profile, evaluated at the point of the
/// closed domain farthest from x0.
inline double v_eps_inf_formula(const DomainSpec& d, const BlowupFamilySpec& s) {
  const double r = farthest_distance(d, s.x0);
  const auto ints = log_kernel_integrals(s.eps, d, s.x0);
  return 2.0 / s.chi *
         (std::log(s.eps * s.eps + std::numbers::pi * r * r) - ints.log_q / d.area());
}

inline double field_min(const Field& f) {
  return *std::min_element(f.values.begin(), f.values.end());
}

/// v0 = V_eps - inf V_eps for the original system.
inline Field shifted_initial_v(const Field& v_eps_field) {
  const double lo = field_min(v_eps_field);
  Field out = v_eps_field;
  for (double& x : out.values) x -= lo;
  return out;
}

/// Spatially uniform offset subtracted from v to obtain the translated
/// chemical: -(inf V_eps + m/|Omega|) e^{-t} + m/|Omega|.
inline double translation_offset(double t, double inf_v_eps, double m, double area) {
  const double mean = m / area;
  return -(inf_v_eps + mean) * std::exp(-t) + mean;
}

inline Field translate_v(const Field& v, double t, double inf_v_eps, double m) {
  const double shift = translation_offset(t, inf_v_eps, m, v.grid.domain.area());
  Field out = v;
  for (double& x : out.values) x -= shift;
  return out;
}

/// C^1 cosine bump (1 + cos(pi r / radius)) / 2 scaled to `mass`.
inline Field bump(const Grid& g, Point center, double radius, double mass) {
  if (!(radius > 0.0)) throw Error(ErrorCode::invalid_argument, "bump radius must be positive");
  Field f = Field::sample(g, [&](double x, double y) {
    const double r = std::hypot(x - center.x, y - center.y);
    return r < radius ? 0.5 * (1.0 + std::cos(std::numbers::pi * r / radius)) : 0.0;
  });
  const double total = integrate(f);
  if (!(total > 0.0))
    throw Error(ErrorCode::invalid_argument, "bump misses every cell centre; enlarge the radius");
  const double scale = mass / total;
  for (double& x : f.values) x *= scale;
  return f;
}

}  // namespace hapto

#endif  // HAPTO_INITDATA_HPP
