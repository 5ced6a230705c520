#ifndef HAPTO_QUADRATURE_HPP
#define HAPTO_QUADRATURE_HPP

#include <cmath>
#include <functional>

#include "hapto/error.hpp"

namespace hapto::quad {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;   // accumulated Richardson estimate
  bool converged = true;
};

namespace detail {

template <typename F>
void simpson_step(const F& f, double a, double b, double fa, double fm, double fb, double whole,
                  double tol, int depth, QuadResult& out) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol || depth <= 0) {
    if (depth <= 0 && std::abs(delta) > 15.0 * tol) out.converged = false;
    out.value += left + right + delta / 15.0;
    out.error += std::abs(delta) / 15.0;
    return;
  }
  simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, out);
  simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, out);
}

}  // namespace detail

/// Adaptive Simpson with Richardson extrapolation on [a, b].
/// `tol` is an absolute tolerance on the whole interval.
template <typename F>
QuadResult adaptive_simpson(const F& f, double a, double b, double tol, int max_depth = 50) {
  QuadResult out;
  if (a == b) return out;
  // A fixed pre-split keeps narrow features from slipping between the
  // first five samples.
  constexpr int kPanels = 16;
  const double width = (b - a) / kPanels;
  for (int p = 0; p < kPanels; ++p) {
    const double lo = a + p * width;
    const double hi = (p + 1 == kPanels) ? b : a + (p + 1) * width;
    const double flo = f(lo);
    const double fhi = f(hi);
    const double fmid = f(0.5 * (lo + hi));
    const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    detail::simpson_step(f, lo, hi, flo, fmid, fhi, whole, tol / kPanels, max_depth, out);
  }
  return out;
}

/// Iterated adaptive Simpson over [x0,x1] x [y0,y1]. Interior break points
/// (e.g. the location of a peak) split the ranges so that the peak lands on
/// a panel edge.
template <typename F>
QuadResult integrate_rectangle(const F& f, double x0, double x1, double y0, double y1, double tol,
                               double x_break, double y_break) {
  QuadResult total;
  auto split = [](double lo, double hi, double at, double (&pts)[3]) {
    int n = 0;
    pts[n++] = lo;
    if (at > lo && at < hi) pts[n++] = at;
    pts[n++] = hi;
    return n;
  };
  double xs[3];
  double ys[3];
  const int nxp = split(x0, x1, x_break, xs);
  const int nyp = split(y0, y1, y_break, ys);
  const double inner_tol = tol * 1e-2 / ((x1 - x0) + 1.0);
  bool inner_ok = true;
  auto outer = [&](double y) {
    double acc = 0.0;
    for (int i = 0; i + 1 < nxp; ++i) {
      auto r = adaptive_simpson([&](double x) { return f(x, y); }, xs[i], xs[i + 1], inner_tol);
      inner_ok = inner_ok && r.converged;
      acc += r.value;
    }
    return acc;
  };
  for (int j = 0; j + 1 < nyp; ++j) {
    auto r = adaptive_simpson(outer, ys[j], ys[j + 1], tol / (nyp - 1));
    total.value += r.value;
    total.error += r.error;
    total.converged = total.converged && r.converged;
  }
  total.converged = total.converged && inner_ok;
  return total;
}

}  // namespace hapto::quad

#endif  // HAPTO_QUADRATURE_HPP
