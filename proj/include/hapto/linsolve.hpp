#ifndef HAPTO_LINSOLVE_HPP
#define HAPTO_LINSOLVE_HPP

// Matrix-free Jacobi-preconditioned conjugate gradients for the SPD
// operators a*I - b*Lap_h (a > 0, b >= 0) with Neumann closure:
//   (-Lap + 1) v = f              a = 1,      b = 1
//   (I + dt (I - Lap)) v = rhs    a = 1 + dt, b = dt
//   (I - dt Lap) u = rhs          a = 1,      b = dt

#include <cmath>
#include <string>
#include <vector>

#include "hapto/error.hpp"
#include "hapto/grid.hpp"

namespace hapto {

struct SolveReport {
  int iterations = 0;
  double residual = 0.0;  // relative l2
  bool converged = false;
};

class SolverError : public Error {
 public:
  SolverError(const std::string& what, SolveReport report)
      : Error(ErrorCode::non_convergence, what), report_(report) {}
  const SolveReport& report() const noexcept { return report_; }

 private:
  SolveReport report_;
};

struct SolveOptions {
  double tol = 1e-10;
  int max_iter = 0;             // 0 selects 10 * (nx + ny)
  const Field* guess = nullptr;  // warm start
};

struct Solution {
  Field x;
  SolveReport report;
};

struct ShiftedLaplacian {
  double a = 1.0;
  double b = 1.0;

  // y = a x - b Lap_h x, with the same arithmetic as divergence(gradient(x)).
  void apply(const Grid& g, const std::vector<double>& x, std::vector<double>& y) const {
    const int nx = g.nx;
    const int ny = g.ny;
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const std::size_t k = g.index(i, j);
        const double xc = x[k];
        const double gxr = (i + 1 < nx) ? (x[k + 1] - xc) / g.hx : 0.0;
        const double gxl = (i > 0) ? (xc - x[k - 1]) / g.hx : 0.0;
        const double gyt = (j + 1 < ny) ? (x[k + static_cast<std::size_t>(nx)] - xc) / g.hy : 0.0;
        const double gyb = (j > 0) ? (xc - x[k - static_cast<std::size_t>(nx)]) / g.hy : 0.0;
        const double lap = (gxr - gxl) / g.hx + (gyt - gyb) / g.hy;
        y[k] = a * xc - b * lap;
      }
    }
  }

  double diagonal(const Grid& g, int i, int j) const {
    const int nxn = (i > 0) + (i + 1 < g.nx);
    const int nyn = (j > 0) + (j + 1 < g.ny);
    return a + b * (nxn / (g.hx * g.hx) + nyn / (g.hy * g.hy));
  }
};

namespace detail {

inline double dot(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) s += p[k] * q[k];
  return s;
}

}  // namespace detail

/// Solves op x = rhs. After convergence the constant-mode component of the
/// residual is removed (constants are eigenvectors with eigenvalue a), so
/// a * integrate(x) equals integrate(rhs) to roundoff.
inline Solution solve_shifted_laplacian(const ShiftedLaplacian& op, const Field& rhs,
                                        const SolveOptions& opt = {}) {
  const Grid& g = rhs.grid;
  const std::size_t n = g.cells();
  const int max_iter = opt.max_iter > 0 ? opt.max_iter : 10 * (g.nx + g.ny);

  Solution sol{Field(g), {}};
  std::vector<double>& x = sol.x.values;
  if (opt.guess) {
    require_same_grid(opt.guess->grid, g);
    x = opt.guess->values;
  }

  std::vector<double> inv_diag(n);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) inv_diag[g.index(i, j)] = 1.0 / op.diagonal(g, i, j);

  const double bnorm = std::sqrt(detail::dot(rhs.values, rhs.values));
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    sol.report = {0, 0.0, true};
    return sol;
  }

  std::vector<double> r(n), z(n), p(n), q(n);
  auto true_residual = [&] {
    op.apply(g, x, q);
    for (std::size_t k = 0; k < n; ++k) r[k] = rhs[k] - q[k];
    return std::sqrt(detail::dot(r, r)) / bnorm;
  };

  int it = 0;
  double rel = true_residual();
  // Restart from the true residual whenever the recursive one has drifted.
  while (rel > opt.tol && it < max_iter) {
    for (std::size_t k = 0; k < n; ++k) z[k] = inv_diag[k] * r[k];
    p = z;
    double rz = detail::dot(r, z);
    while (it < max_iter) {
      op.apply(g, p, q);
      const double pq = detail::dot(p, q);
      if (!(pq > 0.0)) break;
      const double alpha = rz / pq;
      for (std::size_t k = 0; k < n; ++k) {
        x[k] += alpha * p[k];
        r[k] -= alpha * q[k];
      }
      ++it;
      if (std::sqrt(detail::dot(r, r)) / bnorm <= opt.tol) break;
      for (std::size_t k = 0; k < n; ++k) z[k] = inv_diag[k] * r[k];
      const double rz_new = detail::dot(r, z);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t k = 0; k < n; ++k) p[k] = z[k] + beta * p[k];
    }
    const double prev = rel;
    rel = true_residual();
    if (rel > opt.tol && !(rel < prev)) break;  // stagnated at roundoff
  }

  // Constant-mode correction.
  double mean_r = 0.0;
  for (double v : r) mean_r += v;
  mean_r /= static_cast<double>(n);
  for (double& v : x) v += mean_r / op.a;
  rel = true_residual();

  sol.report = {it, rel, rel <= opt.tol};
  if (!sol.report.converged)
    throw SolverError("CG stopped after " + std::to_string(it) +
                          " iterations at relative residual " + std::to_string(rel),
                      sol.report);
  return sol;
}

/// (-Lap_h + I) v = f.
inline Solution helmholtz_solve(const Field& f, const SolveOptions& opt = {}) {
  if (!(opt.tol > 0.0 && opt.tol <= 1e-4))
    throw Error(ErrorCode::invalid_argument, "tolerance must lie in (0, 1e-4]");
  return solve_shifted_laplacian(ShiftedLaplacian{1.0, 1.0}, f, opt);
}

/// Backward-Euler step of v_t = Lap v - v + (forcing folded into rhs):
/// (I + dt (I - Lap_h)) v = rhs.
inline Solution implicit_heat_solve(const Field& rhs, double dt, const SolveOptions& opt = {}) {
  if (!(dt > 0.0)) throw Error(ErrorCode::invalid_argument, "dt must be positive");
  return solve_shifted_laplacian(ShiftedLaplacian{1.0 + dt, dt}, rhs, opt);
}

/// (I - dt Lap_h) u = rhs, the implicit diffusion half of the cell update.
inline Solution implicit_diffusion_solve(const Field& rhs, double dt, const SolveOptions& opt = {}) {
  if (!(dt > 0.0)) throw Error(ErrorCode::invalid_argument, "dt must be positive");
  return solve_shifted_laplacian(ShiftedLaplacian{1.0, dt}, rhs, opt);
}

}  // namespace hapto

#endif  // HAPTO_LINSOLVE_HPP
