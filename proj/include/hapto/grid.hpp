#ifndef HAPTO_GRID_HPP
#define HAPTO_GRID_HPP

// Uniform cell-centred grid on a rectangle with no-flux closure, scalar
// cell fields, face fluxes and the discrete operators built from them.
// Cell (i, j) has centre ((i + 1/2) hx, (j + 1/2) hy) and linear index
// j * nx + i.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "hapto/constants.hpp"
#include "hapto/error.hpp"

namespace hapto {

struct Grid {
  int nx = 0;
  int ny = 0;
  double hx = 0.0;
  double hy = 0.0;
  DomainSpec domain;

  static Grid make(const DomainSpec& domain, int nx, int ny) {
    domain.validate();
    if (nx < 4 || ny < 4)
      throw Error(ErrorCode::invalid_argument, "grid needs at least 4 cells per direction");
    return Grid{nx, ny, domain.lx / nx, domain.ly / ny, domain};
  }

  std::size_t cells() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i);
  }
  double cell_area() const { return hx * hy; }
  double xc(int i) const { return (i + 0.5) * hx; }
  double yc(int j) const { return (j + 0.5) * hy; }

  friend bool operator==(const Grid&, const Grid&) = default;
};

struct Field {
  Grid grid;
  std::vector<double> values;

  Field() = default;
  explicit Field(const Grid& g, double fill = 0.0) : grid(g), values(g.cells(), fill) {}

  double& operator()(int i, int j) { return values[grid.index(i, j)]; }
  double operator()(int i, int j) const { return values[grid.index(i, j)]; }
  double& operator[](std::size_t k) { return values[k]; }
  double operator[](std::size_t k) const { return values[k]; }
  std::size_t size() const { return values.size(); }

  template <typename F>
  static Field sample(const Grid& g, F&& f) {
    Field out(g);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) out(i, j) = f(g.xc(i), g.yc(j));
    return out;
  }
};

/// Normal fluxes on every face. x-faces are indexed j*(nx+1)+i (face i sits
/// between cells i-1 and i), y-faces j*nx+i (between rows j-1 and j). The
/// outermost faces of each family are boundary faces and stay zero.
struct FluxField {
  Grid grid;
  std::vector<double> fx;
  std::vector<double> fy;

  FluxField() = default;
  explicit FluxField(const Grid& g)
      : grid(g),
        fx(static_cast<std::size_t>(g.nx + 1) * static_cast<std::size_t>(g.ny), 0.0),
        fy(static_cast<std::size_t>(g.nx) * static_cast<std::size_t>(g.ny + 1), 0.0) {}

  std::size_t ix(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(grid.nx + 1) +
           static_cast<std::size_t>(i);
  }
  std::size_t iy(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(grid.nx) +
           static_cast<std::size_t>(i);
  }
};

inline void require_same_grid(const Grid& a, const Grid& b) {
  if (!(a == b)) throw Error(ErrorCode::invalid_argument, "fields live on different grids");
}

inline double integrate(const Field& f) {
  double s = 0.0;
  for (double v : f.values) s += v;
  return s * f.grid.cell_area();
}

inline double norm_linf(const Field& f) {
  double m = 0.0;
  for (double v : f.values) m = std::max(m, std::abs(v));
  return m;
}

inline double norm_l1(const Field& f) {
  double s = 0.0;
  for (double v : f.values) s += std::abs(v);
  return s * f.grid.cell_area();
}

/// int |f ln f| with 0 ln 0 = 0.
inline double entropy_l1(const Field& f) {
  double s = 0.0;
  for (double v : f.values) {
    if (v < 0.0) throw Error(ErrorCode::domain_error, "entropy of a negative value");
    if (v > 0.0) s += std::abs(v * std::log(v));
  }
  return s * f.grid.cell_area();
}

inline double pairing(const Field& f, const Field& g) {
  require_same_grid(f.grid, g.grid);
  double s = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) s += f[k] * g[k];
  return s * f.grid.cell_area();
}

/// sum over faces of p*q weighted by the cell area; the discrete adjoint
/// partner of `pairing`.
inline double face_pairing(const FluxField& p, const FluxField& q) {
  require_same_grid(p.grid, q.grid);
  double s = 0.0;
  for (std::size_t k = 0; k < p.fx.size(); ++k) s += p.fx[k] * q.fx[k];
  for (std::size_t k = 0; k < p.fy.size(); ++k) s += p.fy[k] * q.fy[k];
  return s * p.grid.cell_area();
}

inline double max_abs_face(const FluxField& q) {
  double m = 0.0;
  for (double v : q.fx) m = std::max(m, std::abs(v));
  for (double v : q.fy) m = std::max(m, std::abs(v));
  return m;
}

inline FluxField gradient(const Field& f) {
  const Grid& g = f.grid;
  FluxField q(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i) q.fx[q.ix(i, j)] = (f(i, j) - f(i - 1, j)) / g.hx;
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) q.fy[q.iy(i, j)] = (f(i, j) - f(i, j - 1)) / g.hy;
  return q;
}

inline Field divergence(const FluxField& q) {
  const Grid& g = q.grid;
  Field out(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      out(i, j) = (q.fx[q.ix(i + 1, j)] - q.fx[q.ix(i, j)]) / g.hx +
                  (q.fy[q.iy(i, j + 1)] - q.fy[q.iy(i, j)]) / g.hy;
  return out;
}

inline Field laplacian(const Field& f) { return divergence(gradient(f)); }

}  // namespace hapto

#endif  // HAPTO_GRID_HPP
