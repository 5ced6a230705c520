#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hapto/initdata.hpp"
#include "hapto/quadrature.hpp"

using namespace hapto;
constexpr double kPi = std::numbers::pi;

TEST(Snap, BoundaryFaceCentres) {
  const Grid g = Grid::make(DomainSpec{}, 8, 8);
  const Point c = snap_to_boundary_face(g, {0.0, 0.0});
  EXPECT_DOUBLE_EQ(c.x, 0.0625);
  EXPECT_DOUBLE_EQ(c.y, 0.0);
  const Point e = snap_to_boundary_face(g, {1.0, 0.52});
  EXPECT_DOUBLE_EQ(e.x, 1.0);
  EXPECT_DOUBLE_EQ(e.y, 0.5625);
  const Point interior = snap_to_boundary_face(g, {0.3, 0.9});
  EXPECT_DOUBLE_EQ(interior.y, 1.0);
}

TEST(Resolve, EpsFloorWarns) {
  const Grid g = Grid::make(DomainSpec{}, 16, 16);
  const auto r = resolve_family(g, {0.01, 1.0, 1.0, {0.0, 0.0}});
  EXPECT_DOUBLE_EQ(r.spec.eps, 0.125);
  ASSERT_EQ(r.warnings.size(), 1u);
  const auto ok = resolve_family(g, {0.2, 1.0, 1.0, {0.0, 0.0}});
  EXPECT_TRUE(ok.warnings.empty());
  EXPECT_THROW(resolve_family(g, {0.2, 1.0, 0.0, {0.0, 0.0}}), Error);
  EXPECT_THROW(resolve_family(g, {0.0, 1.0, 1.0, {0.0, 0.0}}), Error);
}

TEST(VEps, MeanZeroAndPeakAtAnchor) {
  const Grid g = Grid::make(DomainSpec{1.0, 0.7}, 40, 28);
  const auto rf = resolve_family(g, {0.1, 3.0, 2.0, {0.5, 0.0}});
  const Field v = v_eps(g, rf.spec);
  EXPECT_NEAR(integrate(v) / g.domain.area(), 0.0, 1e-12);
  const auto it = std::max_element(v.values.begin(), v.values.end());
  const std::size_t k = static_cast<std::size_t>(it - v.values.begin());
  const int i = static_cast<int>(k % g.nx), j = static_cast<int>(k / g.nx);
  EXPECT_NEAR(g.xc(i), rf.spec.x0.x, 1e-12);
  EXPECT_EQ(j, 0);
}

TEST(VEps, MinimumMatchesFormula) {
  // Cell-centre minimum approaches the continuous infimum at rate O(h).
  const BlowupFamilySpec s{0.1, 1.0, 1.0, {0.0, 0.0}};
  double prev_err = 0.0;
  for (int n : {32, 64, 128}) {
    const Grid g = Grid::make(DomainSpec{}, n, n);
    const double got = -field_min(v_eps(g, s));
    const double ref = v_eps_inf_formula(g.domain, s);
    const double err = std::abs(got - ref);
    EXPECT_LT(err, 4.0 * g.hx) << n;
    if (prev_err > 0.0) {
      EXPECT_LT(err, prev_err);
    }
    prev_err = err;
  }
}

TEST(UEps, MassPositivityArgmax) {
  const Grid g = Grid::make(DomainSpec{}, 64, 64);
  const auto rf = resolve_family(g, {0.05, 6.0 * kPi, 1.0, {0.0, 0.0}});
  const Field v = v_eps(g, rf.spec);
  const Field u = u_eps(v, rf.spec);
  EXPECT_NEAR(integrate(u) / (6.0 * kPi), 1.0, 1e-12);
  for (double x : u.values) EXPECT_GT(x, 0.0);
  const auto au = std::max_element(u.values.begin(), u.values.end()) - u.values.begin();
  const auto av = std::max_element(v.values.begin(), v.values.end()) - v.values.begin();
  EXPECT_EQ(au, av);
}

TEST(UEps, RatioMatchesFormula) {
  const Grid g = Grid::make(DomainSpec{}, 6, 6);
  const BlowupFamilySpec s{1.0, 2.0, 1.5, {0.0, 0.5}};
  const Field u = u_eps(v_eps(g, s), s);
  // U is proportional to (eps^2 + pi r^2)^{-2}.
  double qmin = 1e300, qmax = 0.0;
  for (int j = 0; j < 6; ++j)
    for (int i = 0; i < 6; ++i) {
      const double dx = g.xc(i), dy = g.yc(j) - 0.5;
      const double q = 1.0 + kPi * (dx * dx + dy * dy);
      qmin = std::min(qmin, q);
      qmax = std::max(qmax, q);
    }
  const double ratio = *std::max_element(u.values.begin(), u.values.end()) /
                       *std::min_element(u.values.begin(), u.values.end());
  EXPECT_NEAR(ratio, (qmax / qmin) * (qmax / qmin), 1e-12 * ratio);
}

TEST(UEps, NoOverflowForTinyEps) {
  const Grid g = Grid::make(DomainSpec{}, 32, 32);
  const BlowupFamilySpec s{1e-4, 10.0, 1e-3, {0.0, 0.0}};
  const Field u = u_eps(v_eps(g, s), s);
  for (double x : u.values) EXPECT_TRUE(std::isfinite(x));
  EXPECT_NEAR(integrate(u), 10.0, 1e-9);
}

TEST(UEps, CellQuadratureOfAnalyticProfile) {
  // U_eps normalised by an accurate continuous integral; cell-centre
  // quadrature on a refined grid recovers the mass.
  const double eps = 0.5, m = 2.0 * kPi;
  auto shape = [&](double x, double y) {
    const double q = eps * eps + kPi * (x * x + y * y);
    return eps * eps / (q * q);
  };
  const auto z = quad::integrate_rectangle(shape, 0.0, 1.0, 0.0, 1.0, 1e-13, 0.0, 0.0);
  ASSERT_TRUE(z.converged);
  const Grid g = Grid::make(DomainSpec{}, 1024, 1024);
  const Field u = Field::sample(g, [&](double x, double y) { return m * shape(x, y) / z.value; });
  EXPECT_NEAR(integrate(u), m, 1e-6 * m);
}

TEST(Translation, RoundTripAndLimit) {
  const Grid g = Grid::make(DomainSpec{1.0, 2.0}, 20, 40);
  const BlowupFamilySpec s{0.1, 5.0, 1.0, {1.0, 1.0}};
  const Field v = v_eps(g, s);
  const double inf_v = field_min(v);
  const Field v0 = shifted_initial_v(v);
  EXPECT_EQ(field_min(v0), 0.0);
  const Field back = translate_v(v0, 0.0, inf_v, s.m);
  for (std::size_t k = 0; k < v.size(); ++k) EXPECT_NEAR(back[k], v[k], 1e-13);
  EXPECT_NEAR(translation_offset(50.0, inf_v, s.m, 2.0), s.m / 2.0, 1e-12);
  const Field later = translate_v(v0, 0.7, inf_v, s.m);
  const double shift = translation_offset(0.7, inf_v, s.m, 2.0);
  EXPECT_NEAR(integrate(later) / 2.0, integrate(v0) / 2.0 - shift, 1e-12);
}

TEST(Bump, MassSupportSuperposition) {
  const Grid g = Grid::make(DomainSpec{}, 50, 50);
  const Field a = bump(g, {0.25, 0.25}, 0.2, 1.0);
  EXPECT_NEAR(integrate(a), 1.0, 1e-12);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      EXPECT_GE(a(i, j), 0.0);
      if (std::hypot(g.xc(i) - 0.25, g.yc(j) - 0.25) >= 0.2) {
        EXPECT_EQ(a(i, j), 0.0);
      }
    }
  const Field b = bump(g, {0.75, 0.7}, 0.2, 2.5);
  Field sum = a;
  for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += b[k];
  EXPECT_NEAR(integrate(sum), 3.5, 1e-12);
  EXPECT_THROW(bump(g, {0.5, 0.5}, 0.0, 1.0), Error);
}
