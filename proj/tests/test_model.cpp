#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <functional>
#include <numbers>
#include <random>

#include "hapto/constants.hpp"
#include "hapto/initdata.hpp"
#include "hapto/model.hpp"
#include "hapto/run.hpp"
#include "oracles.hpp"

using namespace hapto;
constexpr double kPi = std::numbers::pi;

namespace {

Field random_field(const Grid& g, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Field f(g);
  for (double& x : f.values) x = u(rng);
  return f;
}

// Advances only the w history with a frozen chemical field.
State advance_w(State s, const Field& v, double eta, double t_end, double dt) {
  s.v = v;
  const int n = static_cast<int>(std::llround(t_end / dt));
  for (int k = 0; k < n; ++k) {
    WUpdate wu = w_exact_update(s, v, dt, eta);
    s.w = std::move(wu.w);
    s.v_accum = std::move(wu.v_accum);
    s.w_denom_accum = std::move(wu.w_denom_accum);
    s.w_base = std::move(wu.w_base);
    s.v_accum_base = std::move(wu.v_accum_base);
    s.t_base = wu.t_base;
    s.t += dt;
  }
  return s;
}

// RK4 for w' = -v w + eta w (1 - w).
double rk4_w(double w, double v, double eta, double t_end, double dt) {
  auto f = [&](double x) { return -v * x + eta * x * (1.0 - x); };
  const int n = static_cast<int>(std::llround(t_end / dt));
  for (int k = 0; k < n; ++k) {
    const double k1 = f(w), k2 = f(w + 0.5 * dt * k1), k3 = f(w + 0.5 * dt * k2), k4 = f(w + dt * k3);
    w += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return w;
}

State w_state(const Grid& g, double w0) {
  Params p;
  return make_state(Field(g, 1.0), Field(g, 0.0), Field(g, w0), p);
}

}  // namespace

TEST(Params, Validation) {
  Params p;
  p.tau = 2;
  EXPECT_THROW(p.validate(), Error);
  p.tau = 0;
  p.chi = -1.0;
  EXPECT_THROW(p.validate(), Error);
  StepControl c;
  c.cfl = 1.0;
  EXPECT_THROW(c.validate(), Error);
  c.cfl = 0.4;
  c.dt_min = c.dt_max;
  EXPECT_THROW(c.validate(), Error);
}

TEST(WExact, PureDecay) {
  const Grid g = Grid::make(DomainSpec{}, 4, 4);
  const State s = advance_w(w_state(g, 0.5), Field(g, 2.0), 0.0, 1.0, 0.01);
  for (double w : s.w.values) EXPECT_NEAR(w, 0.5 * std::exp(-2.0), 1e-14);
  EXPECT_NEAR(s.w[0], 0.067668, 1e-6);
}

TEST(WExact, PureLogistic) {
  const Grid g = Grid::make(DomainSpec{}, 4, 4);
  const State s = advance_w(w_state(g, 0.5), Field(g, 0.0), 1.0, std::log(2.0), std::log(2.0) / 100.0);
  for (double w : s.w.values) EXPECT_NEAR(w, 2.0 / 3.0, 1e-14);
}

TEST(WExact, MatchesRk4) {
  const Grid g = Grid::make(DomainSpec{}, 4, 4);
  const State s = advance_w(w_state(g, 0.8), Field(g, 1.0), 0.5, 2.0, 0.01);
  const double ref = rk4_w(0.8, 1.0, 0.5, 2.0, 1e-4);
  for (double w : s.w.values) EXPECT_NEAR(w, ref, 1e-8);
}

TEST(WExact, SpatiallyVaryingFrozenV) {
  const Grid g = Grid::make(DomainSpec{}, 6, 5);
  const Field v = Field::sample(g, [](double x, double y) { return 0.3 + 2.0 * x * y; });
  const Field w0 = Field::sample(g, [](double x, double) { return 0.2 + 1.3 * x; });
  Params p;
  State s0 = make_state(Field(g, 1.0), Field(g), w0, p);
  const State s = advance_w(s0, v, 0.7, 3.0, 0.05);
  for (std::size_t k = 0; k < v.size(); ++k) EXPECT_NEAR(s.w[k], rk4_w(w0[k], v[k], 0.7, 3.0, 1e-4), 1e-9);
}

TEST(WExact, RebaseKeepsClosedForm) {
  // Long horizon drives the exponent past the rebase threshold.
  const Grid g = Grid::make(DomainSpec{}, 4, 4);
  const State s = advance_w(w_state(g, 0.9), Field(g, 0.2), 2.0, 400.0, 0.5);
  EXPECT_GT(s.t_base, 0.0);
  const double fixed = 1.0 - 0.2 / 2.0;  // logistic equilibrium with linear loss
  for (double w : s.w.values) EXPECT_NEAR(w, fixed, 1e-12);
  const State decay = advance_w(w_state(g, 0.9), Field(g, 3.0), 0.0, 400.0, 0.5);
  for (double w : decay.w.values) EXPECT_EQ(w, 0.0);
}

TEST(WExact, BoundsAndTwoSidedEstimate) {
  std::mt19937_64 rng(21);
  const Grid g = Grid::make(DomainSpec{}, 8, 8);
  const Field w0 = random_field(g, rng, 0.0, 2.0);
  Params p;
  State s = make_state(Field(g, 1.0), Field(g), w0, p);
  for (int step = 0; step < 50; ++step) {
    const Field v = random_field(g, rng, 0.0, 3.0);
    WUpdate wu = w_exact_update(s, v, 0.05, 0.8);
    s.v = v;
    s.w = wu.w;
    s.v_accum = wu.v_accum;
    s.w_denom_accum = wu.w_denom_accum;
    s.w_base = wu.w_base;
    s.v_accum_base = wu.v_accum_base;
    s.t_base = wu.t_base;
    s.t += 0.05;
    const WBounds b = w_two_sided_bounds(s, 0.8);
    for (std::size_t k = 0; k < v.size(); ++k) {
      EXPECT_GE(s.w[k], 0.0);
      EXPECT_LE(s.w[k], s.k_clamp);
      EXPECT_LE(s.w[k], b.upper[k] * (1.0 + 1e-12));
      EXPECT_GE(s.w[k], b.lower[k] * (1.0 - 1e-12));
    }
  }
}

TEST(Advection, ZeroVelocityZeroFlux) {
  std::mt19937_64 rng(22);
  const Grid g = Grid::make(DomainSpec{}, 5, 5);
  const FluxField f = advective_flux(random_field(g, rng, 0.0, 1.0), FluxField(g));
  EXPECT_EQ(max_abs_face(f), 0.0);
}

TEST(Advection, UniformStateUniformVelocityInterior) {
  const Grid g = Grid::make(DomainSpec{}, 8, 8);
  FluxField vel(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i) vel.fx[vel.ix(i, j)] = 0.7;
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) vel.fy[vel.iy(i, j)] = -0.3;
  const Field div = divergence(advective_flux(Field(g, 2.0), vel));
  for (int j = 1; j < g.ny - 1; ++j)
    for (int i = 1; i < g.nx - 1; ++i) EXPECT_NEAR(div(i, j), 0.0, 1e-13);
}

TEST(Advection, ImpulseStencilTable) {
  // Unit impulse in cell (1,1) of a 4x4 grid; velocity +a in x, -b in y on
  // every interior face. One explicit step u - dt div F touches three cells.
  const Grid g = Grid::make(DomainSpec{}, 4, 4);
  const double a = 0.5, b = 0.25, dt = 0.1;
  Field u(g);
  u(1, 1) = 1.0;
  FluxField vel(g);
  for (int j = 0; j < 4; ++j)
    for (int i = 1; i < 4; ++i) vel.fx[vel.ix(i, j)] = a;
  for (int j = 1; j < 4; ++j)
    for (int i = 0; i < 4; ++i) vel.fy[vel.iy(i, j)] = -b;
  const Field div = divergence(advective_flux(u, vel));
  const double h = 0.25;
  const double table[3][3] = {// rows j = 0..2, columns i = 0..2
                              {0.0, dt * b / h, 0.0},
                              {0.0, 1.0 - dt * (a + b) / h, dt * a / h},
                              {0.0, 0.0, 0.0}};
  for (int j = 0; j < 4; ++j)
    for (int i = 0; i < 4; ++i) {
      const double expect = (i < 3 && j < 3) ? table[j][i] : 0.0;
      EXPECT_NEAR(u(i, j) - dt * div(i, j), expect, 1e-15) << i << "," << j;
    }
  EXPECT_NEAR(outflow_rate(vel), (a + b) / h, 1e-15);
}

TEST(Step, EllipticUniformFixedPoint) {
  const Grid g = Grid::make(DomainSpec{}, 8, 8);
  Params p;
  p.tau = 0;
  p.xi = 0.7;
  p.eta = 0.3;
  const State s = make_state(Field(g, 2.0), Field(g, 2.0), Field(g, 0.0), p);
  const StepResult r = step(s, p, StepControl{});
  for (std::size_t k = 0; k < s.u.size(); ++k) {
    EXPECT_NEAR(r.state.u[k], 2.0, 1e-13);
    EXPECT_NEAR(r.state.v[k], 2.0, 1e-13);
    EXPECT_EQ(r.state.w[k], 0.0);
  }
}

TEST(Step, ParabolicVMatchesDenseOracle) {
  std::mt19937_64 rng(23);
  const Grid g = Grid::make(DomainSpec{}, 4, 4);
  Params p;
  p.tau = 1;
  const Field u = random_field(g, rng, 0.5, 1.5);
  const Field v = random_field(g, rng, 0.0, 1.0);
  const State s = make_state(u, v, Field(g, 0.3), p);
  StepRequest req;
  req.forced_dt = 0.02;
  const StepResult r = step(s, p, StepControl{}, req);
  std::vector<double> rhs(u.size());
  for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] = v[k] + 0.02 * u[k];
  const auto ref = oracle::dense_solve(oracle::shifted_laplacian_matrix(4, 4, g.hx, g.hy, 1.02, 0.02), rhs);
  for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_NEAR(r.state.v[k], ref[k], 1e-10);
}

TEST(Step, MassPositivityAndWRangeOverRandomSteps) {
  std::mt19937_64 rng(24);
  const Grid g = Grid::make(DomainSpec{1.0, 0.8}, 16, 12);
  Params p;
  p.chi = 2.0;
  p.xi = 1.5;
  p.eta = 0.4;
  p.tau = 1;
  State s = make_state(random_field(g, rng, 0.0, 3.0), random_field(g, rng, 0.0, 2.0),
                       random_field(g, rng, 0.0, 1.6), p);
  const double m0 = integrate(s.u);
  StepControl c;
  c.dt_max = 2e-3;
  for (int k = 0; k < 1000; ++k) {
    StepResult r = step(s, p, c);
    s = std::move(r.state);
    for (double x : s.u.values) ASSERT_GE(x, 0.0);
    for (double x : s.w.values) {
      ASSERT_GE(x, 0.0);
      ASSERT_LE(x, s.k_clamp);
    }
  }
  EXPECT_LE(std::abs(integrate(s.u) - m0) / m0, 1e-12);
}

TEST(Step, CflBoundRespected) {
  const Grid g = Grid::make(DomainSpec{}, 32, 32);
  Params p;
  p.chi = 5.0;
  p.tau = 0;
  const Field u = bump(g, {0.3, 0.3}, 0.15, 20.0);
  State s = make_state(u, Field(g), Field(g, 0.5), p);
  StepControl c;
  const StepResult r = step(s, p, c);
  EXPECT_TRUE(r.cfl_limited);
  EXPECT_LE(r.dt * outflow_rate(taxis_velocity(r.state.v, r.state.w, p)), c.cfl * (1.0 + 1e-12));
}

TEST(Run, ZeroLengthRun) {
  const Grid g = Grid::make(DomainSpec{}, 8, 8);
  Params p;
  State s = make_state(Field(g, 1.0), Field(g, 1.0), Field(g, 0.5), p);
  s.t = 2.0;
  RunOptions opt;
  opt.t_end = 2.0;
  const RunResult r = run(s, p, StepControl{}, opt);
  EXPECT_EQ(r.steps, 0u);
  EXPECT_EQ(r.state.t, 2.0);
  EXPECT_EQ(r.state.u.values, s.u.values);
  EXPECT_EQ(r.reason, "t_end");
}

TEST(Run, ChemotaxisOnlyEqualsFullWithZeroW) {
  const Grid g = Grid::make(DomainSpec{}, 16, 16);
  Params full;
  full.chi = 1.0;
  full.xi = 0.0;
  full.eta = 0.2;
  Params ks = full;
  ks.mode = Mode::chemotaxis_only;
  const Field u = bump(g, {0.4, 0.6}, 0.3, 5.0);
  const Field v = bump(g, {0.6, 0.4}, 0.3, 1.0);
  State a = make_state(u, v, Field(g, 0.0), full);
  State b = make_state(u, v, Field(g, 0.7), ks);
  StepControl c;
  c.dt_max = 5e-3;
  for (int k = 0; k < 100; ++k) {
    StepResult ra = step(a, full, c);
    StepResult rb = step(b, ks, c);
    ASSERT_EQ(ra.dt, rb.dt);
    a = std::move(ra.state);
    b = std::move(rb.state);
    ASSERT_EQ(std::memcmp(a.u.values.data(), b.u.values.data(), 8 * a.u.size()), 0);
    ASSERT_EQ(std::memcmp(a.v.values.data(), b.v.values.data(), 8 * a.v.size()), 0);
    for (double w : a.w.values) ASSERT_EQ(w, 0.0);
  }
}

TEST(Run, ObserversAndErrorsCarryTime) {
  const Grid g = Grid::make(DomainSpec{}, 8, 8);
  Params p;
  struct Count : Observer {
    int n = 0;
    double last = -1.0;
    void observe(const State&, const State& cur, const StepInfo&) override {
      ++n;
      last = cur.t;
    }
  } counter;
  State s = make_state(Field(g, 1.0), Field(g, 1.0), Field(g, 0.5), p);
  RunOptions opt;
  opt.t_end = 0.1;
  opt.observe_every = 3;
  StepControl c;
  c.dt_max = 0.01;
  Observer* obs[] = {&counter};
  const RunResult r = run(s, p, c, opt, obs);
  EXPECT_EQ(r.steps, 10u);
  EXPECT_EQ(counter.n, 4);  // steps 3, 6, 9 and the final one
  EXPECT_NEAR(counter.last, 0.1, 1e-15);

  c.max_iter = 1;
  c.tol = 1e-14;
  State rough = make_state(bump(g, {0.5, 0.5}, 0.3, 1.0), Field(g), Field(g, 0.5), p);
  try {
    run(rough, p, c, opt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("t=0"), std::string::npos);
  }
}

TEST(Run, VLowerBoundAfterSigma) {
  // Kernel lower bound on v for tau = 1 and v0 >= 0, up to 10% for the grid.
  const Grid g = Grid::make(DomainSpec{}, 32, 32);
  Params p;
  p.chi = 1.0;
  p.xi = 0.5;
  p.eta = 0.01;
  const double m = 2.0 * kPi;
  State s = make_state(bump(g, {0.2, 0.3}, 0.15, m), Field(g), Field(g, 0.5), p);
  StepControl c;
  c.dt_max = 2e-3;
  for (double sigma : {0.25, 0.5, 1.0, 2.0}) {
    RunOptions opt;
    opt.t_end = sigma;
    s = run(std::move(s), p, c, opt).state;
    double vmin = s.v[0];
    for (double x : s.v.values) vmin = std::min(vmin, x);
    EXPECT_GE(vmin, 0.9 * v_threshold(m, std::sqrt(2.0), sigma)) << sigma;
  }
}
