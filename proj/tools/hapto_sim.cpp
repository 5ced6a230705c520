// hapto-sim: command-line front end for scenarios.
//
//   hapto-sim constants|gen-init|run|compare|sweep <config> [--out DIR] [--quiet]

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "hapto/hapto.hpp"

namespace fs = std::filesystem;
using namespace hapto;

namespace {

struct Common {
  std::string config;
  std::string out;
  bool quiet = false;
};

void add_common(CLI::App* sub, Common& c, bool config_required = true) {
  auto* opt = sub->add_option("config", c.config, "scenario file");
  if (config_required) opt->required();
  sub->add_option("--out", c.out, "output directory (overrides output_dir)");
  sub->add_flag("--quiet", c.quiet, "suppress progress output");
}

fs::path out_dir(const Common& c, const Scenario& s) { return c.out.empty() ? s.output_dir : fs::path(c.out); }

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct ConstantsArgs {
  std::optional<double> m, chi, xi, eta, lx, ly, eps, k;
};

int cmd_constants(const Common& c, const ConstantsArgs& a) {
  double m = 2.0 * std::numbers::pi, chi = 1.0, xi = 0.0, eta = 0.0, eps = 0.05, k = 1.0;
  DomainSpec d;
  Point x0{0.0, 0.0};
  if (!c.config.empty()) {
    const Scenario s = load_scenario(c.config);
    m = scenario_mass(s);
    chi = s.params.chi;
    xi = s.params.xi;
    eta = s.eta.resolve(m, s.domain);
    eps = s.init.eps;
    d = s.domain;
    x0 = s.init.x0;
    k = std::max(1.0, s.init.w0 * (1.0 + std::abs(s.init.w_amp)));
  }
  if (a.m) m = *a.m;
  if (a.chi) chi = *a.chi;
  if (a.xi) xi = *a.xi;
  if (a.eta) eta = *a.eta;
  if (a.lx) d.lx = *a.lx;
  if (a.ly) d.ly = *a.ly;
  if (a.eps) eps = *a.eps;
  if (a.k) k = *a.k;

  const KernelConstants kc = kernel_constants(m, eta, d);
  std::vector<std::pair<std::string, double>> rows = {
      {"m", m}, {"chi", chi}, {"xi", xi}, {"eta", eta}, {"lx", d.lx}, {"ly", d.ly},
      {"diam", d.diam()}, {"zeta_inf", zeta(infinite_time, d.diam())}, {"v_inf", kc.v_inf_m},
      {"delta", kc.delta}, {"lambda1", kc.lambda1}, {"critical_mass", 4.0 * std::numbers::pi / chi}};
  std::string bound_note;
  try {
    rows.emplace_back("blowup_bound_per_log", blowup_lower_bound(m, chi, xi, eta, k, d.diam()));
  } catch (const Error& e) {
    bound_note = e.what();
    rows.emplace_back("blowup_bound_per_log", e.code() == ErrorCode::alternative_a_forced
                                                  ? std::numeric_limits<double>::infinity()
                                                  : std::numeric_limits<double>::quiet_NaN());
  }
  if (chi > 0.0) {
    const FksUpperBound fb = f_ks_upper_bound(eps, m, chi, d, x0);
    rows.emplace_back("eps", eps);
    rows.emplace_back("f_ks_upper_bound", fb.value);
    rows.emplace_back("f_ks_log_coefficient", fb.log_coefficient);
    rows.emplace_back("f_ks_r_eps", fb.r_eps);
  }
  if (!c.quiet) {
    for (const auto& [name, value] : rows) std::printf("%-22s %s\n", name.c_str(), g17(value).c_str());
    if (!bound_note.empty()) std::printf("note: %s\n", bound_note.c_str());
    std::printf("\n");
  }
  std::printf("name,value\n");
  for (const auto& [name, value] : rows) std::printf("%s,%s\n", name.c_str(), g17(value).c_str());
  return exit_ok;
}

int cmd_gen_init(const Common& c) {
  const Scenario s = load_scenario(c.config);
  InitialData init = build_initial_data(s);
  const Params p = resolved_params(s, integrate(init.u));
  for (const auto& w : init.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  const State s0 = make_state(std::move(init.u), std::move(init.v), std::move(init.w), p, s.control);
  const fs::path dir = out_dir(c, s);
  fs::create_directories(dir);
  write_snapshot(dir / "u0.hsim", s0.u, 0.0);
  write_snapshot(dir / "v0.hsim", s0.v, 0.0);
  write_snapshot(dir / "w0.hsim", s0.w, 0.0);
  if (s.pgm) write_pgm(dir / "u0.pgm", s0.u);
  if (!c.quiet)
    std::printf("wrote %s/{u0,v0,w0}.hsim  mass=%s  sup u0=%s\n", dir.string().c_str(),
                g17(integrate(s0.u)).c_str(), g17(norm_linf(s0.u)).c_str());
  return exit_ok;
}

int cmd_run(const Common& c) {
  const Scenario s = load_scenario(c.config);
  RunFlags flags;
  flags.out_dir = out_dir(c, s);
  flags.quiet = c.quiet;
  const ScenarioOutcome o = run_scenario(s, flags);
  for (const auto& w : o.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  if (!c.quiet) std::cout << o.summary;
  if (o.exit_code == exit_verdict)
    std::fprintf(stderr, "unexpected verdict: %s\n", o.verdict.c_str());
  return o.exit_code;
}

int cmd_compare(const Common& c) {
  const Scenario s = load_scenario(c.config);
  const CompareReport r = compare_runner(s);
  const fs::path dir = out_dir(c, s);
  fs::create_directories(dir);
  {
    std::ofstream os(dir / "compare.csv");
    write_compare_csv(os, r);
  }
  const std::string summary = compare_summary(s, r);
  {
    std::ofstream os(dir / "compare_summary.json");
    os << summary;
  }
  if (!c.quiet) std::cout << summary;
  if (r.aborted) {
    std::fprintf(stderr, "comparison aborted: %s\n", r.diagnosis.c_str());
    return exit_verdict;
  }
  return exit_ok;
}

int cmd_sweep(const Common& c) {
  const Scenario s = load_scenario(c.config);
  const auto rows = sweep(s);
  const fs::path dir = out_dir(c, s);
  fs::create_directories(dir);
  std::ofstream os(dir / "sweep.csv");
  write_sweep_csv(os, rows);
  if (!c.quiet) write_sweep_csv(std::cout, rows);
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hapto-sim: chemotaxis-haptotaxis simulations"};
  app.require_subcommand(1);
  Common common;
  ConstantsArgs ca;

  auto* constants = app.add_subcommand("constants", "print kernel and blow-up constants");
  add_common(constants, common, false);
  constants->add_option("--m", ca.m, "total mass");
  constants->add_option("--chi", ca.chi, "chemotactic sensitivity");
  constants->add_option("--xi", ca.xi, "haptotactic sensitivity");
  constants->add_option("--eta", ca.eta, "ECM remodelling rate");
  constants->add_option("--lx", ca.lx, "domain width");
  constants->add_option("--ly", ca.ly, "domain height");
  constants->add_option("--eps", ca.eps, "concentration parameter of the blow-up family");
  constants->add_option("--k", ca.k, "K = max(1, sup w0)");
  auto* gen = app.add_subcommand("gen-init", "write initial data snapshots");
  add_common(gen, common);
  auto* runc = app.add_subcommand("run", "run a scenario");
  add_common(runc, common);
  auto* cmp = app.add_subcommand("compare", "lockstep comparison with the chemotaxis-only system");
  add_common(cmp, common);
  auto* sw = app.add_subcommand("sweep", "parameter sweep");
  add_common(sw, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? exit_ok : exit_usage;
  }

  try {
    if (constants->parsed()) return cmd_constants(common, ca);
    if (gen->parsed()) return cmd_gen_init(common);
    if (runc->parsed()) return cmd_run(common);
    if (cmp->parsed()) return cmd_compare(common);
    if (sw->parsed()) return cmd_sweep(common);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_solver;
  }
  return exit_usage;
}
