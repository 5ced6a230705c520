#ifndef HAPTO_RUNNER_HPP
#define HAPTO_RUNNER_HPP

// Scenario execution: single runs with artifacts, the lockstep comparison
// against the chemotaxis-only system, and parameter sweeps.

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "hapto/constants.hpp"
#include "hapto/diagnostics.hpp"
#include "hapto/error.hpp"
#include "hapto/initdata.hpp"
#include "hapto/model.hpp"
#include "hapto/run.hpp"
#include "hapto/scenario.hpp"
#include "hapto/snapshot.hpp"

namespace hapto {

enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_config = 2, exit_solver = 3, exit_verdict = 4 };

/// Maps library errors onto CLI exit codes.
inline int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::config_error:
    case ErrorCode::io_error:
    case ErrorCode::invalid_domain:
    case ErrorCode::invalid_mass:
    case ErrorCode::invalid_argument:
      return exit_config;
    default:
      return exit_solver;
  }
}

/// Flat JSON object with numbers at 17 significant digits.
class FlatJson {
 public:
  void add(const std::string& key, double v) {
    char buf[64];
    if (std::isfinite(v)) std::snprintf(buf, sizeof buf, "%.17g", v);
    else std::snprintf(buf, sizeof buf, "\"%s\"", std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf"));
    items_.emplace_back(key, buf);
  }
  void add(const std::string& key, long long v) { items_.emplace_back(key, std::to_string(v)); }
  void add(const std::string& key, bool v) { items_.emplace_back(key, v ? "true" : "false"); }
  void add(const std::string& key, const std::string& v) {
    std::string q = "\"";
    for (char c : v) {
      if (c == '"' || c == '\\') q += '\\';
      if (c == '\n') { q += "\\n"; continue; }
      q += c;
    }
    items_.emplace_back(key, q + "\"");
  }
  void add(const std::string& key, const char* v) { add(key, std::string(v)); }

  std::string str() const {
    std::string s = "{\n";
    for (std::size_t k = 0; k < items_.size(); ++k) {
      s += "  \"" + items_[k].first + "\": " + items_[k].second;
      s += k + 1 < items_.size() ? ",\n" : "\n";
    }
    return s + "}\n";
  }

 private:
  std::vector<std::pair<std::string, std::string>> items_;
};

/// Records diagnostics, optionally streaming CSV rows and snapshots.
class RecordingObserver : public Observer {
 public:
  RecordingObserver(const Params& p, std::ostream* csv, std::optional<BlowupTracker> tracker = {})
      : p_(p), csv_(csv), tracker_(std::move(tracker)) {}

  void enable_snapshots(std::filesystem::path dir, int every, bool pgm) {
    snap_dir_ = std::move(dir);
    snap_every_ = every;
    pgm_ = pgm;
  }

  void start(const State& s) override {
    if (tracker_) tracker_->observe(s);
    if (snap_every_ > 0) write_snapshots(s);
  }

  void observe(const State& prev, const State& cur, const StepInfo& info) override {
    records.push_back(make_record(prev, cur, p_, info.dt, info.blowup));
    if (csv_) write_diag_row(*csv_, records.back());
    if (tracker_) tracker_->observe(cur);
    if (snap_every_ > 0 && records.size() % static_cast<std::size_t>(snap_every_) == 0)
      write_snapshots(cur);
    last_ = cur.t;
  }

  /// Writes the final state if the periodic schedule missed it.
  void finish(const State& s) {
    if (snap_every_ > 0 && s.t != written_t_) write_snapshots(s);
  }

  const std::optional<BlowupTracker>& tracker() const { return tracker_; }

  std::vector<DiagRecord> records;

 private:
  void write_snapshots(const State& s) {
    char tag[32];
    std::snprintf(tag, sizeof tag, "%06d", snap_index_++);
    write_snapshot(snap_dir_ / ("u_" + std::string(tag) + ".hsim"), s.u, s.t);
    write_snapshot(snap_dir_ / ("v_" + std::string(tag) + ".hsim"), s.v, s.t);
    write_snapshot(snap_dir_ / ("w_" + std::string(tag) + ".hsim"), s.w, s.t);
    if (pgm_) write_pgm(snap_dir_ / ("u_" + std::string(tag) + ".pgm"), s.u);
    written_t_ = s.t;
  }

  Params p_;
  std::ostream* csv_;
  std::optional<BlowupTracker> tracker_;
  std::filesystem::path snap_dir_;
  int snap_every_ = 0;
  bool pgm_ = false;
  int snap_index_ = 0;
  double written_t_ = -1.0;
  double last_ = 0.0;
};

/// Default decay-fit window: [max(delta, 1), t_end] unless overridden.
inline std::pair<double, double> fit_window(const Scenario& s, double delta) {
  double a = s.fit_t_start;
  if (a < 0.0) a = std::isfinite(delta) ? std::max(delta, 1.0) : 1.0;
  const double b = s.fit_t_end < 0.0 ? s.t_end : s.fit_t_end;
  return {a, b};
}

inline std::optional<RateFit> try_fit(const std::vector<std::pair<double, double>>& series,
                                      double a, double b) {
  if (!(a < b)) return std::nullopt;
  try {
    return fit_decay_rate(series, a, b);
  } catch (const Error&) {
    return std::nullopt;
  }
}

struct RunFlags {
  std::optional<std::filesystem::path> out_dir;  // overrides the scenario's output_dir
  bool quiet = false;
  bool write_files = true;
};

struct ScenarioOutcome {
  int exit_code = exit_ok;
  std::string verdict;  // "bounded" or "blowup"
  Params params;
  KernelConstants constants;
  RunResult result;
  std::vector<DiagRecord> records;
  std::optional<RateFit> w_fit;
  std::optional<BlowupReport> blowup_report;
  std::vector<std::string> warnings;
  double initial_linf_u = 0.0;
  std::string summary;
};

inline KernelConstants scenario_constants(const Scenario& s, const Params& p, double m) {
  return kernel_constants(m, p.eta, s.domain);
}

inline ScenarioOutcome run_scenario(const Scenario& s, const RunFlags& flags = {}) {
  ScenarioOutcome out;
  InitialData init = build_initial_data(s);
  out.warnings = init.warnings;
  const double m = integrate(init.u);
  out.params = resolved_params(s, m);
  const Params& p = out.params;
  out.constants = scenario_constants(s, p, m);

  State s0 = make_state(std::move(init.u), std::move(init.v), std::move(init.w), p, s.control);
  out.initial_linf_u = norm_linf(s0.u);
  const double k_clamp = s0.k_clamp;

  const std::filesystem::path dir = flags.out_dir.value_or(s.output_dir);
  std::ofstream csv;
  if (flags.write_files) {
    std::filesystem::create_directories(dir);
    csv.open(dir / "diagnostics.csv");
    if (!csv) throw Error(ErrorCode::io_error, "cannot write " + (dir / "diagnostics.csv").string());
    write_diag_header(csv);
  }
  std::optional<BlowupTracker> tracker;
  if (init.concentrated) tracker.emplace(init.inf_v_eps, m);
  RecordingObserver rec(p, flags.write_files ? &csv : nullptr, std::move(tracker));
  if (flags.write_files && s.snapshot_every > 0) {
    std::filesystem::create_directories(dir / "snapshots");
    rec.enable_snapshots(dir / "snapshots", s.snapshot_every, s.pgm);
  }

  RunOptions opt;
  opt.t_end = s.t_end;
  opt.observe_every = s.observe_every;
  opt.thresholds = default_thresholds(s0, s.control, s.blowup_threshold);
  Observer* obs[] = {&rec};
  out.result = run(std::move(s0), p, s.control, opt, obs);
  rec.finish(out.result.state);
  out.records = std::move(rec.records);
  out.verdict = out.result.blowup ? "blowup" : "bounded";

  if (p.tracks_w() && !out.result.blowup) {
    std::vector<std::pair<double, double>> series;
    for (const auto& r : out.records) series.emplace_back(r.t, r.linf_w);
    const auto [a, b] = fit_window(s, out.constants.delta);
    out.w_fit = try_fit(series, a, b);
  }
  if (rec.tracker())
    out.blowup_report = blowup_bound_check(*rec.tracker(), out.result.blowup, p, m,
                                           init.family.eps, k_clamp, s.domain);

  if ((s.expect == Expect::bounded && out.result.blowup) ||
      (s.expect == Expect::blowup && !out.result.blowup))
    out.exit_code = exit_verdict;

  FlatJson j;
  j.add("name", s.name);
  j.add("verdict", out.verdict);
  j.add("exit_code", static_cast<long long>(out.exit_code));
  j.add("steps", static_cast<long long>(out.result.steps));
  j.add("t_final", out.result.state.t);
  j.add("stop_reason", out.result.reason);
  j.add("blowup", out.result.blowup);
  j.add("blowup_time", out.result.blowup ? out.result.blowup_time
                                         : std::numeric_limits<double>::quiet_NaN());
  j.add("mass", m);
  j.add("chi", p.chi);
  j.add("xi", p.xi);
  j.add("eta", p.eta);
  j.add("tau", static_cast<long long>(p.tau));
  j.add("mode", to_string(p.mode));
  j.add("v_inf", out.constants.v_inf_m);
  j.add("delta", out.constants.delta);
  j.add("initial_linf_u", out.initial_linf_u);
  const State& f = out.result.state;
  j.add("final_mass_u", integrate(f.u));
  j.add("final_linf_u", norm_linf(f.u));
  j.add("final_linf_v", norm_linf(f.v));
  j.add("final_linf_w", norm_linf(f.w));
  j.add("final_l1_v", norm_l1(f.v));
  if (out.w_fit) {
    j.add("w_decay_rate", out.w_fit->rate);
    j.add("w_decay_r2", out.w_fit->r2);
    j.add("w_fit_t_start", out.w_fit->t_a);
    j.add("w_fit_t_end", out.w_fit->t_b);
  }
  if (out.blowup_report) {
    const auto& br = *out.blowup_report;
    j.add("eps", init.family.eps);
    j.add("bound_applicable", br.applicable);
    j.add("bound_uv", br.bound_uv);
    j.add("sup_uvplus", br.sup_uvplus);
    j.add("sup_uv", br.sup_uv);
    j.add("sup_u", br.sup_u);
    j.add("sup_v", br.sup_v);
    j.add("alternative", std::string(1, br.alternative));
    j.add("bound_note", br.note);
  }
  for (std::size_t k = 0; k < out.warnings.size(); ++k)
    j.add("warning_" + std::to_string(k), out.warnings[k]);
  out.summary = j.str();
  if (flags.write_files) {
    std::ofstream sj(dir / "summary.json");
    sj << out.summary;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lockstep comparison with the chemotaxis-only system.

struct CompareSample {
  double t = 0.0;
  double diff_u = 0.0;  // ||u - u0||_inf
  double diff_v = 0.0;  // ||v - v0||_inf
  double linf_w = 0.0;
};

struct CompareReport {
  std::vector<CompareSample> samples;
  std::optional<RateFit> u_fit;
  std::optional<RateFit> v_fit;
  std::optional<RateFit> w_fit;
  bool identical = true;  // every difference exactly zero
  bool aborted = false;
  std::string diagnosis;
  double fit_t_a = 0.0;
  double fit_t_b = 0.0;
  std::size_t steps = 0;
};

inline double max_abs_diff(const Field& a, const Field& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

/// Differences below this multiple of the solution scale are treated as
/// roundoff and left out of the rate fits.
inline constexpr double kCompareNoiseFloor = 1e-12;

inline CompareReport compare_runner(const Scenario& s) {
  if (s.params.mode != Mode::full)
    throw Error(ErrorCode::config_error, "compare requires mode = full");
  InitialData init = build_initial_data(s);
  const double m = integrate(init.u);
  const Params pf = resolved_params(s, m);
  Params pk = pf;
  pk.mode = Mode::chemotaxis_only;
  const KernelConstants kc = kernel_constants(m, pf.eta, s.domain);
  State full = make_state(init.u, init.v, init.w, pf, s.control);
  State ks = make_state(std::move(init.u), std::move(init.v), std::move(init.w), pk, s.control);

  const BlowupThresholds th_f = default_thresholds(full, s.control, s.blowup_threshold);
  const BlowupThresholds th_k = default_thresholds(ks, s.control, s.blowup_threshold);
  CompareReport rep;
  auto sample = [&] {
    CompareSample c{full.t, max_abs_diff(full.u, ks.u), max_abs_diff(full.v, ks.v), norm_linf(full.w)};
    if (c.diff_u != 0.0 || c.diff_v != 0.0) rep.identical = false;
    rep.samples.push_back(c);
  };
  sample();

  const double t_slack = 1e-12 * std::max(1.0, s.t_end);
  while (full.t < s.t_end - t_slack) {
    StepRequest rf;
    rf.dt_limit = s.t_end - full.t;
    StepResult a = step(full, pf, s.control, rf);
    StepRequest rk;
    rk.forced_dt = a.dt;
    StepResult b = step(ks, pk, s.control, rk);
    ++rep.steps;
    const bool fa = blowup_detector(a.state, a.dt, a.cfl_limited, th_f);
    const bool fb = blowup_detector(b.state, b.dt, false, th_k);
    full = std::move(a.state);
    ks = std::move(b.state);
    if (fa || fb) {
      rep.aborted = true;
      rep.diagnosis = std::string(fa ? "coupled" : "chemotaxis-only") +
                      " run fired the blow-up detector at t=" + std::to_string(full.t);
      sample();
      return rep;
    }
    if (rep.steps % static_cast<std::size_t>(s.observe_every) == 0 || !(full.t < s.t_end - t_slack))
      sample();
  }

  const auto [ta, tb] = fit_window(s, kc.delta);
  rep.fit_t_a = ta;
  rep.fit_t_b = tb;
  const double scale = std::max(1.0, norm_linf(full.u));
  std::vector<std::pair<double, double>> su, sv, sw;
  for (const auto& c : rep.samples) {
    if (c.diff_u > kCompareNoiseFloor * scale) su.emplace_back(c.t, c.diff_u);
    if (c.diff_v > kCompareNoiseFloor * scale) sv.emplace_back(c.t, c.diff_v);
    if (c.linf_w > 0.0) sw.emplace_back(c.t, c.linf_w);
  }
  rep.u_fit = try_fit(su, ta, tb);
  rep.v_fit = try_fit(sv, ta, tb);
  rep.w_fit = try_fit(sw, ta, tb);
  return rep;
}

inline void write_compare_csv(std::ostream& os, const CompareReport& r) {
  os << "t,diff_u,diff_v,linf_w\n";
  char buf[128];
  for (const auto& c : r.samples) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", c.t, c.diff_u, c.diff_v, c.linf_w);
    os << buf;
  }
}

inline std::string compare_summary(const Scenario& s, const CompareReport& r) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  FlatJson j;
  j.add("name", s.name);
  j.add("steps", static_cast<long long>(r.steps));
  j.add("aborted", r.aborted);
  if (r.aborted) j.add("diagnosis", r.diagnosis);
  j.add("identical", r.identical);
  j.add("fit_t_start", r.fit_t_a);
  j.add("fit_t_end", r.fit_t_b);
  j.add("u_diff_rate", r.u_fit ? r.u_fit->rate : nan);
  j.add("u_diff_r2", r.u_fit ? r.u_fit->r2 : nan);
  j.add("v_diff_rate", r.v_fit ? r.v_fit->rate : nan);
  j.add("v_diff_r2", r.v_fit ? r.v_fit->r2 : nan);
  j.add("w_decay_rate", r.w_fit ? r.w_fit->rate : nan);
  j.add("w_decay_r2", r.w_fit ? r.w_fit->r2 : nan);
  if (!r.samples.empty()) {
    j.add("final_diff_u", r.samples.back().diff_u);
    j.add("final_diff_v", r.samples.back().diff_v);
  }
  return j.str();
}

// ---------------------------------------------------------------------------
// Parameter sweeps.

struct SweepRow {
  double m = 0.0, chi = 0.0, xi = 0.0, eta = 0.0, eps = 0.0;
  std::string verdict;  // bounded, blowup or error
  std::string error;
  double blowup_time = std::numeric_limits<double>::quiet_NaN();
  double sup_u = 0.0, sup_v = 0.0, sup_uv = 0.0;
  double v_inf = 0.0, delta = 0.0;
  double blowup_bound = std::numeric_limits<double>::quiet_NaN();
  double w_rate = std::numeric_limits<double>::quiet_NaN();
  double w_r2 = std::numeric_limits<double>::quiet_NaN();
};

/// Tracks sup norms without writing anything.
class SupObserver : public Observer {
 public:
  void start(const State& s) override { take(s); }
  void observe(const State&, const State& cur, const StepInfo&) override {
    take(cur);
    w_series.emplace_back(cur.t, norm_linf(cur.w));
  }
  double sup_u = 0.0, sup_v = 0.0, sup_uv = 0.0;
  std::vector<std::pair<double, double>> w_series;

 private:
  void take(const State& s) {
    sup_u = std::max(sup_u, norm_linf(s.u));
    sup_v = std::max(sup_v, norm_linf(s.v));
    sup_uv = std::max(sup_uv, pairing(s.u, s.v));
  }
};

/// Scenarios for every combination, in m, chi, xi, eta, eps order.
inline std::vector<Scenario> sweep_points(const Scenario& base) {
  auto or_base = [](const std::vector<double>& v, double b) {
    return v.empty() ? std::vector<double>{b} : v;
  };
  const auto ms = or_base(base.sweep.m, base.init.mass);
  const auto chis = or_base(base.sweep.chi, base.params.chi);
  const auto xis = or_base(base.sweep.xi, base.params.xi);
  const auto etas = base.sweep.eta.empty() ? std::vector<EtaSpec>{base.eta} : base.sweep.eta;
  const auto epss = or_base(base.sweep.eps, base.init.eps);
  if (base.init.type == InitType::snapshot && !base.sweep.m.empty())
    throw Error(ErrorCode::config_error, "sweep.m cannot be combined with snapshot init");
  std::vector<Scenario> pts;
  for (double m : ms)
    for (double chi : chis)
      for (double xi : xis)
        for (const EtaSpec& eta : etas)
          for (double eps : epss) {
            Scenario s = base;
            s.sweep = {};
            s.init.mass = m;
            s.params.chi = chi;
            s.params.xi = xi;
            s.eta = eta;
            s.init.eps = eps;
            pts.push_back(std::move(s));
          }
  return pts;
}

inline SweepRow sweep_one(const Scenario& s) {
  SweepRow row;
  row.m = s.init.mass;
  row.chi = s.params.chi;
  row.xi = s.params.xi;
  row.eps = s.init.eps;
  try {
    InitialData init = build_initial_data(s);
    const double m = integrate(init.u);
    row.m = m;
    const Params p = resolved_params(s, m);
    row.eta = p.eta;
    const KernelConstants kc = kernel_constants(m, p.eta, s.domain);
    row.v_inf = kc.v_inf_m;
    row.delta = kc.delta;
    State s0 = make_state(std::move(init.u), std::move(init.v), std::move(init.w), p, s.control);
    try {
      row.blowup_bound = blowup_lower_bound(m, p.chi, p.xi, p.eta, s0.k_clamp, s.domain.diam());
      if (init.concentrated) row.blowup_bound *= std::log(1.0 / init.family.eps);
    } catch (const Error& e) {
      // Outside the bound's regime the column stays NaN.
      if (e.code() == ErrorCode::alternative_a_forced)
        row.blowup_bound = std::numeric_limits<double>::infinity();
    }
    RunOptions opt;
    opt.t_end = s.t_end;
    opt.observe_every = s.observe_every;
    opt.thresholds = default_thresholds(s0, s.control, s.blowup_threshold);
    SupObserver sup;
    Observer* obs[] = {&sup};
    const RunResult res = run(std::move(s0), p, s.control, opt, obs);
    row.verdict = res.blowup ? "blowup" : "bounded";
    if (res.blowup) row.blowup_time = res.blowup_time;
    row.sup_u = sup.sup_u;
    row.sup_v = sup.sup_v;
    row.sup_uv = sup.sup_uv;
    if (p.tracks_w() && !res.blowup) {
      const auto [a, b] = fit_window(s, kc.delta);
      if (auto f = try_fit(sup.w_series, a, b)) {
        row.w_rate = f->rate;
        row.w_r2 = f->r2;
      }
    }
  } catch (const std::exception& e) {
    row.verdict = "error";
    row.error = e.what();
  }
  return row;
}

/// Runs every sweep point; rows come back in parameter order whatever the
/// completion order. `threads` = 0 uses the hardware concurrency.
inline std::vector<SweepRow> sweep(const Scenario& base, unsigned threads = 0) {
  const std::vector<Scenario> pts = sweep_points(base);
  std::vector<SweepRow> rows(pts.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(pts.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < pts.size();) rows[k] = sweep_one(pts[k]);
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return rows;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "m,chi,xi,eta,eps,verdict,blowup_time,sup_u,sup_v,sup_uv,v_inf,delta,blowup_bound,"
        "w_rate,w_r2,error\n";
  char buf[512];
  for (const auto& r : rows) {
    std::string err = r.error;
    for (char& c : err)
      if (c == ',' || c == '\n') c = ';';
    std::snprintf(buf, sizeof buf,
                  "%.17g,%.17g,%.17g,%.17g,%.17g,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                  "%.17g,",
                  r.m, r.chi, r.xi, r.eta, r.eps, r.verdict.c_str(), r.blowup_time, r.sup_u,
                  r.sup_v, r.sup_uv, r.v_inf, r.delta, r.blowup_bound, r.w_rate, r.w_r2);
    os << buf << err << '\n';
  }
}

}  // namespace hapto

#endif  // HAPTO_RUNNER_HPP
