#ifndef HAPTO_RUN_HPP
#define HAPTO_RUN_HPP

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "hapto/diagnostics.hpp"
#include "hapto/error.hpp"
#include "hapto/model.hpp"

namespace hapto {

struct StepInfo {
  std::size_t step = 0;
  double dt = 0.0;
  bool cfl_limited = false;
  bool blowup = false;
};

/// Receives read-only snapshots; `observe` gets the state before and after
/// the most recent step.
class Observer {
 public:
  virtual ~Observer() = default;
  virtual void start(const State&) {}
  virtual void observe(const State& prev, const State& cur, const StepInfo& info) = 0;
};

struct RunOptions {
  double t_end = 0.0;
  int observe_every = 1;
  BlowupThresholds thresholds;
  bool stop_on_blowup = true;
  const std::vector<double>* forced_dts = nullptr;  // lockstep schedule
};

struct RunResult {
  State state;
  std::size_t steps = 0;
  bool blowup = false;
  double blowup_time = 0.0;
  std::string reason;  // "t_end", "blowup" or "schedule"
  std::vector<double> dts;
};

inline RunResult run(State s, const Params& p, const StepControl& c, const RunOptions& opt,
                     std::span<Observer* const> observers = {}) {
  p.validate();
  c.validate();
  RunResult res;
  for (Observer* o : observers) o->start(s);
  const double t_end = opt.t_end;
  if (!(t_end >= s.t)) throw Error(ErrorCode::invalid_argument, "t_end precedes the start time");
  const double t_slack = 1e-12 * std::max(1.0, std::abs(t_end));
  const int every = std::max(1, opt.observe_every);

  while (s.t < t_end - t_slack) {
    StepRequest req;
    req.dt_limit = t_end - s.t;
    if (opt.forced_dts) {
      if (res.steps >= opt.forced_dts->size()) {
        res.reason = "schedule";
        break;
      }
      req.forced_dt = (*opt.forced_dts)[res.steps];
    }
    StepResult sr;
    try {
      sr = step(s, p, c, req);
    } catch (const Error& e) {
      throw Error(e.code(), std::string(e.what()) + " (step from t=" + std::to_string(s.t) + ")");
    }
    ++res.steps;
    res.dts.push_back(sr.dt);
    const bool fired = blowup_detector(sr.state, sr.dt, sr.cfl_limited, opt.thresholds);
    const bool last = fired || !(sr.state.t < t_end - t_slack);
    if (!observers.empty() && (res.steps % static_cast<std::size_t>(every) == 0 || last)) {
      const StepInfo info{res.steps, sr.dt, sr.cfl_limited, fired};
      for (Observer* o : observers) o->observe(s, sr.state, info);
    }
    s = std::move(sr.state);
    if (fired && !res.blowup) {
      res.blowup = true;
      res.blowup_time = s.t;
      if (opt.stop_on_blowup) {
        res.reason = "blowup";
        break;
      }
    }
  }
  if (res.reason.empty()) res.reason = "t_end";
  res.state = std::move(s);
  return res;
}

}  // namespace hapto

#endif  // HAPTO_RUN_HPP
