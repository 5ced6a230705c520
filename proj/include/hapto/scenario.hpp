#ifndef HAPTO_SCENARIO_HPP
#define HAPTO_SCENARIO_HPP

// Flat "key = value" scenario files. '#' starts a comment. Unknown keys are
// errors. `eta` (and entries of `sweep.eta`) may be written relative to the
// kernel threshold, e.g. "0.9*v_inf" or "v_inf".

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hapto/constants.hpp"
#include "hapto/error.hpp"
#include "hapto/grid.hpp"
#include "hapto/initdata.hpp"
#include "hapto/model.hpp"
#include "hapto/snapshot.hpp"

namespace hapto {

enum class InitType { bump, blowup_family, snapshot, uniform };
enum class Expect { any, bounded, blowup };

struct InitSpec {
  InitType type = InitType::bump;
  double mass = 2.0 * std::numbers::pi;
  Point center{0.5, 0.5};
  double radius = 0.25;
  double background = 0.0;  // fraction of the mass spread uniformly
  double v_mass = 0.0;      // mass of the v0 bump (same shape); 0 gives v0 = 0
  double w0 = 0.5;
  double w_amp = 0.0;       // w0 * (1 + w_amp cos(pi x/Lx) cos(pi y/Ly))
  double eps = 0.05;
  Point x0{0.0, 0.0};
  std::filesystem::path u_file, v_file, w_file;
};

/// eta = value, or eta = factor * v_inf^m when `relative`.
struct EtaSpec {
  double value = 0.0;
  bool relative = false;

  double resolve(double m, const DomainSpec& d) const {
    if (!relative) return value;
    return value * v_threshold(m, d.diam(), infinite_time);
  }
};

struct SweepSpec {
  std::vector<double> m, chi, xi, eps;
  std::vector<EtaSpec> eta;
  bool empty() const { return m.empty() && chi.empty() && xi.empty() && eps.empty() && eta.empty(); }
};

struct Scenario {
  std::string name = "scenario";
  DomainSpec domain;
  int nx = 64;
  int ny = 64;
  Params params;
  EtaSpec eta;
  InitSpec init;
  StepControl control;
  double t_end = 0.0;
  int observe_every = 1;
  int snapshot_every = 0;
  bool pgm = false;
  std::filesystem::path output_dir = "out";
  double blowup_threshold = 1e4;  // multiple of the initial sup norm of u
  Expect expect = Expect::any;
  double fit_t_start = -1.0;      // < 0: max(delta, 1)
  double fit_t_end = -1.0;        // < 0: t_end
  SweepSpec sweep;

  Grid grid() const { return Grid::make(domain, nx, ny); }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "name", "lx", "ly", "nx", "ny", "chi", "xi", "eta", "tau", "mode", "t_end", "cfl",
      "dt_max", "dt_min", "tol", "observe_every", "snapshot_every", "pgm", "output_dir",
      "blowup_threshold", "expect", "fit.t_start", "fit.t_end", "init.type", "init.mass",
      "init.cx", "init.cy", "init.radius", "init.background", "init.v_mass", "init.w0",
      "init.w_amp", "init.eps", "init.x0", "init.y0", "init.u_file", "init.v_file",
      "init.w_file", "sweep.m", "sweep.chi", "sweep.xi", "sweep.eta", "sweep.eps"};
  return keys;
}

inline const std::vector<std::string>& required_keys() {
  static const std::vector<std::string> keys = {"lx", "ly", "nx", "ny", "chi", "xi",
                                                "eta", "tau", "t_end", "init.type"};
  return keys;
}

struct Entry {
  std::string value;
  int line = 0;
};

inline double parse_double(const std::string& key, const Entry& e) {
  try {
    std::size_t used = 0;
    const double v = std::stod(e.value, &used);
    if (used != e.value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::config_error,
                "line " + std::to_string(e.line) + ": " + key + " expects a number, got '" +
                    e.value + "'");
  }
}

inline int parse_int(const std::string& key, const Entry& e) {
  const double v = parse_double(key, e);
  if (v != std::floor(v) || std::abs(v) > 1e9)
    throw Error(ErrorCode::config_error,
                "line " + std::to_string(e.line) + ": " + key + " expects an integer");
  return static_cast<int>(v);
}

inline EtaSpec parse_eta(const std::string& text, int line) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  const std::string tag = "v_inf";
  if (s.size() >= tag.size() && s.compare(s.size() - tag.size(), tag.size(), tag) == 0) {
    std::string factor = s.substr(0, s.size() - tag.size());
    if (factor.empty()) return {1.0, true};
    if (factor.back() != '*')
      throw Error(ErrorCode::config_error,
                  "line " + std::to_string(line) + ": eta must be a number or '<f>*v_inf'");
    factor.pop_back();
    return {parse_double("eta", {factor, line}), true};
  }
  return {parse_double("eta", {s, line}), false};
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace detail

/// Parses scenario text. `base_dir` resolves relative snapshot paths.
inline Scenario parse_scenario(std::istream& is, const std::filesystem::path& base_dir = {}) {
  std::map<std::string, detail::Entry> entries;
  std::string raw;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::config_error,
                  "line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (!detail::known_keys().count(key))
      throw Error(ErrorCode::config_error,
                  "line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (entries.count(key))
      throw Error(ErrorCode::config_error,
                  "line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    if (value.empty())
      throw Error(ErrorCode::config_error,
                  "line " + std::to_string(line_no) + ": empty value for '" + key + "'");
    entries[key] = {value, line_no};
  }

  std::vector<std::string> missing;
  for (const auto& k : detail::required_keys())
    if (!entries.count(k)) missing.push_back(k);
  if (!missing.empty()) {
    std::string msg = "missing required keys:";
    for (const auto& k : missing) msg += " " + k;
    throw Error(ErrorCode::config_error, msg);
  }

  Scenario s;
  auto num = [&](const char* key, double& dst) {
    if (auto it = entries.find(key); it != entries.end()) dst = detail::parse_double(key, it->second);
  };
  auto integer = [&](const char* key, int& dst) {
    if (auto it = entries.find(key); it != entries.end()) dst = detail::parse_int(key, it->second);
  };
  auto text = [&](const char* key) -> const detail::Entry* {
    auto it = entries.find(key);
    return it == entries.end() ? nullptr : &it->second;
  };
  auto path = [&](const char* key, std::filesystem::path& dst) {
    if (const auto* e = text(key)) {
      std::filesystem::path p = e->value;
      dst = (p.is_relative() && !base_dir.empty()) ? base_dir / p : p;
    }
  };

  if (const auto* e = text("name")) s.name = e->value;
  num("lx", s.domain.lx);
  num("ly", s.domain.ly);
  integer("nx", s.nx);
  integer("ny", s.ny);
  num("chi", s.params.chi);
  num("xi", s.params.xi);
  s.eta = detail::parse_eta(entries.at("eta").value, entries.at("eta").line);
  integer("tau", s.params.tau);
  if (const auto* e = text("mode")) {
    if (e->value == "full") s.params.mode = Mode::full;
    else if (e->value == "chemotaxis-only") s.params.mode = Mode::chemotaxis_only;
    else if (e->value == "haptotaxis-only") s.params.mode = Mode::haptotaxis_only;
    else
      throw Error(ErrorCode::config_error, "line " + std::to_string(e->line) +
                                               ": mode must be full|chemotaxis-only|haptotaxis-only");
  }
  num("t_end", s.t_end);
  num("cfl", s.control.cfl);
  num("dt_max", s.control.dt_max);
  num("dt_min", s.control.dt_min);
  num("tol", s.control.tol);
  integer("observe_every", s.observe_every);
  integer("snapshot_every", s.snapshot_every);
  if (const auto* e = text("pgm")) s.pgm = (e->value == "true" || e->value == "1" || e->value == "yes");
  path("output_dir", s.output_dir);
  num("blowup_threshold", s.blowup_threshold);
  if (const auto* e = text("expect")) {
    if (e->value == "any") s.expect = Expect::any;
    else if (e->value == "bounded") s.expect = Expect::bounded;
    else if (e->value == "blowup") s.expect = Expect::blowup;
    else
      throw Error(ErrorCode::config_error,
                  "line " + std::to_string(e->line) + ": expect must be any|bounded|blowup");
  }
  num("fit.t_start", s.fit_t_start);
  num("fit.t_end", s.fit_t_end);

  if (const auto* e = text("init.type")) {
    if (e->value == "bump") s.init.type = InitType::bump;
    else if (e->value == "blowup-family") s.init.type = InitType::blowup_family;
    else if (e->value == "snapshot") s.init.type = InitType::snapshot;
    else if (e->value == "uniform") s.init.type = InitType::uniform;
    else
      throw Error(ErrorCode::config_error, "line " + std::to_string(e->line) +
                                               ": init.type must be bump|blowup-family|snapshot|uniform");
  }
  num("init.mass", s.init.mass);
  num("init.cx", s.init.center.x);
  num("init.cy", s.init.center.y);
  num("init.radius", s.init.radius);
  num("init.background", s.init.background);
  num("init.v_mass", s.init.v_mass);
  num("init.w0", s.init.w0);
  num("init.w_amp", s.init.w_amp);
  num("init.eps", s.init.eps);
  num("init.x0", s.init.x0.x);
  num("init.y0", s.init.x0.y);
  path("init.u_file", s.init.u_file);
  path("init.v_file", s.init.v_file);
  path("init.w_file", s.init.w_file);

  auto list = [&](const char* key, std::vector<double>& dst) {
    if (const auto* e = text(key))
      for (const auto& item : detail::split_list(e->value))
        dst.push_back(detail::parse_double(key, {item, e->line}));
  };
  list("sweep.m", s.sweep.m);
  list("sweep.chi", s.sweep.chi);
  list("sweep.xi", s.sweep.xi);
  list("sweep.eps", s.sweep.eps);
  if (const auto* e = text("sweep.eta"))
    for (const auto& item : detail::split_list(e->value))
      s.sweep.eta.push_back(detail::parse_eta(item, e->line));

  // Semantic validation: collect every violation.
  std::vector<std::string> bad;
  if (!(s.domain.lx > 0.0) || !(s.domain.ly > 0.0)) bad.push_back("lx and ly must be positive");
  if (s.nx < 4 || s.ny < 4) bad.push_back("nx and ny must be >= 4");
  if (!(s.params.chi >= 0.0)) bad.push_back("chi must be >= 0");
  if (!(s.params.xi >= 0.0)) bad.push_back("xi must be >= 0");
  if (!(s.eta.value >= 0.0)) bad.push_back("eta must be >= 0");
  if (s.params.tau != 0 && s.params.tau != 1) bad.push_back("tau must be 0 or 1");
  if (s.params.mode == Mode::haptotaxis_only && s.params.chi != 0.0)
    bad.push_back("haptotaxis-only mode requires chi = 0");
  if (!(s.t_end >= 0.0)) bad.push_back("t_end must be >= 0");
  if (!(s.control.cfl > 0.0 && s.control.cfl < 1.0)) bad.push_back("cfl must lie in (0,1)");
  if (!(s.control.dt_max > 0.0)) bad.push_back("dt_max must be positive");
  if (!(s.control.dt_min > 0.0 && s.control.dt_min < s.control.dt_max))
    bad.push_back("dt_min must lie in (0, dt_max)");
  if (!(s.control.tol > 0.0 && s.control.tol <= 1e-4)) bad.push_back("tol must lie in (0, 1e-4]");
  if (s.observe_every < 1) bad.push_back("observe_every must be >= 1");
  if (s.snapshot_every < 0) bad.push_back("snapshot_every must be >= 0");
  if (!(s.blowup_threshold > 1.0)) bad.push_back("blowup_threshold must exceed 1");
  if (s.init.type != InitType::snapshot && !(s.init.mass > 0.0)) bad.push_back("init.mass must be positive");
  if (!(s.init.background >= 0.0 && s.init.background <= 1.0))
    bad.push_back("init.background must lie in [0,1]");
  if (!(s.init.v_mass >= 0.0)) bad.push_back("init.v_mass must be >= 0");
  if (!(s.init.w0 >= 0.0)) bad.push_back("init.w0 must be >= 0");
  if (!(std::abs(s.init.w_amp) <= 1.0)) bad.push_back("init.w_amp must lie in [-1,1]");
  if (s.init.type == InitType::bump && !(s.init.radius > 0.0)) bad.push_back("init.radius must be positive");
  if (s.init.type == InitType::blowup_family) {
    if (!(s.init.eps > 0.0)) bad.push_back("init.eps must be positive");
    if (!(s.params.chi > 0.0)) bad.push_back("blowup-family initial data needs chi > 0");
  }
  if (s.init.type == InitType::snapshot) {
    for (const auto& [key, file] : {std::pair{"init.u_file", s.init.u_file},
                                    std::pair{"init.w_file", s.init.w_file}}) {
      if (file.empty()) bad.push_back(std::string(key) + " is required for snapshot init");
      else if (!std::filesystem::exists(file)) bad.push_back(std::string(key) + " not found: " + file.string());
    }
    if (!s.init.v_file.empty() && !std::filesystem::exists(s.init.v_file))
      bad.push_back("init.v_file not found: " + s.init.v_file.string());
  }
  for (double m : s.sweep.m) if (!(m > 0.0)) bad.push_back("sweep.m entries must be positive");
  for (double e : s.sweep.eps) if (!(e > 0.0)) bad.push_back("sweep.eps entries must be positive");
  if (!bad.empty()) {
    std::string msg = "invalid scenario:";
    for (const auto& b : bad) msg += "\n  - " + b;
    throw Error(ErrorCode::config_error, msg);
  }
  return s;
}

inline Scenario load_scenario(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw Error(ErrorCode::config_error, "cannot read " + file.string());
  Scenario s = parse_scenario(is, file.parent_path());
  if (s.name == "scenario") s.name = file.stem().string();
  return s;
}

struct InitialData {
  Field u, v, w;
  bool concentrated = false;  // blow-up family data
  BlowupFamilySpec family;    // resolved spec when concentrated
  double inf_v_eps = 0.0;
  std::vector<std::string> warnings;
};

inline InitialData build_initial_data(const Scenario& s) {
  const Grid g = s.grid();
  InitialData d;
  auto w_profile = [&] {
    const double lx = s.domain.lx;
    const double ly = s.domain.ly;
    return Field::sample(g, [&](double x, double y) {
      return s.init.w0 * (1.0 + s.init.w_amp * std::cos(std::numbers::pi * x / lx) *
                                    std::cos(std::numbers::pi * y / ly));
    });
  };
  switch (s.init.type) {
    case InitType::uniform: {
      d.u = Field(g, s.init.mass / s.domain.area());
      d.v = Field(g, s.init.v_mass / s.domain.area());
      d.w = w_profile();
      break;
    }
    case InitType::bump: {
      const double spread = s.init.background * s.init.mass;
      d.u = bump(g, s.init.center, s.init.radius, s.init.mass - spread);
      for (double& x : d.u.values) x += spread / s.domain.area();
      d.v = s.init.v_mass > 0.0 ? bump(g, s.init.center, s.init.radius, s.init.v_mass) : Field(g);
      d.w = w_profile();
      break;
    }
    case InitType::blowup_family: {
      auto rf = resolve_family(g, {s.init.eps, s.init.mass, s.params.chi, s.init.x0});
      d.warnings = rf.warnings;
      d.family = rf.spec;
      d.concentrated = true;
      const Field ve = v_eps(g, rf.spec);
      d.u = u_eps(ve, rf.spec);
      d.inf_v_eps = field_min(ve);
      d.v = shifted_initial_v(ve);
      d.w = w_profile();
      break;
    }
    case InitType::snapshot: {
      auto load = [&](const std::filesystem::path& p) {
        Snapshot snap = read_snapshot(p);
        if (!(snap.field.grid == g))
          throw Error(ErrorCode::config_error, p.string() + " does not match the scenario grid");
        return std::move(snap.field);
      };
      d.u = load(s.init.u_file);
      d.w = load(s.init.w_file);
      d.v = s.init.v_file.empty() ? Field(g) : load(s.init.v_file);
      break;
    }
  }
  return d;
}

/// Total mass of u implied by the scenario (reads the u snapshot if needed).
inline double scenario_mass(const Scenario& s) {
  if (s.init.type == InitType::snapshot) return integrate(read_snapshot(s.init.u_file).field);
  return s.init.mass;
}

/// Params with eta resolved against v_inf^m for mass m.
inline Params resolved_params(const Scenario& s, double m) {
  Params p = s.params;
  p.eta = s.eta.resolve(m, s.domain);
  return p;
}

}  // namespace hapto

#endif  // HAPTO_SCENARIO_HPP
