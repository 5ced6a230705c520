#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>

#include "hapto/scenario.hpp"

using namespace hapto;
constexpr double kPi = std::numbers::pi;

namespace {

const char* kMinimal =
    "lx = 1\nly = 1\nnx = 16\nny = 16\nchi = 1\nxi = 0.5\neta = 0.01\ntau = 1\nt_end = 1\n"
    "init.type = bump\n";

std::string config_error(const std::string& text) {
  std::istringstream is(text);
  try {
    parse_scenario(is);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::config_error);
    return e.what();
  }
  ADD_FAILURE() << "no error for:\n" << text;
  return {};
}

}  // namespace

TEST(Scenario, EmptyFileListsRequiredKeys) {
  const std::string msg = config_error("");
  for (const char* k : {"lx", "ly", "nx", "ny", "chi", "xi", "eta", "tau", "t_end", "init.type"})
    EXPECT_NE(msg.find(k), std::string::npos) << k;
}

TEST(Scenario, MinimalParses) {
  std::istringstream is(std::string("# comment line\n") + kMinimal + "mode = full  # trailing\n");
  const Scenario s = parse_scenario(is);
  EXPECT_EQ(s.nx, 16);
  EXPECT_EQ(s.params.tau, 1);
  EXPECT_DOUBLE_EQ(s.eta.value, 0.01);
  EXPECT_FALSE(s.eta.relative);
  EXPECT_EQ(s.init.type, InitType::bump);
  EXPECT_EQ(s.grid().nx, 16);
}

TEST(Scenario, TauTwoRejected) {
  std::string text = kMinimal;
  text.replace(text.find("tau = 1"), 7, "tau = 2");
  EXPECT_NE(config_error(text).find("tau must be 0 or 1"), std::string::npos);
}

TEST(Scenario, UnknownKeyReportsLine) {
  const std::string msg = config_error(std::string(kMinimal) + "\nbogus = 3\n");
  EXPECT_NE(msg.find("line 12"), std::string::npos);
  EXPECT_NE(msg.find("bogus"), std::string::npos);
}

TEST(Scenario, ParseErrorsReportLine) {
  std::string text = kMinimal;
  text.replace(text.find("ly = 1"), 6, "ly = abc");
  const std::string msg = config_error(text);
  EXPECT_NE(msg.find("line 2"), std::string::npos);
  EXPECT_NE(msg.find("abc"), std::string::npos);
  EXPECT_NE(config_error("lx 1\n").find("line 1"), std::string::npos);
  EXPECT_NE(config_error("lx = 1\nlx = 2\n").find("duplicate"), std::string::npos);
}

TEST(Scenario, EveryViolationListed) {
  std::string text = kMinimal;
  text += "cfl = 1.5\ndt_max = -1\nobserve_every = 0\n";
  text.replace(text.find("chi = 1"), 7, "chi = -1");
  const std::string msg = config_error(text);
  for (const char* k : {"chi", "cfl", "dt_max", "observe_every"}) EXPECT_NE(msg.find(k), std::string::npos) << k;
}

TEST(Scenario, MissingSnapshotFiles) {
  std::string text = kMinimal;
  text.replace(text.find("init.type = bump"), 16, "init.type = snapshot");
  text += "init.u_file = /nonexistent/u.hsim\n";
  const std::string msg = config_error(text);
  EXPECT_NE(msg.find("init.u_file not found"), std::string::npos);
  EXPECT_NE(msg.find("init.w_file is required"), std::string::npos);
}

TEST(Scenario, RelativeEta) {
  std::string text = kMinimal;
  text.replace(text.find("eta = 0.01"), 10, "eta = 0.9 * v_inf");
  std::istringstream is(text);
  const Scenario s = parse_scenario(is);
  EXPECT_TRUE(s.eta.relative);
  const double v_inf = v_threshold(2.0 * kPi, std::sqrt(2.0), infinite_time);
  EXPECT_NEAR(resolved_params(s, 2.0 * kPi).eta, 0.9 * v_inf, 1e-15);
  EXPECT_NE(config_error(std::string(kMinimal).replace(std::string(kMinimal).find("eta = 0.01"), 10, "eta = 2v_inf"))
                .find("eta"),
            std::string::npos);
}

TEST(Scenario, SweepLists) {
  std::istringstream is(std::string(kMinimal) + "sweep.m = 1, 2,3\nsweep.eta = 0, 0.5*v_inf\n");
  const Scenario s = parse_scenario(is);
  EXPECT_EQ(s.sweep.m, (std::vector<double>{1.0, 2.0, 3.0}));
  ASSERT_EQ(s.sweep.eta.size(), 2u);
  EXPECT_TRUE(s.sweep.eta[1].relative);
}

TEST(Scenario, InitialDataKinds) {
  std::istringstream is(std::string(kMinimal) + "init.mass = 3\ninit.background = 0.5\ninit.v_mass = 1\n");
  const Scenario s = parse_scenario(is);
  const InitialData d = build_initial_data(s);
  EXPECT_NEAR(integrate(d.u), 3.0, 1e-12);
  EXPECT_NEAR(integrate(d.v), 1.0, 1e-12);
  for (double w : d.w.values) EXPECT_DOUBLE_EQ(w, 0.5);
  EXPECT_FALSE(d.concentrated);

  std::string fam = kMinimal;
  fam.replace(fam.find("init.type = bump"), 16, "init.type = blowup-family");
  std::istringstream is2(fam + "init.eps = 0.01\n");
  const InitialData f = build_initial_data(parse_scenario(is2));
  EXPECT_TRUE(f.concentrated);
  EXPECT_EQ(f.warnings.size(), 1u);  // eps raised to two cells
  EXPECT_DOUBLE_EQ(f.family.eps, 0.125);
  EXPECT_DOUBLE_EQ(*std::min_element(f.v.values.begin(), f.v.values.end()), 0.0);
}

TEST(Scenario, SnapshotInitRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "hapto_scenario_test";
  std::filesystem::create_directories(dir);
  const Grid g = Grid::make(DomainSpec{}, 16, 16);
  const Field u = Field::sample(g, [](double x, double y) { return 1.0 + x * y; });
  write_snapshot(dir / "u.hsim", u, 0.0);
  write_snapshot(dir / "w.hsim", Field(g, 0.3), 0.0);
  std::string text = kMinimal;
  text.replace(text.find("init.type = bump"), 16, "init.type = snapshot");
  {
    std::ofstream os(dir / "snap.cfg");
    os << text << "init.u_file = u.hsim\ninit.w_file = w.hsim\n";
  }
  const Scenario s = load_scenario(dir / "snap.cfg");
  EXPECT_EQ(s.name, "snap");
  const InitialData d = build_initial_data(s);
  EXPECT_EQ(d.u.values, u.values);
  EXPECT_NEAR(scenario_mass(s), integrate(u), 1e-15);
  std::filesystem::remove_all(dir);
}

TEST(Presets, SubcriticalLoads) {
  const Scenario s = load_scenario(std::filesystem::path(HAPTO_PRESET_DIR) / "b1_subcritical.cfg");
  EXPECT_LT(s.init.mass * s.params.chi, 4.0 * kPi);
  EXPECT_EQ(s.expect, Expect::bounded);
}

TEST(Presets, AllLoad) {
  for (const auto& entry : std::filesystem::directory_iterator(HAPTO_PRESET_DIR)) {
    if (entry.path().extension() != ".cfg") continue;
    EXPECT_NO_THROW(load_scenario(entry.path())) << entry.path();
  }
  const Scenario b3 = load_scenario(std::filesystem::path(HAPTO_PRESET_DIR) / "b3_blowup_ks.cfg");
  EXPECT_NEAR(b3.init.mass * b3.params.chi, 6.0 * kPi, 1e-12);
  EXPECT_EQ(b3.params.xi, 0.0);
  EXPECT_EQ(b3.init.eps, 0.05);
}
