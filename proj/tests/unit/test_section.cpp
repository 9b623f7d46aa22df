#include <cmath>
#include <numbers>
#include <set>

#include <doctest.h>

#include "flowcurv/catalog.hpp"
#include "flowcurv/dynamics.hpp"
#include "flowcurv/parser.hpp"
#include "flowcurv/section.hpp"

using namespace flowcurv;

namespace {

std::vector<double> logistic_orbit(std::size_t n, double x0 = 0.2137) {
  std::vector<double> v{x0};
  while (v.size() < n) v.push_back(4.0 * v.back() * (1.0 - v.back()));
  return v;
}

struct RosslerRun {
  System sys;
  CompiledField cf;
  Trajectory traj;
  SectionSpec spec;
};

RosslerRun rossler_run(const std::string& preset, double t_end, double dt) {
  System s = build("rossler", {}, preset);
  CompiledField cf(s.field);
  auto tr = integrate(cf, s.params, Vec3(0.1, 0.1, 0.1), t_end, dt, 500.0);
  const auto spec = default_section(cf, s.params, tr, Vec3::Zero());
  return {std::move(s), std::move(cf), std::move(tr), spec};
}

}  // namespace

TEST_SUITE("section_analysis") {
  TEST_CASE("section string round-trip") {
    const auto s = parse_section("p=1,2,3;n=0,0,2;dir=-");
    CHECK(s.point == Vec3(1, 2, 3));
    CHECK(s.normal == Vec3(0, 0, 1));
    CHECK(s.direction == CrossingDirection::Negative);
    CHECK_FALSE(s.half_plane);
    const auto h = parse_section("p=0,0,0;n=1,0,0;dir=both;u=0,1,0");
    CHECK(h.half_plane);
    REQUIRE(h.rho_axis);
    const auto r = parse_section(format_section(h));
    CHECK(r.direction == CrossingDirection::Both);
    CHECK(*r.rho_axis == *h.rho_axis);
    CHECK_THROWS_AS(parse_section("p=0,0;n=1,0,0"), std::invalid_argument);
    CHECK_THROWS_AS(parse_section("p=0,0,0;n=0,0,0"), std::invalid_argument);
    CHECK_THROWS_AS(parse_section("p=0,0,0;n=1,0,0;dir=up"), std::invalid_argument);
  }

  TEST_CASE("circle crosses x = 0 downward once per turn") {
    const CompiledField cf(parse_field({"-y", "x", "0"}));
    const double T = 2 * std::numbers::pi;
    const auto tr = integrate(cf, {}, Vec3(1, 0, 0), 3 * T, 0.05);
    const auto res = section_crossings(cf, {}, tr, parse_section("p=0,0,0;n=1,0,0;dir=-"));
    REQUIRE(res.crossings.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
      const auto& c = res.crossings[k];
      CHECK(c.t == doctest::Approx(std::numbers::pi / 2 + T * static_cast<double>(k)).epsilon(1e-9));
      CHECK((c.state - Vec3(0, 1, 0)).norm() < 1e-7);
      CHECK(c.direction == -1);
    }
  }

  TEST_CASE("no crossings gives an empty list") {
    const CompiledField cf(parse_field({"-y", "x", "0"}));
    const auto tr = integrate(cf, {}, Vec3(1, 0, 0), 20.0, 0.05);
    CHECK(section_crossings(cf, {}, tr, parse_section("p=0,0,5;n=0,0,1;dir=both")).crossings.empty());
  }

  TEST_CASE("default rossler section") {
    const auto run = rossler_run("two_branch", 6500.0, 0.01);
    const auto res = section_crossings(run.cf, run.sys.params, run.traj, run.spec);
    const double expected = 6000.0 / 6.0;
    CHECK(static_cast<double>(res.crossings.size()) > 0.8 * expected);
    CHECK(static_cast<double>(res.crossings.size()) < 1.2 * expected);
    const int want = run.spec.direction == CrossingDirection::Positive ? 1 : -1;
    for (const auto& c : res.crossings) {
      CHECK(std::abs((c.state - run.spec.point).dot(run.spec.normal)) < 1e-10 * std::max(1.0, c.state.norm()));
      CHECK(c.direction == want);
      CHECK(c.rho > 0.0);
    }
    CHECK(res.max_residual < 1e-10);
  }

  TEST_CASE("monotone orbit has one branch") {
    std::vector<double> rho{0.1};
    while (rho.size() < 1000) rho.push_back(std::fmod(rho.back() + 0.6180339887, 1.0));
    const auto map = build_return_map(rho);
    REQUIRE(map.partitioned);
    CHECK(map.m == 1);
    const auto g = transition_matrix(map);
    CHECK(g.gamma == std::vector<std::vector<int>>{{1}});
  }

  TEST_CASE("logistic map has two branches split at one half") {
    const auto rho = logistic_orbit(3000);
    const auto map = build_return_map(rho);
    REQUIRE(map.partitioned);
    REQUIRE(map.m == 2);
    CHECK(map.critical_points[0] == doctest::Approx(0.5).epsilon(0.04));
    CHECK(map.panels[0].direction == 1);
    CHECK(map.panels[1].direction == -1);
    CHECK(map.monotone());
    CHECK(transition_matrix(map).gamma == std::vector<std::vector<int>>{{1, 1}, {1, 1}});
  }

  TEST_CASE("transition matrix matches a rescan of the symbols") {
    const auto map = build_return_map(logistic_orbit(2000, 0.377));
    const auto g = transition_matrix(map);
    REQUIRE(map.symbols.size() == map.pairs.size());
    std::set<std::pair<int, int>> seen;
    for (std::size_t k = 0; k + 1 < map.symbols.size(); ++k) seen.insert({map.symbols[k], map.symbols[k + 1]});
    for (int i = 0; i < map.m; ++i)
      for (int j = 0; j < map.m; ++j)
        CHECK(g.gamma[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] == (seen.count({i, j}) ? 1 : 0));
    for (std::size_t k = 0; k < map.pairs.size(); ++k) CHECK(map.symbols[k] == map.symbol_of(map.pairs[k].first));
  }

  TEST_CASE("segmentation is deterministic") {
    const auto rho = logistic_orbit(1500, 0.61);
    const auto a = build_return_map(rho), b = build_return_map(rho);
    CHECK(a.critical_points == b.critical_points);
    CHECK(a.symbols == b.symbols);
  }

  TEST_CASE("short sequences are left unpartitioned") {
    const auto map = build_return_map(logistic_orbit(150));
    CHECK_FALSE(map.partitioned);
    CHECK(map.m == 1);
    CHECK_FALSE(map.warning.empty());
  }

  TEST_CASE("partition is stable under output refinement") {
    const auto coarse = rossler_run("two_branch", 20500.0, 0.01);
    auto fine = rossler_run("two_branch", 20500.0, 0.005);
    fine.spec = coarse.spec;
    auto rho_of = [](const RosslerRun& r) {
      std::vector<double> v;
      for (const auto& c : section_crossings(r.cf, r.sys.params, r.traj, r.spec).crossings) v.push_back(c.rho);
      return v;
    };
    const auto a = build_return_map(rho_of(coarse)), b = build_return_map(rho_of(fine));
    REQUIRE(a.pairs.size() == b.pairs.size());
    CHECK(a.m == b.m);
    CHECK(a.symbols == b.symbols);
  }
}
