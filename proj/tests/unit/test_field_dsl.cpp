#include <cmath>
#include <random>

#include <doctest.h>

#include "flowcurv/catalog.hpp"
#include "flowcurv/dynamics.hpp"
#include "flowcurv/errors.hpp"
#include "flowcurv/field.hpp"
#include "flowcurv/parser.hpp"
#include "support.hpp"

using namespace flowcurv;
using flowcurv::test::rel_err;

namespace {

double at(const Expr& e, double x, double y, double z, const ParamLookup& p = {}) {
  return evaluate(e, {x, y, z}, p);
}

// Central difference of a component evaluated through the tree walker.
double fd(const Expr& e, std::array<double, 3> s, int var, const ParamLookup& p, double h = 1e-5) {
  auto a = s, b = s;
  a[static_cast<std::size_t>(var)] += h;
  b[static_cast<std::size_t>(var)] -= h;
  return (evaluate(e, a, p) - evaluate(e, b, p)) / (2 * h);
}

}  // namespace

TEST_SUITE("field_dsl") {
  TEST_CASE("rossler first component parses to a sum of negated variables") {
    const Expr e = parse_expr("-y - z");
    REQUIRE(e.kind() == NodeKind::Sum);
    REQUIRE(e.children().size() == 2);
    for (const auto& c : e.children()) {
      CHECK(c.kind() == NodeKind::Negate);
      CHECK(c.children()[0].kind() == NodeKind::Variable);
    }
    CHECK(e.children()[0].children()[0].variable_index() == 1);
    CHECK(e.children()[1].children()[0].variable_index() == 2);
  }

  TEST_CASE("zero component") {
    const Expr e = parse_expr("0");
    CHECK(e.is_zero());
    CHECK(at(e, 3, 4, 5) == 0.0);
  }

  TEST_CASE("parameterized component evaluates") {
    const Expr e = parse_expr("b + z*(x - c)", std::vector<std::string>{"b", "c"});
    CHECK(at(e, 1, 0, 3, {{"b", 2.0}, {"c", 4.0}}) == doctest::Approx(-7.0));
    CHECK(e.parameters() == std::vector<std::string>{"b", "c"});
  }

  TEST_CASE("precedence and associativity") {
    CHECK(at(parse_expr("2^3^2"), 0, 0, 0) == 512.0);
    CHECK(at(parse_expr("-x^2"), 3, 0, 0) == -9.0);
    CHECK(at(parse_expr("1 - 2 - 3"), 0, 0, 0) == -4.0);
    CHECK(at(parse_expr("2*x + y*z"), 1, 2, 3) == 8.0);
    CHECK(at(parse_expr("(x + 1)^2"), 2, 0, 0) == 9.0);
    CHECK(at(parse_expr("1.5e1*x"), 2, 0, 0) == 30.0);
  }

  TEST_CASE("syntax errors carry positions") {
    CHECK_THROWS_AS(parse_expr("x +"), ParseError);
    CHECK_THROWS_AS(parse_expr("x ^ 1.5"), ParseError);
    CHECK_THROWS_AS(parse_expr("(x"), ParseError);
    CHECK_THROWS_AS(parse_expr("x $ y"), ParseError);
    try {
      parse_expr("x + * y", std::nullopt, 3);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
      CHECK(e.column() == 5);
    }
  }

  TEST_CASE("undeclared parameter is rejected") {
    CHECK_THROWS_AS(parse_expr("a*x", std::vector<std::string>{"b"}), ParseError);
    CHECK_THROWS_AS(parse_field({"a*x", "y", "z"}, {{"b", 1.0}}), ParseError);
  }

  TEST_CASE("to_string round-trips") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-2, 2);
    for (const char* src : {"-y - z", "b + z*(x - c)", "x^3 - 2*x*y^2 + 0.25", "-(x - y)*(z + 1)", "y^2 - x"}) {
      const Expr e = parse_expr(src);
      const Expr back = parse_expr(to_string(e));
      const ParamLookup p{{"b", 0.7}, {"c", -1.3}};
      for (int k = 0; k < 10; ++k) {
        const double x = u(rng), y = u(rng), z = u(rng);
        CHECK(at(back, x, y, z, p) == doctest::Approx(at(e, x, y, z, p)).epsilon(1e-14));
      }
    }
  }

  TEST_CASE("elementary derivatives") {
    const Expr dxz = diff(parse_expr("x*z"), 0);
    CHECK(dxz.kind() == NodeKind::Variable);
    CHECK(dxz.variable_index() == 2);
    const Expr dy2 = diff(parse_expr("y^2"), 1);
    CHECK(at(dy2, 0, 3, 0) == 6.0);
    CHECK(to_string(dy2) == "2*y");
    CHECK(diff(parse_expr("a*x"), 1).is_zero());
  }

  TEST_CASE("derivatives match central differences") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-3, 3);
    const ParamLookup p{{"a", 0.3}, {"b", 1.7}};
    for (const char* src : {"a*x^2*y - z^3 + b*x*z", "(x - a)*(y + b)^2", "x*y*z + x^4", "-b*y^2*z + a"}) {
      const Expr e = parse_expr(src);
      for (int k = 0; k < 20; ++k) {
        const std::array<double, 3> s{u(rng), u(rng), u(rng)};
        for (int v = 0; v < 3; ++v) {
          const double sym = evaluate(diff(e, v), s, p);
          CHECK(rel_err(sym, fd(e, s, v, p), 1.0) < 1e-6);
        }
      }
    }
  }

  TEST_CASE("mixed partials commute") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-2, 2);
    const Expr e = parse_expr("x^2*y*z - 3*y^3*z + x*z^2 + y");
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const Expr ij = diff(diff(e, i), j), ji = diff(diff(e, j), i);
        for (int k = 0; k < 50; ++k) {
          const std::array<double, 3> s{u(rng), u(rng), u(rng)};
          CHECK(rel_err(evaluate(ij, s, {}), evaluate(ji, s, {}), 1e-300) < 1e-10);
        }
      }
  }

  TEST_CASE("evaluation is linear") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-2, 2);
    const Expr e1 = parse_expr("x*y - z^2"), e2 = parse_expr("3*x + y*z*x");
    const double alpha = -2.5;
    const Expr comb = Expr::constant(alpha) * e1 + e2;
    for (int k = 0; k < 20; ++k) {
      const std::array<double, 3> s{u(rng), u(rng), u(rng)};
      const double want = alpha * evaluate(e1, s, {}) + evaluate(e2, s, {});
      CHECK(evaluate(comb, s, {}) == doctest::Approx(want).epsilon(1e-14));
    }
  }

  TEST_CASE("compiled program agrees with the tree walker") {
    const std::vector<Expr> outs{parse_expr("a*x*y - z"), parse_expr("(x + y)^3"), parse_expr("b")};
    const Program prog(outs, {"a", "b"});
    const std::array<double, 3> s{0.3, -1.2, 2.0};
    const std::vector<double> pv{1.5, -0.25};
    std::array<double, 3> out{};
    prog.run(s.data(), pv, out);
    const ParamLookup p{{"a", 1.5}, {"b", -0.25}};
    for (std::size_t i = 0; i < 3; ++i) CHECK(out[i] == doctest::Approx(evaluate(outs[i], s, p)).epsilon(1e-15));
  }

  TEST_CASE("centered rossler jacobian third row") {
    const System s = build("rossler");
    const auto J = jacobian(s.field);
    const auto p = s.field.lookup(s.params);
    const std::array<double, 3> st{0.4, -0.3, 1.1};
    // row 3 = [b~ + z, 0, x - c~]
    CHECK(evaluate(J.entries[2][0], st, p) == doctest::Approx(p.at("b_tilde") + 1.1));
    CHECK(evaluate(J.entries[2][1], st, p) == 0.0);
    CHECK(evaluate(J.entries[2][2], st, p) == doctest::Approx(0.4 - p.at("c_tilde")));
  }

  TEST_CASE("affine field has zero material derivative") {
    const VectorField f = parse_field({"2*x - y + 1", "a*z", "x + y + z - 3"}, {{"a", 0.5}});
    const auto J = jacobian(f);
    CHECK(J.material_is_zero());
    const CompiledField cf(f);
    const auto st = cf.stack(Vec3(0.3, 0.1, -2), f.bind());
    CHECK(st.jacobian_rate.isZero(0.0));
    CHECK((st.jerk - st.jacobian * st.acceleration).norm() == 0.0);
  }

  TEST_CASE("centered rossler material term is (0, 0, 2 xdot zdot)") {
    const System s = build("rossler");
    const CompiledField cf(s.field);
    const double h = 1e-4;
    const auto traj = integrate(cf, s.params, Vec3(1.3, -0.7, 0.4), 2 * h, h);
    REQUIRE(traj.size() == 3);
    const auto st = cf.stack(traj.x[1], s.params);
    const Vec3 m = st.jacobian_rate * st.velocity;
    CHECK(m[0] == 0.0);
    CHECK(m[1] == 0.0);
    CHECK(m[2] == doctest::Approx(2 * st.velocity[0] * st.velocity[2]).epsilon(1e-13));

    // finite difference of the numeric Jacobian along the trajectory
    const Mat3 dJ = (cf.jacobian(traj.x[2], s.params) - cf.jacobian(traj.x[0], s.params)) / (2 * h);
    CHECK(rel_err((dJ * st.velocity)[2], m[2], 1.0) < 1e-5);
  }

  TEST_CASE("derivative stack vanishes at a fixed point") {
    const System s = build("rossler");
    const auto st = CompiledField(s.field).stack(Vec3::Zero(), s.params);
    CHECK(st.velocity.norm() == 0.0);
    CHECK(st.acceleration.norm() == 0.0);
    CHECK(st.jerk.norm() == 0.0);
  }

  TEST_CASE("linear rotation stack by hand") {
    const VectorField f = parse_field({"y", "-x", "-z"});
    const auto st = time_derivatives(f, {}, Vec3(1, 0, 1));
    CHECK(st.velocity == Vec3(0, -1, -1));
    CHECK(st.acceleration == Vec3(-1, 0, 1));
    CHECK(st.jerk == Vec3(0, 1, -1));
  }

  TEST_CASE("catalog jacobians match finite differences") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-10, 10);
    for (const auto* def : list_systems()) {
      const System s = build(def->name);
      const CompiledField cf(s.field);
      for (int k = 0; k < 20; ++k) {
        const Vec3 x(u(rng), u(rng), u(rng));
        const Mat3 J = cf.jacobian(x, s.params);
        const double h = 1e-5;
        for (int j = 0; j < 3; ++j) {
          Vec3 e = Vec3::Zero();
          e[j] = h;
          const Vec3 col = (cf.velocity(x + e, s.params) - cf.velocity(x - e, s.params)) / (2 * h);
          for (int i = 0; i < 3; ++i) {
            INFO(def->name, " J[", i, "][", j, "]");
            CHECK(rel_err(J(i, j), col[i], J.norm()) < 1e-6);
          }
        }
      }
    }
  }

  TEST_CASE("third derivative matches fourth-order differences on rossler") {
    const System s = build("rossler");
    const CompiledField cf(s.field);
    // fixed-step samples: dense-output noise would swamp a third difference
    const double h = 1e-3;
    const auto traj = integrate_rk4(cf, s.params, Vec3(0.1, 0.1, 0.1), 10.0, h);
    REQUIRE(traj.size() > 9000);
    for (std::size_t k : {std::size_t{100}, std::size_t{2500}, std::size_t{7000}}) {
      const auto& X = traj.x;
      // d3/dt3, 4th order central: (x[-3] - 8x[-2] + 13x[-1] - 13x[1] + 8x[2] - x[3]) / (8 h^3)
      const Vec3 d3 = (X[k - 3] - 8 * X[k - 2] + 13 * X[k - 1] - 13 * X[k + 1] + 8 * X[k + 2] - X[k + 3]) /
                      (8 * h * h * h);
      const Vec3 jerk = cf.stack(X[k], s.params).jerk;
      for (int i = 0; i < 3; ++i) CHECK(rel_err(jerk[i], d3[i], jerk.norm()) < 1e-4);
    }
  }

  TEST_CASE("system file format") {
    const auto f = parse_system_file(
        "# original rossler\n"
        "param a = 0.2\n"
        "param b = 0.2\n"
        "param c = 5.7\n"
        "dx = -y - z\n"
        "dy = x + a*y\n"
        "dz = b + z*(x - c)\n");
    CHECK(f.params().size() == 3);
    const auto st = time_derivatives(f, f.bind(), Vec3(1, 0, 3));
    CHECK(st.velocity[2] == doctest::Approx(0.2 + 3 * (1 - 5.7)));
    CHECK_THROWS_AS(parse_system_file("dx = y\ndy = x\n"), ParseError);
    CHECK_THROWS_AS(parse_system_file("dx = y\ndx = x\ndy = 1\ndz = 0\n"), ParseError);
    CHECK_THROWS_AS(parse_system_file("dx = q*y\ndy = x\ndz = 0\n"), ParseError);
  }
}
