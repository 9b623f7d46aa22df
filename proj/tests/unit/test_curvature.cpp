#include <algorithm>
#include <cmath>
#include <random>

#include <doctest.h>

#include "flowcurv/catalog.hpp"
#include "flowcurv/curvature.hpp"
#include "flowcurv/dynamics.hpp"
#include "flowcurv/errors.hpp"
#include "flowcurv/parser.hpp"
#include "flowcurv/polynomial.hpp"
#include "support.hpp"

using namespace flowcurv;
using flowcurv::test::random_point;
using flowcurv::test::rel_err;

namespace {

// det[a b c] written out by hand.
double det3(const Vec3& a, const Vec3& b, const Vec3& c) {
  return a[0] * (b[1] * c[2] - b[2] * c[1]) - b[0] * (a[1] * c[2] - a[2] * c[1]) + c[0] * (a[1] * b[2] - a[2] * b[1]);
}

double phi_oracle(const CompiledField& cf, std::span<const double> p, const Vec3& x) {
  const auto s = cf.stack(x, p);
  return det3(s.velocity, s.acceleration, s.jerk);
}

}  // namespace

TEST_SUITE("curvature") {
  TEST_CASE("field selector names") {
    CHECK(curvature_field_from_string("phi") == CurvatureField::Phi);
    CHECK(curvature_field_from_string("phi_c") == CurvatureField::PhiC);
    CHECK(curvature_field_from_string("phi_t") == CurvatureField::PhiT);
    CHECK_THROWS_AS(curvature_field_from_string("psi"), LookupError);
  }

  TEST_CASE("everything vanishes at a fixed point") {
    const System s = build("rossler");
    const auto c = phi_eval(s.field, s.params, Vec3::Zero());
    CHECK(c.phi == 0.0);
    CHECK(c.phi_c == 0.0);
    CHECK(c.phi_t == 0.0);
  }

  TEST_CASE("affine field has no time-dependent component") {
    const VectorField f = parse_field({"-x + 2*y", "-3*y + z + 1", "x - z"});
    const auto sym = phi_symbolic(f);
    CHECK(sym.phi_t.is_zero());
    std::mt19937_64 rng(1);
    for (int k = 0; k < 10; ++k) CHECK(phi_eval(f, {}, random_point(rng, -4, 4)).phi_t == 0.0);
  }

  TEST_CASE("decomposition on rossler 0.556") {
    const System s = build("rossler", {}, "crossing");
    const CurvatureModel m(s.field);
    std::mt19937_64 rng(2);
    for (int k = 0; k < 100; ++k) {
      const auto c = m.sample(random_point(rng, -10, 10), s.params);
      const double scale = std::max({std::abs(c.phi), std::abs(c.phi_c), std::abs(c.phi_t), 1e-300});
      CHECK(std::abs(c.phi - (c.phi_c + c.phi_t)) <= 1e-10 * scale);
    }
  }

  TEST_CASE("linear field gives a homogeneous cubic") {
    const VectorField f = parse_field({"-x + 2*y", "-3*y + z", "x - 2*z + y"});
    const auto sym = phi_symbolic(f);
    const Polynomial p = Polynomial::expand(sym.phi);
    REQUIRE(!p.terms().empty());
    for (const auto& [mono, coef] : p.terms()) CHECK(mono[0] + mono[1] + mono[2] == 3);
    const CurvatureModel m(f);
    const Vec3 x(0.3, -1.1, 0.8);
    CHECK(m.value(CurvatureField::Phi, 2 * x, {}) == doctest::Approx(8 * m.value(CurvatureField::Phi, x, {})));
  }

  TEST_CASE("nilpotent chain has zero curvature") {
    const VectorField f = parse_field({"y", "z", "0"});
    CHECK(Polynomial::expand(phi_symbolic(f).phi).terms().empty());
    CHECK(phi_eval(f, {}, Vec3(1, 2, 3)).phi == 0.0);
  }

  TEST_CASE("symbolic phi agrees with the determinant") {
    for (const char* name : {"rossler", "sprott_k", "thomas", "malasoma_a"}) {
      const System s = build(name);
      const CurvatureModel m(s.field);
      std::mt19937_64 rng(3);
      for (int k = 0; k < 100; ++k) {
        const Vec3 x = random_point(rng, -5, 5);
        const double want = phi_oracle(m.compiled(), s.params, x);
        INFO(name);
        CHECK(rel_err(m.value(CurvatureField::Phi, x, s.params), want, 1e-300) < 1e-9);
        const auto c = m.sample(x, s.params);
        CHECK(rel_err(c.phi, want, 1e-300) < 1e-12);
        CHECK(rel_err(m.value(CurvatureField::PhiT, x, s.params), c.phi_t, std::abs(c.phi)) < 1e-9);
      }
    }
  }

  TEST_CASE("gradients match finite differences") {
    std::mt19937_64 rng(4);
    for (const auto* d : list_systems()) {
      const System s = build(d->name);
      const CurvatureModel m(s.field);
      for (auto w : {CurvatureField::Phi, CurvatureField::PhiC, CurvatureField::PhiT}) {
        for (int k = 0; k < 50; ++k) {
          const Vec3 x = random_point(rng, -3, 3);
          Vec3 g;
          m.value_and_gradient(w, x, s.params, g);
          const double h = 1e-6 * std::max(1.0, x.norm());
          for (int i = 0; i < 3; ++i) {
            Vec3 e = Vec3::Zero();
            e[i] = h;
            const double fd = (m.value(w, x + e, s.params) - m.value(w, x - e, s.params)) / (2 * h);
            INFO(d->name, " ", to_string(w), " axis ", i);
            CHECK(rel_err(g[i], fd, g.norm() + 1e-300) < 1e-5);
          }
        }
      }
    }
  }

  TEST_CASE("affine system has no phi_t crossings") {
    const VectorField f = parse_field({"-0.1*x - y", "x - 0.1*y", "-z + 0.5"});
    const CurvatureModel m(f);
    const auto tr = integrate(m.compiled(), {}, Vec3(1, 0, 0), 50.0, 0.01);
    CHECK(crossings(m, {}, tr, CurvatureField::PhiT).events.empty());
  }

  TEST_CASE("crossing events are refined") {
    const System s = build("rossler", {}, "crossing");
    const CurvatureModel m(s.field);
    const auto fps = find_fixed_points(m.compiled(), s.params);
    const auto tr = integrate(m.compiled(), s.params, Vec3(0.1, 0.1, 0.1), 2500.0, 0.01, 500.0);
    CrossingOptions o;
    for (const auto& f : fps) o.fixed_points.push_back(f.location);
    const auto rep = crossings(m, s.params, tr, CurvatureField::PhiT, o);
    REQUIRE(!rep.events.empty());
    const double tol = 1e-8 * std::max(1.0, rep.scale);
    for (const auto& e : rep.events) {
      CHECK(std::abs(m.value(CurvatureField::PhiT, e.state, s.params)) < tol);
      CHECK(std::abs(e.direction) == 1);
    }
    CHECK(rep.max_event_residual < tol);
    CHECK(std::is_sorted(rep.events.begin(), rep.events.end(),
                         [](const auto& a, const auto& b) { return a.t < b.t; }));
  }

  TEST_CASE("events near a fixed point are excluded") {
    // slow spiral out of the rossler inner point, staying inside the 1e-3 ball
    const System s = build("rossler");
    const CurvatureModel m(s.field);
    const auto tr = integrate(m.compiled(), s.params, Vec3(1e-4, 0, 0), 10.0, 0.01);
    for (const auto& x : tr.x) REQUIRE(x.norm() < 1e-3);
    const auto all = crossings(m, s.params, tr, CurvatureField::Phi);
    REQUIRE(!all.events.empty());
    CrossingOptions o;
    o.fixed_points.push_back(Vec3::Zero());
    o.eps_fp = 1e-3;
    const auto kept = crossings(m, s.params, tr, CurvatureField::Phi, o);
    CHECK(kept.events.empty());
    CHECK(kept.excluded_near_fixed_point == all.events.size() + all.tangencies.size());
  }

  TEST_CASE("linear darboux identity") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int sys = 0; sys < 5; ++sys) {
      Mat3 A;
      for (int i = 0; i < 9; ++i) A(i / 3, i % 3) = u(rng);
      std::array<std::string, 3> src;
      const char* v[] = {"x", "y", "z"};
      for (int i = 0; i < 3; ++i) {
        std::string s;
        for (int j = 0; j < 3; ++j) s += (j ? " + " : "") + std::string("(") + std::to_string(A(i, j)) + ")*" + v[j];
        src[static_cast<std::size_t>(i)] = s;
      }
      const VectorField f = parse_field(src);
      const CurvatureModel m(f);
      const Mat3 J = m.compiled().jacobian(Vec3::Zero(), {});
      for (int k = 0; k < 100; ++k) {
        const Vec3 x = random_point(rng, -3, 3);
        Vec3 g;
        const double phi = m.value_and_gradient(CurvatureField::Phi, x, {}, g);
        const Vec3 F = m.compiled().velocity(x, {});
        const double scale = g.norm() * F.norm() + std::abs(J.trace() * phi) + 1e-300;
        CHECK(std::abs(g.dot(F) - J.trace() * phi) <= 1e-8 * scale);
      }
      const auto pts = manifold_points(m, {}, Vec3::Constant(-3), Vec3::Constant(3), 50, 9);
      const auto st = darboux_residual(m, {}, pts);
      CHECK(st.points + st.excluded_degenerate == pts.size());
      CHECK(st.max < 1e-8);
    }
  }

  TEST_CASE("fixed points are excluded from darboux statistics") {
    const System s = build("rossler");
    const CurvatureModel m(s.field);
    const std::vector<Vec3> pts{Vec3::Zero()};
    const auto st = darboux_residual(m, s.params, pts);
    CHECK(st.points == 0);
    CHECK(st.excluded_degenerate == 1);
  }

  TEST_CASE("manifold points lie on phi = 0") {
    const System s = build("rossler");
    const CurvatureModel m(s.field);
    const auto pts = manifold_points(m, s.params, Vec3::Constant(-8), Vec3::Constant(8), 100, 1);
    CHECK(pts.size() == 100);
    for (const auto& p : pts) {
      Vec3 g;
      const double v = m.value_and_gradient(CurvatureField::Phi, p, s.params, g);
      CHECK(std::abs(v) <= 1e-8 * std::max(1.0, g.norm() * 16.0));
    }
  }
}
