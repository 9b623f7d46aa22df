#include <cmath>
#include <complex>
#include <numbers>

#include <doctest.h>

#include "flowcurv/catalog.hpp"
#include "flowcurv/dynamics.hpp"
#include "flowcurv/parser.hpp"
#include "support.hpp"

using namespace flowcurv;

namespace {

using cd = std::complex<double>;

// det(m - l I) by cofactor expansion.
cd char_poly(const Mat3& m, cd l) {
  const Eigen::Matrix3cd a = m.cast<cd>() - l * Eigen::Matrix3cd::Identity();
  return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
         a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
}

Eigenvalues ev(cd a, cd b, cd c) { return {a, b, c}; }

// F(X - v): the same flow moved by v.
VectorField translated(const VectorField& f, const Vec3& v) {
  std::array<Expr, 3> shift;
  for (int i = 0; i < 3; ++i) shift[static_cast<std::size_t>(i)] = Expr::variable(i) - Expr::constant(v[i]);
  std::array<Expr, 3> comps;
  for (int i = 0; i < 3; ++i) comps[static_cast<std::size_t>(i)] = substitute_variables(f.component(i), shift);
  return VectorField(comps, f.params());
}

}  // namespace

TEST_SUITE("dynamics") {
  TEST_CASE("harmonic oscillator returns after one period") {
    const VectorField f = parse_field({"y", "-x", "0"});
    const CompiledField cf(f);
    const double T = 2 * std::numbers::pi;
    const auto tr = integrate(cf, {}, Vec3(1, 0, 0), T, T / 4);
    REQUIRE(tr.status == TrajectoryStatus::Complete);
    REQUIRE(tr.size() == 5);
    CHECK(tr.t.back() == doctest::Approx(T));
    CHECK((tr.x.back() - Vec3(1, 0, 0)).norm() < 1e-7);
    CHECK((tr.x[1] - Vec3(0, -1, 0)).norm() < 1e-7);
  }

  TEST_CASE("linear decay") {
    const CompiledField cf(parse_field({"-x", "-y", "-z"}));
    const auto tr = integrate(cf, {}, Vec3(1, 1, 1), 2.0, 0.5);
    REQUIRE(tr.size() == 5);
    CHECK(tr.t[2] == 1.0);
    CHECK((tr.x[2] - std::exp(-1.0) * Vec3(1, 1, 1)).norm() < 1e-8);
  }

  TEST_CASE("transient is discarded") {
    const CompiledField cf(parse_field({"-x", "-y", "-z"}));
    const auto tr = integrate(cf, {}, Vec3(1, 1, 1), 3.0, 0.5, 1.0);
    REQUIRE(!tr.empty());
    CHECK(tr.t.front() == 1.0);
    CHECK(tr.x.front()[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
  }

  TEST_CASE("rossler stays bounded") {
    const System s = build("rossler");
    const auto tr = integrate(CompiledField(s.field), s.params, Vec3(0.1, 0.1, 0.1), 5000.0, 0.05);
    REQUIRE(tr.status == TrajectoryStatus::Complete);
    double r = 0;
    for (const auto& x : tr.x) r = std::max(r, x.norm());
    CHECK(r < 30.0);
  }

  TEST_CASE("blow-up is reported as divergence") {
    const CompiledField cf(parse_field({"x^2", "0", "0"}));
    const auto tr = integrate(cf, {}, Vec3(1, 0, 0), 5.0, 0.01);
    CHECK(tr.status == TrajectoryStatus::Diverged);
    CHECK(tr.stop_time < 1.0);
    CHECK(tr.stop_time > 0.99);
  }

  TEST_CASE("rk4 is fourth order") {
    const CompiledField cf(parse_field({"y", "-x", "0"}));
    const double T = 2 * std::numbers::pi;
    auto err = [&](double h) {
      const auto tr = integrate_rk4(cf, {}, Vec3(1, 0, 0), T, h);
      return (tr.x.back() - Vec3(std::cos(tr.t.back()), -std::sin(tr.t.back()), 0)).norm();
    };
    const double ratio = err(T / 64) / err(T / 128);
    CHECK(ratio > 14.0);
    CHECK(ratio < 18.0);
  }

  TEST_CASE("stable node at the origin") {
    const CompiledField cf(parse_field({"-x", "-y", "-z"}));
    const auto fps = find_fixed_points(cf, {});
    REQUIRE(fps.size() == 1);
    CHECK(fps[0].location.norm() < 1e-12);
    for (const auto& l : fps[0].eigenvalues) CHECK(std::abs(l - cd(-1, 0)) < 1e-7);
    CHECK(fps[0].cls == FixedPointClass::Node);
  }

  TEST_CASE("eigenvalues are roots of the characteristic polynomial") {
    const Mat3 ms[] = {
        (Mat3() << 0, -1, -1, 1, 0.432, 0, 0.53, 0, -3.77).finished(),
        (Mat3() << 1, 2, 3, 4, 5, 6, 7, 8, 10).finished(),
        (Mat3() << 0, 1, 0, 0, 0, 1, -2.3, 0, 0).finished(),
        (Mat3() << -1, 0, 0, 0, -1, 0, 0, 0, -1).finished(),
    };
    for (const auto& m : ms) {
      const auto l = eigenvalues3(m);
      cd sum = 0, prod = 1;
      for (const auto& v : l) {
        CHECK(std::abs(char_poly(m, v)) < 1e-9 * (1 + m.norm() * m.norm() * m.norm()));
        sum += v;
        prod *= v;
      }
      CHECK(std::abs(sum - m.trace()) < 1e-10 * (1 + m.norm()));
      CHECK(std::abs(prod - m.determinant()) < 1e-9 * (1 + std::abs(m.determinant())));
      for (std::size_t i = 0; i < 3; ++i) {
        const auto v = eigenvector3(m, l[i]);
        CHECK(v.norm() == doctest::Approx(1.0));
        CHECK((m.cast<cd>() * v - l[i] * v).norm() < 1e-8);
      }
    }
  }

  TEST_CASE("spectrum classification and shapes") {
    CHECK(classify_spectrum(ev(-1, -2, -3)) == FixedPointClass::Node);
    const auto node = classify_fp_shape(FixedPointClass::Node);
    CHECK(node.label == ShapeLabel::Plane);
    CHECK_FALSE(node.has_phi_t_component);

    CHECK(classify_spectrum(ev(2, -1, -3)) == FixedPointClass::Saddle);
    CHECK(classify_fp_shape(FixedPointClass::Saddle).label == ShapeLabel::ThreePlanes);

    CHECK(classify_spectrum(ev(-3.6, cd(0.15, 0.98), cd(0.15, -0.98))) == FixedPointClass::SaddleFocus);
    const auto sf = classify_fp_shape(FixedPointClass::SaddleFocus);
    CHECK(sf.label == ShapeLabel::PlaneTwoParaboloids);
    CHECK(sf.has_phi_t_component);

    CHECK(classify_spectrum(ev(-1, cd(-0.5, 2), cd(-0.5, -2))) == FixedPointClass::FocusNode);
  }

  TEST_CASE("centered rossler fixed points") {
    const System s = build("rossler");
    const auto fps = find_fixed_points(CompiledField(s.field), s.params);
    REQUIRE(fps.size() == 2);
    const auto p = s.field.lookup(s.params);
    const double a = s.user_params.at("a"), bt = p.at("b_tilde"), ct = p.at("c_tilde");
    const double xp = ct - a * bt;
    CHECK(fps[0].role == FixedPointRole::Inner);
    CHECK(fps[0].location.norm() < 1e-12);
    CHECK(fps[1].role == FixedPointRole::Outer);
    CHECK((fps[1].location - Vec3(xp, -xp / a, xp / a)).norm() < 1e-10);
    CHECK(fps[0].cls == FixedPointClass::SaddleFocus);
    CHECK(fps[1].cls == FixedPointClass::SaddleFocus);
  }

  TEST_CASE("census, residuals and roles over the catalog") {
    for (const auto* d : list_systems()) {
      const System s = build(d->name);
      const auto fps = find_fixed_points(CompiledField(s.field), s.params);
      INFO(d->name);
      CHECK(static_cast<int>(fps.size()) == d->expected_fixed_points);
      for (const auto& f : fps) CHECK(f.eigen_residual() < 1e-8);
      if (d->expected_fixed_points == 2 && fps.size() == 2) {
        CHECK(fps[0].role == FixedPointRole::Inner);
        CHECK(fps[0].unstable_count() == 2);
        CHECK(fps[1].role == FixedPointRole::Outer);
        CHECK(fps[1].unstable_count() == 1);
      }
    }
  }

  TEST_CASE("seeded search is reproducible") {
    const System s = build("sprott_k");
    const CompiledField cf(s.field);
    FixedPointSearch fs;
    fs.seed = 42;
    const auto a = find_fixed_points(cf, s.params, fs), b = find_fixed_points(cf, s.params, fs);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].location == b[i].location);
  }

  TEST_CASE("wrapping number of coincident points is zero") {
    const System s = build("sprott_f");
    auto fps = find_fixed_points(CompiledField(s.field), s.params);
    REQUIRE(fps.size() == 2);
    fps[0].location = fps[1].location;
    const auto w = wrapping_number(fps);
    REQUIRE(w.defined);
    CHECK(w.W == 0.0);
  }

  TEST_CASE("wrapping number is undefined for one fixed point") {
    const System s = build("thomas");
    const auto w = wrapping_number(find_fixed_points(CompiledField(s.field), s.params));
    CHECK_FALSE(w.defined);
  }

  TEST_CASE("wrapping number is translation invariant") {
    for (const char* name : {"sprott_f", "sprott_s", "rossler"}) {
      const System s = build(name);
      const auto w0 = wrapping_number(find_fixed_points(CompiledField(s.field), s.params));
      const VectorField moved = translated(s.field, Vec3(1.5, -2.0, 0.75));
      const auto w1 = wrapping_number(find_fixed_points(CompiledField(moved), s.params));
      REQUIRE(w0.defined);
      REQUIRE(w1.defined);
      INFO(name);
      CHECK(w1.W == doctest::Approx(w0.W).epsilon(1e-9));
    }
  }
}
