#include <algorithm>
#include <cmath>
#include <sstream>

#include <doctest.h>

#include "flowcurv/catalog.hpp"
#include "flowcurv/curvature.hpp"
#include "flowcurv/dynamics.hpp"
#include "flowcurv/parallel.hpp"
#include "flowcurv/surface.hpp"

using namespace flowcurv;

namespace {

double sphere(const Vec3& x, Vec3& g) {
  g = 2 * x;
  return x.squaredNorm() - 1.0;
}

double plane(const Vec3& x, Vec3& g) {
  g = Vec3::UnitZ();
  return x[2];
}

Box cube(double lo, double hi) { return {Vec3::Constant(lo), Vec3::Constant(hi)}; }

std::size_t unflagged_components(const Mesh& m) {
  return static_cast<std::size_t>(std::count_if(m.components.begin(), m.components.end(),
                                                [](const MeshComponent& c) { return !c.spurious_candidate; }));
}

void check_indices(const Mesh& m) {
  const int n = static_cast<int>(m.vertices.size());
  for (const auto& t : m.triangles)
    for (int v : t) {
      CHECK(v >= 0);
      CHECK(v < n);
    }
}

}  // namespace

TEST_SUITE("surface_mesh") {
  TEST_CASE("box parsing") {
    const Box b = parse_box("-1,2,-3,4,-5,6");
    CHECK(b.lower == Vec3(-1, -3, -5));
    CHECK(b.upper == Vec3(2, 4, 6));
    CHECK_THROWS_AS(parse_box("1,2,3"), std::invalid_argument);
    CHECK_THROWS_AS(parse_box("1,1,0,1,0,1"), std::invalid_argument);
  }

  TEST_CASE("trajectory bounds add the margin") {
    Trajectory t;
    t.t = {0, 1};
    t.x = {Vec3(0, 0, 0), Vec3(10, 1, 2)};
    const Box b = trajectory_bounds(t, 0.2);
    CHECK(b.lower[0] == doctest::Approx(-1.0));
    CHECK(b.upper[0] == doctest::Approx(11.0));
    CHECK(b.upper[2] == doctest::Approx(2.2));
  }

  TEST_CASE("sphere") {
    Mesh m = extract(sphere, cube(-2, 2), 64);
    flag_singularities(m);
    REQUIRE(!m.empty());
    for (const auto& v : m.vertices) CHECK(std::abs(v.norm() - 1.0) < 2e-3);
    CHECK(m.flagged_count == 0);
    CHECK(m.components.size() == 1);
    CHECK(max_edge_valence(m) <= 2);
    CHECK(m.max_residual < 1e-5 * (m.grid_max - m.grid_min));
    check_indices(m);
  }

  TEST_CASE("plane") {
    const Box b{Vec3(-1, -1, -1), Vec3(1, 1, 1.1)};
    Mesh m = extract(plane, b, 32);
    flag_singularities(m);
    REQUIRE(!m.empty());
    for (const auto& v : m.vertices) CHECK(std::abs(v[2]) < 1e-9);
    CHECK(max_edge_valence(m) <= 2);
    CHECK(m.components.size() == 1);
  }

  TEST_CASE("surface outside the box gives an empty mesh") {
    const Mesh m = extract(sphere, cube(2, 3), 16);
    CHECK(m.empty());
    CHECK(m.vertices.empty());
  }

  TEST_CASE("component count is stable under refinement") {
    for (auto f : {ScalarField(sphere), ScalarField(plane)}) {
      const Box b{Vec3(-2, -2, -2), Vec3(2, 2, 2.1)};
      Mesh a = extract(f, b, 16), c = extract(f, b, 32);
      flag_singularities(a);
      flag_singularities(c);
      CHECK(unflagged_components(a) == unflagged_components(c));
    }
  }

  TEST_CASE("two spheres are two components") {
    auto two = [](const Vec3& x, Vec3& g) {
      const Vec3 a = x - Vec3(1.2, 0, 0), b = x + Vec3(1.2, 0, 0);
      const double fa = a.squaredNorm() - 0.5, fb = b.squaredNorm() - 0.5;
      g = fb * 2 * a + fa * 2 * b;
      return fa * fb;
    };
    Mesh m = extract(two, Box{Vec3(-3, -2, -2), Vec3(3, 2, 2)}, 48);
    flag_singularities(m);
    CHECK(m.components.size() == 2);
    CHECK(m.spurious_components == 0);
  }

  TEST_CASE("obj output") {
    const Mesh m = extract(sphere, cube(-1.5, 1.5), 8);
    const std::string obj = to_obj(m);
    std::istringstream in(obj);
    std::string line;
    std::size_t nv = 0, nf = 0;
    int min_index = 1 << 30;
    while (std::getline(in, line)) {
      if (line.rfind("v ", 0) == 0) ++nv;
      if (line.rfind("f ", 0) == 0) {
        ++nf;
        std::istringstream f(line.substr(2));
        int i;
        while (f >> i) min_index = std::min(min_index, i);
      }
    }
    CHECK(nv == m.vertices.size());
    CHECK(nf == m.triangles.size());
    CHECK(min_index == 1);
    const std::string csv = flags_csv(m);
    CHECK(csv.rfind("vertex,x,y,z,grad_norm,flagged,component,spurious_candidate\n", 0) == 0);
  }

  TEST_CASE("output does not depend on the thread count") {
    const System s = build("rossler", {}, "crossing");
    const CurvatureModel model(s.field);
    MeshJob job;
    job.bounds = Box{Vec3(-8, -8, -1), Vec3(8, 8, 12)};
    job.resolution = 40;
    const unsigned saved = thread_limit();
    set_thread_limit(1);
    const std::string a = to_obj(extract(model, s.params, job));
    set_thread_limit(4);
    const std::string b = to_obj(extract(model, s.params, job));
    set_thread_limit(saved);
    CHECK(a == b);
  }

  TEST_CASE("rossler phi_t surface around the attractor") {
    const System s = build("rossler", {}, "crossing");
    const CurvatureModel model(s.field);
    const auto tr = integrate(model.compiled(), s.params, Vec3(0.1, 0.1, 0.1), 2500.0, 0.01, 500.0);
    MeshJob job;
    job.bounds = trajectory_bounds(tr, 0.2);
    job.resolution = 48;
    Mesh m = extract(model, s.params, job);
    flag_singularities(m);
    REQUIRE(!m.empty());
    CHECK(max_edge_valence(m) <= 2);
    check_indices(m);
    // component-count oracle: the two lobes join into one piece
    CHECK(unflagged_components(m) == 1);
    CHECK(m.max_residual < 1e-5 * (m.grid_max - m.grid_min));
  }
}
