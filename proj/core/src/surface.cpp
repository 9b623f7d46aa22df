#include "flowcurv/surface.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "flowcurv/parallel.hpp"
#include "mc_tables.hpp"

namespace flowcurv {

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

void label_components(Mesh& mesh) {
  DisjointSets sets(mesh.vertices.size());
  for (const auto& t : mesh.triangles) {
    sets.unite(static_cast<std::size_t>(t[0]), static_cast<std::size_t>(t[1]));
    sets.unite(static_cast<std::size_t>(t[0]), static_cast<std::size_t>(t[2]));
  }
  std::map<std::size_t, int> ids;
  mesh.component.assign(mesh.vertices.size(), -1);
  mesh.components.clear();
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    const auto root = sets.find(v);
    auto [it, inserted] = ids.emplace(root, static_cast<int>(ids.size()));
    if (inserted) {
      MeshComponent c;
      c.bounds.lower = Vec3::Constant(std::numeric_limits<double>::infinity());
      c.bounds.upper = Vec3::Constant(-std::numeric_limits<double>::infinity());
      mesh.components.push_back(c);
    }
    mesh.component[v] = it->second;
    auto& c = mesh.components[static_cast<std::size_t>(it->second)];
    ++c.vertices;
    c.bounds.lower = c.bounds.lower.cwiseMin(mesh.vertices[v]);
    c.bounds.upper = c.bounds.upper.cwiseMax(mesh.vertices[v]);
  }
  for (const auto& t : mesh.triangles) ++mesh.components[static_cast<std::size_t>(mesh.component[static_cast<std::size_t>(t[0])])].triangles;
}

}  // namespace

Box trajectory_bounds(const Trajectory& traj, double margin) {
  if (traj.empty()) throw std::invalid_argument("empty trajectory");
  Box b{traj.x.front(), traj.x.front()};
  for (const auto& x : traj.x) {
    b.lower = b.lower.cwiseMin(x);
    b.upper = b.upper.cwiseMax(x);
  }
  const Vec3 pad = 0.5 * margin * (b.upper - b.lower);
  b.lower -= pad;
  b.upper += pad;
  return b;
}

Box parse_box(const std::string& text) {
  std::stringstream in(text);
  std::array<double, 6> v{};
  char sep = 0;
  for (int i = 0; i < 6; ++i) {
    if (!(in >> v[static_cast<std::size_t>(i)])) throw std::invalid_argument("bounds must be x0,x1,y0,y1,z0,z1");
    if (i < 5 && !(in >> sep && sep == ',')) throw std::invalid_argument("bounds must be x0,x1,y0,y1,z0,z1");
  }
  if (in >> sep) throw std::invalid_argument("trailing characters in bounds");
  Box b{Vec3(v[0], v[2], v[4]), Vec3(v[1], v[3], v[5])};
  if (!((b.upper - b.lower).minCoeff() > 0.0)) throw std::invalid_argument("bounds must be nondegenerate");
  return b;
}

Mesh extract(const ScalarField& field, const Box& bounds, int resolution, double iso) {
  if (resolution < 8) throw std::invalid_argument("resolution must be at least 8");
  if (!((bounds.upper - bounds.lower).minCoeff() > 0.0)) throw std::invalid_argument("bounds must be nondegenerate");
  const auto r = static_cast<std::size_t>(resolution);
  const std::size_t nn = r + 1;
  const Vec3 h = (bounds.upper - bounds.lower) / static_cast<double>(resolution);
  const auto node_index = [nn](std::size_t i, std::size_t j, std::size_t k) { return i + nn * (j + nn * k); };
  const auto node_pos = [&](std::size_t i, std::size_t j, std::size_t k) {
    return Vec3(bounds.lower[0] + static_cast<double>(i) * h[0], bounds.lower[1] + static_cast<double>(j) * h[1],
                bounds.lower[2] + static_cast<double>(k) * h[2]);
  };

  std::vector<double> values(nn * nn * nn);
  parallel_for(
      nn * nn,
      [&](std::size_t jk) {
        const std::size_t j = jk % nn, k = jk / nn;
        Vec3 g;
        for (std::size_t i = 0; i < nn; ++i) values[node_index(i, j, k)] = field(node_pos(i, j, k), g);
      },
      64);

  Mesh mesh;
  mesh.cell_diagonal = h.norm();
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  mesh.grid_min = *mn;
  mesh.grid_max = *mx;

  std::array<std::vector<int>, 3> edge_vertex;
  for (auto& e : edge_vertex) e.assign(values.size(), -1);
  const auto vertex_on_edge = [&](std::size_t i, std::size_t j, std::size_t k, int edge) {
    const auto& c0 = detail::kCorner[static_cast<std::size_t>(detail::kEdgeCorners[static_cast<std::size_t>(edge)][0])];
    const auto& c1 = detail::kCorner[static_cast<std::size_t>(detail::kEdgeCorners[static_cast<std::size_t>(edge)][1])];
    int axis = 0;
    while (c0[static_cast<std::size_t>(axis)] == c1[static_cast<std::size_t>(axis)]) ++axis;
    const std::size_t bi = i + static_cast<std::size_t>(std::min(c0[0], c1[0]));
    const std::size_t bj = j + static_cast<std::size_t>(std::min(c0[1], c1[1]));
    const std::size_t bk = k + static_cast<std::size_t>(std::min(c0[2], c1[2]));
    const std::size_t base = node_index(bi, bj, bk);
    int& slot = edge_vertex[static_cast<std::size_t>(axis)][base];
    if (slot >= 0) return slot;
    std::size_t oi = bi, oj = bj, ok = bk;
    (axis == 0 ? oi : axis == 1 ? oj : ok) += 1;
    const double v0 = values[base], v1 = values[node_index(oi, oj, ok)];
    const double s = v1 != v0 ? std::clamp((iso - v0) / (v1 - v0), 0.0, 1.0) : 0.5;
    const Vec3 p0 = node_pos(bi, bj, bk), p1 = node_pos(oi, oj, ok);
    slot = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back(p0 + s * (p1 - p0));
    return slot;
  };

  for (std::size_t k = 0; k < r; ++k)
    for (std::size_t j = 0; j < r; ++j)
      for (std::size_t i = 0; i < r; ++i) {
        unsigned cube = 0;
        for (std::size_t c = 0; c < 8; ++c) {
          const auto& o = detail::kCorner[c];
          const double v = values[node_index(i + static_cast<std::size_t>(o[0]), j + static_cast<std::size_t>(o[1]),
                                             k + static_cast<std::size_t>(o[2]))];
          if (v < iso) cube |= 1u << c;
        }
        if (detail::kEdgeTable[cube] == 0) continue;
        const auto& tri = detail::kTriTable[cube];
        for (std::size_t t = 0; t + 2 < tri.size() && tri[t] >= 0; t += 3) {
          const std::array<int, 3> ids{vertex_on_edge(i, j, k, tri[t]), vertex_on_edge(i, j, k, tri[t + 1]),
                                       vertex_on_edge(i, j, k, tri[t + 2])};
          if (ids[0] == ids[1] || ids[1] == ids[2] || ids[0] == ids[2]) continue;
          mesh.triangles.push_back(ids);
        }
      }

  const double diag = mesh.cell_diagonal;
  mesh.grad_norm.assign(mesh.vertices.size(), 0.0);
  std::vector<double> residual(mesh.vertices.size(), 0.0);
  parallel_for(
      mesh.vertices.size(),
      [&](std::size_t v) {
        const Vec3 start = mesh.vertices[v];
        Vec3 x = start, g;
        double f = field(x, g) - iso;
        Vec3 best = x;
        double best_f = f;
        Vec3 best_g = g;
        for (int it = 0; it < 12; ++it) {
          const double gg = g.squaredNorm();
          if (!(g.norm() > 1e-8) || std::abs(f) == 0.0) break;
          const Vec3 step = (f / gg) * g;
          x -= step;
          if ((x - start).norm() > diag) break;
          f = field(x, g) - iso;
          if (std::abs(f) < std::abs(best_f)) {
            best = x;
            best_f = f;
            best_g = g;
          }
          if (step.norm() < 1e-14 * diag) break;
        }
        mesh.vertices[v] = best;
        mesh.grad_norm[v] = best_g.norm();
        residual[v] = std::abs(best_f);
      },
      256);

  mesh.flagged.assign(mesh.vertices.size(), false);
  for (double rv : residual) mesh.max_residual = std::max(mesh.max_residual, rv);
  mesh.residual = std::move(residual);
  label_components(mesh);
  return mesh;
}

Mesh extract(const CurvatureModel& model, std::span<const double> params, const MeshJob& job) {
  const ScalarField f = [&model, params, w = job.field](const Vec3& x, Vec3& g) {
    return model.value_and_gradient(w, x, params, g);
  };
  return extract(f, job.bounds, job.resolution, job.iso);
}

void flag_singularities(Mesh& mesh, double rel_threshold) {
  mesh.flagged.assign(mesh.vertices.size(), false);
  mesh.flagged_count = 0;
  mesh.spurious_components = 0;
  for (auto& c : mesh.components) {
    c.flagged = 0;
    c.spurious_candidate = false;
  }
  if (mesh.vertices.empty()) return;
  std::vector<double> g = mesh.grad_norm;
  std::nth_element(g.begin(), g.begin() + static_cast<std::ptrdiff_t>(g.size() / 2), g.end());
  const double threshold = rel_threshold * g[g.size() / 2];
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    if (mesh.grad_norm[v] < threshold) {
      mesh.flagged[v] = true;
      ++mesh.flagged_count;
      ++mesh.components[static_cast<std::size_t>(mesh.component[v])].flagged;
    }
  }
  for (auto& c : mesh.components) {
    c.spurious_candidate = 2 * c.flagged > c.vertices;
    if (c.spurious_candidate) ++mesh.spurious_components;
  }
  mesh.max_residual = 0.0;
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
    if (!mesh.flagged[v]) mesh.max_residual = std::max(mesh.max_residual, mesh.residual[v]);
}

std::string to_obj(const Mesh& mesh) {
  std::string out;
  out.reserve(mesh.vertices.size() * 48 + mesh.triangles.size() * 24);
  char buf[128];
  for (const auto& v : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "v %.10g %.10g %.10g\n", v[0], v[1], v[2]);
    out += buf;
  }
  for (const auto& t : mesh.triangles) {
    std::snprintf(buf, sizeof buf, "f %d %d %d\n", t[0] + 1, t[1] + 1, t[2] + 1);
    out += buf;
  }
  return out;
}

std::string flags_csv(const Mesh& mesh) {
  std::string out = "vertex,x,y,z,grad_norm,flagged,component,spurious_candidate\n";
  char buf[256];
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    const auto& p = mesh.vertices[v];
    const int c = mesh.component.empty() ? -1 : mesh.component[v];
    const bool spur = c >= 0 && mesh.components[static_cast<std::size_t>(c)].spurious_candidate;
    std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g,%.10g,%.6g,%d,%d,%d\n", v, p[0], p[1], p[2], mesh.grad_norm[v],
                  mesh.flagged.empty() ? 0 : static_cast<int>(mesh.flagged[v]), c, static_cast<int>(spur));
    out += buf;
  }
  return out;
}

int max_edge_valence(const Mesh& mesh) {
  std::map<std::pair<int, int>, int> count;
  int worst = 0;
  for (const auto& t : mesh.triangles)
    for (int e = 0; e < 3; ++e) {
      const int a = t[static_cast<std::size_t>(e)], b = t[static_cast<std::size_t>((e + 1) % 3)];
      worst = std::max(worst, ++count[{std::min(a, b), std::max(a, b)}]);
    }
  return worst;
}

}  // namespace flowcurv
