#pragma once

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "flowcurv/curvature.hpp"
#include "flowcurv/dynamics.hpp"

namespace flowcurv {

struct Box {
  Vec3 lower = Vec3::Constant(-1.0);
  Vec3 upper = Vec3::Constant(1.0);
};

/// Bounding box of the samples, each axis grown by `margin` of its extent
/// (half on each side).
Box trajectory_bounds(const Trajectory& traj, double margin = 0.2);

/// "x0,x1,y0,y1,z0,z1". Throws std::invalid_argument.
Box parse_box(const std::string& text);

struct MeshJob {
  CurvatureField field = CurvatureField::PhiT;
  Box bounds;
  /// Cells per axis, >= 8.
  int resolution = 64;
  double iso = 0.0;
};

/// Value at x; writes the gradient into `grad`.
using ScalarField = std::function<double(const Vec3& x, Vec3& grad)>;

struct MeshComponent {
  std::size_t vertices = 0;
  std::size_t triangles = 0;
  std::size_t flagged = 0;
  bool spurious_candidate = false;
  Box bounds;
};

struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<double> grad_norm;
  /// |field - iso| per vertex after polishing.
  std::vector<double> residual;
  std::vector<bool> flagged;
  /// Component index per vertex.
  std::vector<int> component;
  std::vector<MeshComponent> components;

  double grid_min = 0.0;
  double grid_max = 0.0;
  double cell_diagonal = 0.0;
  /// max |field - iso| over unflagged vertices after polishing.
  double max_residual = 0.0;
  std::size_t flagged_count = 0;
  std::size_t spurious_components = 0;

  bool empty() const { return triangles.empty(); }
};

/// Marching cubes over a regular grid with linear edge interpolation, then a
/// gradient Newton polish of each vertex. Grid values and polishing run in
/// parallel; assembly walks cells in a fixed order, so output is
/// deterministic. Components are filled; flags are not.
Mesh extract(const ScalarField& field, const Box& bounds, int resolution, double iso = 0.0);

Mesh extract(const CurvatureModel& model, std::span<const double> params, const MeshJob& job);

/// Flags vertices with ||grad|| < rel_threshold * median ||grad|| and marks
/// components where flagged vertices are the majority.
void flag_singularities(Mesh& mesh, double rel_threshold = 1e-6);

/// Wavefront OBJ text (v and f lines, 1-based indices).
std::string to_obj(const Mesh& mesh);

/// vertex,x,y,z,grad_norm,flagged,component,spurious_candidate
std::string flags_csv(const Mesh& mesh);

/// Largest number of triangles sharing one edge.
int max_edge_valence(const Mesh& mesh);

}  // namespace flowcurv
