#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flowcurv/catalog.hpp"
#include "flowcurv/curvature.hpp"
#include "flowcurv/dynamics.hpp"
#include "flowcurv/section.hpp"
#include "flowcurv/surface.hpp"

namespace flowcurv {

struct ClassifyOptions {
  double t_end = 20000.0;
  double transient = 500.0;
  double dt = 0.01;
  /// Offset from the inner fixed point when the catalog has no initial
  /// condition.
  double ic_offset = 0.1;
  std::optional<Vec3> ic;
  std::optional<SectionSpec> section;
  SegmentationOptions segmentation;
  FixedPointSearch search;
  double eps_fp = 1e-3;
  std::size_t darboux_points = 200;
  /// 0 disables mesh extraction.
  int mesh_resolution = 48;
  double mesh_margin = 0.2;
};

enum class Verdict { Wrapping, Crossing, Undetermined };

const char* to_string(Verdict v);

struct MeshSummary {
  bool computed = false;
  CurvatureField field = CurvatureField::PhiT;
  Box bounds;
  int resolution = 0;
  std::size_t vertices = 0;
  std::size_t triangles = 0;
  std::size_t components = 0;
  std::size_t flagged_vertices = 0;
  std::size_t spurious_components = 0;
};

struct ClassifyReport {
  std::string system;
  std::string preset;
  std::map<std::string, double> user_params;
  std::vector<std::pair<std::string, double>> field_params;
  std::string notes;
  ClassifyOptions options;

  std::vector<FixedPoint> fixed_points;
  int expected_fixed_points = 0;
  WrappingReport wrapping;

  Vec3 ic = Vec3::Zero();
  std::string ic_source;
  TrajectoryStatus status = TrajectoryStatus::Complete;
  double stop_time = 0.0;
  std::size_t samples = 0;

  Verdict verdict = Verdict::Undetermined;
  std::string verdict_reason;
  std::size_t crossing_count = 0;
  std::size_t tangency_count = 0;
  std::size_t excluded_near_fixed_point = 0;
  double phi_t_scale = 0.0;
  std::optional<double> first_crossing_time;

  SectionSpec section;
  std::size_t section_crossings = 0;
  std::size_t section_tangential = 0;
  ReturnMap return_map;
  TransitionMatrix gamma;

  DarbouxStats darboux;
  MeshSummary mesh;
};

/// Fixed points, trajectory, phi_t crossings, default section, return map,
/// transition matrix, Darboux residuals and a flagged phi_t mesh.
/// Throws NumericalError when the field has no fixed point.
ClassifyReport classify_system(const System& sys, const ClassifyOptions& opts = {}, const std::string& preset = {});

struct ClassifyJob {
  std::string name;
  std::map<std::string, double> overrides;
  std::string preset;
};

/// Every listed catalog system with its survey preset.
std::vector<ClassifyJob> survey_jobs();

/// Runs jobs on up to `jobs` threads; results keep the job order.
std::vector<ClassifyReport> classify_all(const std::vector<ClassifyJob>& list, const ClassifyOptions& opts,
                                         unsigned jobs);

/// Stable JSON; every number carries a unit ("dimensionless" when none).
std::string report_json(const ClassifyReport& r, int indent = 2);
std::string reports_json(const std::vector<ClassifyReport>& rs, int indent = 2);

/// JSON fragments shared with the CLI.
std::string fixed_points_json(const std::vector<FixedPoint>& fps, int indent = 2);
std::string wrapping_json(const WrappingReport& w, int indent = 2);

}  // namespace flowcurv
