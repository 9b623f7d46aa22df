#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowcurv/dynamics.hpp"
#include "flowcurv/field.hpp"

namespace flowcurv {

enum class CrossingDirection { Positive, Negative, Both };

const char* to_string(CrossingDirection d);

struct SectionSpec {
  Vec3 point = Vec3::Zero();
  /// Unit normal.
  Vec3 normal = Vec3::UnitZ();
  CrossingDirection direction = CrossingDirection::Positive;
  /// When set, rho = (X - point) . axis (signed in-plane distance);
  /// otherwise rho = ||X - point||.
  std::optional<Vec3> rho_axis;
  /// Keep only crossings with rho > 0.
  bool half_plane = false;
};

/// Parses "p=PX,PY,PZ;n=NX,NY,NZ;dir=-" with optional "u=UX,UY,UZ" (rho
/// axis, implies the half-plane rho > 0). dir is +, - or both. Throws
/// std::invalid_argument.
SectionSpec parse_section(const std::string& text);
std::string format_section(const SectionSpec& s);

struct SectionCrossing {
  double t = 0.0;
  Vec3 state = Vec3::Zero();
  double rho = 0.0;
  /// +1 when the flow crosses along +normal.
  int direction = 0;
  /// |F . n| / ||F|| at the crossing.
  double transversality = 0.0;
};

struct SectionResult {
  std::vector<SectionCrossing> crossings;
  std::size_t tangential_dropped = 0;
  std::size_t outside_half_plane = 0;
  /// max |(X - point) . n| / max(1, ||X||) over accepted crossings.
  double max_residual = 0.0;
};

/// Sign changes of (X - point) . n between samples, refined on the cubic
/// Hermite interpolant built from positions and F at the samples.
SectionResult section_crossings(const CompiledField& f, std::span<const double> params, const Trajectory& traj,
                                const SectionSpec& spec);

/// Plane through `center` normal to the coordinate axis of largest
/// trajectory variance, half-plane on the side of the trajectory centroid,
/// crossing direction with the larger summed transversality.
SectionSpec default_section(const CompiledField& f, std::span<const double> params, const Trajectory& traj,
                            const Vec3& center);

struct SegmentationOptions {
  std::size_t min_points = 200;
  int smoothing_window = 5;
  int r_min = 8;
  double violation_budget = 0.02;
  /// A panel whose image span is below minor_ratio of an adjacent panel's
  /// and lies at least merge_overlap inside it counts as an artifact.
  double minor_ratio = 0.2;
  double merge_overlap = 0.8;
};

struct Panel {
  double lo = 0.0;
  double hi = 0.0;
  /// +1 increasing, -1 decreasing, 0 too few points.
  int direction = 0;
  double image_lo = 0.0;
  double image_hi = 0.0;
  std::size_t count = 0;
  /// Fraction of smoothed slope signs against `direction`.
  double violation = 0.0;
  bool minor = false;
};

struct ReturnMap {
  std::vector<double> rho;
  /// (rho_k, rho_k+1) in time order.
  std::vector<std::pair<double, double>> pairs;
  bool partitioned = false;
  std::string warning;
  /// Ascending branch boundaries c_1 < ... < c_{m-1}.
  std::vector<double> critical_points;
  std::vector<Panel> panels;
  /// Branch index of rho_k for each pair, values in [0, m).
  std::vector<int> symbols;
  int m = 1;
  /// m after folding minor panels into a neighbour.
  int merged_m = 1;
  SegmentationOptions options;

  /// Branch index of a rho value.
  int symbol_of(double r) const;
  /// True when every panel is within the violation budget.
  bool monotone() const;
};

/// Pairs sorted by rho_k; rho_k+1 smoothed by a moving median (edges
/// repeated); a boundary is placed where the smoothed slope takes the
/// opposite sign r_min times in a row (zero slopes skipped).
ReturnMap build_return_map(std::span<const double> rho, const SegmentationOptions& opts = {});

struct TransitionMatrix {
  int m = 1;
  std::vector<std::vector<int>> gamma;
};

/// gamma[i][j] = 1 iff branch i is followed by branch j somewhere in the
/// symbol sequence.
TransitionMatrix transition_matrix(const ReturnMap& map);

}  // namespace flowcurv
