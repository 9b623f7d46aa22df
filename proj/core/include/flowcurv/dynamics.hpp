#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "flowcurv/field.hpp"

namespace flowcurv {

enum class TrajectoryStatus { Complete, Diverged, StepUnderflow };

const char* to_string(TrajectoryStatus s);

struct IntegrationOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-9;
  double divergence_radius = 1e6;
  double initial_step = 1e-3;
};

/// Samples t_k = transient + k * dt_output up to t_end, with t = 0 at the
/// initial condition.
struct Trajectory {
  std::vector<double> t;
  std::vector<Vec3> x;
  double t0 = 0.0;
  double dt_output = 0.0;
  TrajectoryStatus status = TrajectoryStatus::Complete;
  /// Time at which integration stopped early, if it did.
  double stop_time = 0.0;
  std::string method;
  double abs_tol = 0.0;
  double rel_tol = 0.0;

  std::size_t size() const { return t.size(); }
  bool empty() const { return t.empty(); }
};

/// Adaptive Dormand-Prince 5(4) with dense output. Stops with status
/// Diverged when ||X|| exceeds the divergence radius or becomes non-finite,
/// and StepUnderflow when the step controller cannot make progress.
Trajectory integrate(const CompiledField& f, std::span<const double> params, const Vec3& ic, double t_end,
                     double dt_output, double transient = 0.0, const IntegrationOptions& opts = {});

/// Classical fixed-step RK4, one sample per step from t = 0.
Trajectory integrate_rk4(const CompiledField& f, std::span<const double> params, const Vec3& ic, double t_end,
                         double step);

enum class FixedPointClass { Node, Saddle, FocusNode, SaddleFocus };
enum class FixedPointRole { Inner, Outer, Unassigned };
enum class ShapeLabel { Plane, ThreePlanes, PlaneTwoParaboloids };

const char* to_string(FixedPointClass c);
const char* to_string(FixedPointRole r);
const char* to_string(ShapeLabel s);

struct ShapeInfo {
  ShapeLabel label = ShapeLabel::Plane;
  bool has_phi_t_component = false;
};

using Eigenvalues = std::array<std::complex<double>, 3>;

struct FixedPoint {
  Vec3 location = Vec3::Zero();
  Mat3 jacobian = Mat3::Zero();
  /// Real eigenvalues first (ascending), then the complex pair with
  /// positive imaginary part first.
  Eigenvalues eigenvalues{};
  std::array<Eigen::Vector3cd, 3> eigenvectors{};
  FixedPointClass cls = FixedPointClass::Node;
  FixedPointRole role = FixedPointRole::Unassigned;
  ShapeInfo shape;
  double residual = 0.0;

  int unstable_count() const;
  /// max ||(J - lambda I) v|| over the eigenpairs, with ||v|| = 1.
  double eigen_residual() const;
};

/// Roots of the characteristic cubic via its companion matrix, polished by
/// Newton on the cubic. Conjugate pairs are made exactly conjugate.
Eigenvalues eigenvalues3(const Mat3& m);

/// Unit null vector of (m - lambda I).
Eigen::Vector3cd eigenvector3(const Mat3& m, std::complex<double> lambda);

FixedPointClass classify_spectrum(const Eigenvalues& ev);
ShapeInfo classify_fp_shape(FixedPointClass cls);
inline ShapeInfo classify_fp_shape(const FixedPoint& fp) { return classify_fp_shape(fp.cls); }

/// Fills eigen data, class and shape for a point (role left unassigned).
FixedPoint analyze_fixed_point(const CompiledField& f, std::span<const double> params, const Vec3& location);

struct FixedPointSearch {
  Vec3 lower{-20.0, -20.0, -20.0};
  Vec3 upper{20.0, 20.0, 20.0};
  int grid_n = 8;
  std::uint64_t seed = 0;
  /// Seed jitter as a fraction of the grid cell.
  double jitter = 0.25;
  double merge_tol = 1e-6;
  int max_iterations = 60;
};

/// Damped Newton from grid_n^3 jittered seeds. Non-converging seeds are
/// dropped. Roles: 2 unstable eigenvalues -> inner, 1 -> outer. The result
/// is sorted inner first, then outer, then by location.
std::vector<FixedPoint> find_fixed_points(const CompiledField& f, std::span<const double> params,
                                          const FixedPointSearch& search = {});

struct WrappingReport {
  bool defined = false;
  std::string reason;
  double omega = 0.0;     // rad/time
  double lambda3 = 0.0;   // 1/time
  double distance = 0.0;  // state units
  double W = 0.0;         // dimensionless
  Vec3 inner = Vec3::Zero();
  Vec3 outer = Vec3::Zero();
  Eigenvalues outer_eigenvalues{};
};

/// W = |omega / lambda3| * ||F+ - F-|| from the outer point's spectrum.
WrappingReport wrapping_number(const std::vector<FixedPoint>& fps);

/// Inner fixed point, or the only one, or nullptr.
const FixedPoint* inner_fixed_point(const std::vector<FixedPoint>& fps);

}  // namespace flowcurv
