#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "flowcurv/dynamics.hpp"
#include "flowcurv/field.hpp"

namespace flowcurv {

enum class CurvatureField { Phi, PhiC, PhiT };

const char* to_string(CurvatureField w);
/// Accepts "phi", "phi_c", "phi_t". Throws LookupError otherwise.
CurvatureField curvature_field_from_string(const std::string& s);

struct CurvatureSample {
  Vec3 state = Vec3::Zero();
  /// det(X', X'', X''').
  double phi = 0.0;
  /// X' . (J X' x J X'').
  double phi_c = 0.0;
  /// X' . (X'' x (dJ/dt) X').
  double phi_t = 0.0;
  Vec3 grad_phi = Vec3::Zero();
};

/// Closed-form polynomials in x, y, z and the field parameters.
struct SymbolicCurvature {
  Expr phi;
  Expr phi_c;
  Expr phi_t;
  std::array<Expr, 3> grad_phi;
  std::array<Expr, 3> grad_phi_c;
  std::array<Expr, 3> grad_phi_t;

  const Expr& field(CurvatureField w) const;
  const std::array<Expr, 3>& gradient(CurvatureField w) const;
};

SymbolicCurvature phi_symbolic(const VectorField& f);

/// Compiled curvature evaluators for one field; parameters stay late-bound.
class CurvatureModel {
 public:
  explicit CurvatureModel(const VectorField& f);

  const CompiledField& compiled() const { return compiled_; }
  const SymbolicCurvature& symbolic() const { return symbolic_; }
  const VectorField& field() const { return compiled_.field(); }

  /// Numeric path: phi from the determinant, phi_c and phi_t from the
  /// triple products; grad_phi from the symbolic polynomial.
  CurvatureSample sample(const Vec3& x, std::span<const double> params) const;

  /// Symbolic path.
  double value(CurvatureField w, const Vec3& x, std::span<const double> params) const;
  Vec3 gradient(CurvatureField w, const Vec3& x, std::span<const double> params) const;
  double value_and_gradient(CurvatureField w, const Vec3& x, std::span<const double> params, Vec3& grad) const;

 private:
  CompiledField compiled_;
  SymbolicCurvature symbolic_;
  std::array<Program, 3> programs_;  // value, then gradient
};

CurvatureSample phi_eval(const VectorField& f, std::span<const double> params, const Vec3& state);

struct CrossingEvent {
  double t = 0.0;
  Vec3 state = Vec3::Zero();
  CurvatureField which = CurvatureField::PhiT;
  /// +1 for a - to + change, -1 for + to -.
  int direction = 0;
  double value = 0.0;
};

struct CrossingOptions {
  /// Events closer than eps_fp to any of these points are excluded.
  std::vector<Vec3> fixed_points;
  double eps_fp = 1e-3;
};

struct CrossingReport {
  /// Transversal events, time-ordered, fixed-point neighborhoods excluded.
  std::vector<CrossingEvent> events;
  /// Pairs of opposite sign changes closer in time than one output step.
  std::vector<CrossingEvent> tangencies;
  std::size_t excluded_near_fixed_point = 0;
  /// Median |field| over the samples.
  double scale = 0.0;
  /// max |field| over all returned events.
  double max_event_residual = 0.0;
};

/// Sign changes of the chosen field along a sampled trajectory, refined on
/// a cubic Hermite interpolant (positions and velocities at the samples)
/// with a bracketing bisection/secant solver.
CrossingReport crossings(const CurvatureModel& model, std::span<const double> params, const Trajectory& traj,
                         CurvatureField which, const CrossingOptions& opts = {});

/// Field values at every sample (parallel, order-preserving).
std::vector<CurvatureSample> sample_trajectory(const CurvatureModel& model, std::span<const double> params,
                                               const Trajectory& traj);

/// Points on phi = 0 from sign changes along random chords of the box.
std::vector<Vec3> manifold_points(const CurvatureModel& model, std::span<const double> params, const Vec3& lower,
                                  const Vec3& upper, std::size_t count, std::uint64_t seed);

struct DarbouxStats {
  std::size_t points = 0;
  std::size_t excluded_degenerate = 0;
  double median = 0.0;
  double mean = 0.0;
  double p90 = 0.0;
  double max = 0.0;
};

/// Distribution of |grad phi . F| / (||grad phi|| ||F||) over the points.
DarbouxStats darboux_residual(const CurvatureModel& model, std::span<const double> params,
                              std::span<const Vec3> points);

}  // namespace flowcurv
