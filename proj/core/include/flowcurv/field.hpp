#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "flowcurv/expr.hpp"

namespace flowcurv {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct Parameter {
  std::string name;
  double default_value = 0.0;
};

/// Three-component polynomial vector field dX/dt = F(X) with named,
/// late-bound parameters.
class VectorField {
 public:
  /// Throws LookupError if a component references an undeclared parameter,
  /// std::invalid_argument on duplicate parameter names.
  VectorField(std::array<Expr, 3> components, std::vector<Parameter> params = {});

  const Expr& component(int i) const { return components_[static_cast<std::size_t>(i)]; }
  const std::array<Expr, 3>& components() const { return components_; }
  const std::vector<Parameter>& params() const { return params_; }

  std::vector<std::string> param_names() const;
  std::vector<double> defaults() const;
  std::optional<std::size_t> param_index(const std::string& name) const;

  /// Parameter values in declaration order, defaults replaced by
  /// `overrides`. Throws LookupError for an undeclared name.
  std::vector<double> bind(const std::map<std::string, double>& overrides = {}) const;

  ParamLookup lookup(std::span<const double> values) const;

 private:
  std::array<Expr, 3> components_;
  std::vector<Parameter> params_;
};

/// J[i][j] = dF_i/dx_j, and the material derivative dJ/dt = sum_k (dJ/dx_k) F_k.
struct SymbolicJacobian {
  std::array<std::array<Expr, 3>, 3> entries;
  std::array<std::array<Expr, 3>, 3> material;

  /// True when every material-derivative entry is the constant 0, which is
  /// the case for any affine field.
  bool material_is_zero() const;
};

SymbolicJacobian jacobian(const VectorField& f);

/// State and its first three time derivatives along the flow, with the
/// numeric Jacobian and its material derivative at the same state.
struct DerivativeStack {
  Vec3 x;
  Vec3 velocity;
  Vec3 acceleration;
  Vec3 jerk;
  Mat3 jacobian;
  Mat3 jacobian_rate;
};

/// Compiled evaluator for a field, its Jacobian and dJ/dt.
class CompiledField {
 public:
  explicit CompiledField(const VectorField& f);

  const VectorField& field() const { return field_; }
  const SymbolicJacobian& symbolic_jacobian() const { return jac_; }

  Vec3 velocity(const Vec3& x, std::span<const double> params) const;
  Mat3 jacobian(const Vec3& x, std::span<const double> params) const;

  /// X' = F, X'' = J X', X''' = J X'' + (dJ/dt) X'. The third derivative is
  /// exact, not differenced.
  DerivativeStack stack(const Vec3& x, std::span<const double> params) const;

 private:
  VectorField field_;
  SymbolicJacobian jac_;
  Program velocity_program_;
  Program full_program_;  // F(3), J(9) row-major, dJ/dt(9) row-major
};

DerivativeStack time_derivatives(const VectorField& f, std::span<const double> params, const Vec3& state);

}  // namespace flowcurv
