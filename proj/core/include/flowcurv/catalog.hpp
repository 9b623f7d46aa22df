#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowcurv/field.hpp"

namespace flowcurv {

/// Coefficients of the common quadratic form
///
///   x' = a2 y + a3 z + a4 xz + a5 z^2
///   y' = b1 x + b2 y + b3 z + b4 y^2 + b5 z^2
///   z' = c1 x + c2 y + c3 z + c4 xy + c5 xz + c6 x^2 + c7 y^2
///
/// stored as expression text over the system's field parameters, in the
/// order a2 a3 a4 a5 b1 b2 b3 b4 b5 c1 c2 c3 c4 c5 c6 c7.
using CoefficientRow = std::array<std::string, 16>;

inline constexpr std::array<const char*, 16> kCoefficientNames = {
    "a2", "a3", "a4", "a5", "b1", "b2", "b3", "b4", "b5", "c1", "c2", "c3", "c4", "c5", "c6", "c7"};

/// Expands a coefficient row into the three field components.
std::array<Expr, 3> general_form(const CoefficientRow& row, const std::vector<std::string>& field_params);

enum class Orientation { Direct, Inverted };

struct Preset {
  std::string name;
  std::map<std::string, double> params;
};

struct SystemDef {
  std::string name;
  std::string title;
  /// 1 for two-fixed-point systems, 2 for single-fixed-point ones, 0 for
  /// entries outside the tables.
  int table = 0;
  std::optional<CoefficientRow> coefficients;
  /// Used when `coefficients` is empty.
  std::array<std::string, 3> components;
  /// Parameters a user sets, with the reference values as defaults.
  std::vector<Parameter> user_params;
  /// Parameters that appear in the field expressions. Identical to the user
  /// parameters unless `derive` is set.
  std::vector<std::string> field_params;
  /// Maps user parameter values (declaration order) to field parameter
  /// values, for coefficients such as b/a that the expression grammar
  /// cannot state directly.
  std::function<std::vector<double>(std::span<const double>)> derive;
  std::optional<Vec3> default_ic;
  int expected_fixed_points = 0;
  Orientation orientation = Orientation::Direct;
  std::vector<Preset> presets;
  /// Preset used by whole-catalog surveys; empty means defaults.
  std::string survey_preset;
  std::string notes;
  bool listed = true;

  VectorField field() const;
};

/// A catalog system with every parameter bound.
struct System {
  std::string name;
  VectorField field;
  /// Field parameter values, aligned with field.params().
  std::vector<double> params;
  /// User-facing parameter values (what was set or defaulted).
  std::map<std::string, double> user_params;
  std::optional<Vec3> default_ic;
  const SystemDef* def = nullptr;
};

/// The 19 listed systems followed by unlisted helper entries
/// (`rossler_original`).
const std::vector<SystemDef>& catalog();

/// Listed systems only, in table order.
std::vector<const SystemDef*> list_systems();

/// Throws LookupError for an unknown name.
const SystemDef& find_system(const std::string& name);

/// Binds a catalog system. `overrides` name user parameters; a preset name
/// may be given to start from its values. Throws LookupError for unknown
/// system, preset or parameter names.
System build(const std::string& name, const std::map<std::string, double>& overrides = {},
             const std::string& preset = {});

/// Wraps an arbitrary field (for example one read from a system file).
System make_custom_system(std::string name, VectorField field, const std::map<std::string, double>& overrides = {});

/// Translates the field so that `fixed_point` moves to the origin:
/// g(X) = F(X + fixed_point), with parameters substituted and the result
/// expanded. Constant terms left over from rounding are dropped, so g(0) = 0
/// exactly. Throws NumericalError if ||F(fixed_point)|| >= 1e-9.
VectorField center(const VectorField& f, std::span<const double> params, const Vec3& fixed_point);

}  // namespace flowcurv
