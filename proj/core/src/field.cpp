#include "flowcurv/field.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "flowcurv/errors.hpp"

namespace flowcurv {

VectorField::VectorField(std::array<Expr, 3> components, std::vector<Parameter> params)
    : components_(std::move(components)), params_(std::move(params)) {
  std::set<std::string> declared;
  for (const auto& p : params_)
    if (!declared.insert(p.name).second) throw std::invalid_argument("duplicate parameter '" + p.name + "'");
  for (const auto& c : components_)
    for (const auto& name : c.parameters())
      if (!declared.contains(name)) throw LookupError("undeclared parameter '" + name + "'");
}

std::vector<std::string> VectorField::param_names() const {
  std::vector<std::string> names;
  for (const auto& p : params_) names.push_back(p.name);
  return names;
}

std::vector<double> VectorField::defaults() const {
  std::vector<double> v;
  for (const auto& p : params_) v.push_back(p.default_value);
  return v;
}

std::optional<std::size_t> VectorField::param_index(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (params_[i].name == name) return i;
  return std::nullopt;
}

std::vector<double> VectorField::bind(const std::map<std::string, double>& overrides) const {
  auto values = defaults();
  for (const auto& [name, value] : overrides) {
    auto idx = param_index(name);
    if (!idx) throw LookupError("unknown parameter '" + name + "'");
    values[*idx] = value;
  }
  return values;
}

ParamLookup VectorField::lookup(std::span<const double> values) const {
  ParamLookup out;
  for (std::size_t i = 0; i < params_.size() && i < values.size(); ++i) out[params_[i].name] = values[i];
  return out;
}

bool SymbolicJacobian::material_is_zero() const {
  for (const auto& row : material)
    for (const auto& e : row)
      if (!e.is_zero()) return false;
  return true;
}

SymbolicJacobian jacobian(const VectorField& f) {
  SymbolicJacobian j;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) j.entries[i][k] = diff(f.component(i), k);
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) {
      std::vector<Expr> terms;
      for (int m = 0; m < 3; ++m) terms.push_back(diff(j.entries[i][k], m) * f.component(m));
      j.material[i][k] = Expr::sum(std::move(terms));
    }
  return j;
}

namespace {

std::vector<Expr> full_outputs(const VectorField& f, const SymbolicJacobian& j) {
  std::vector<Expr> out(f.components().begin(), f.components().end());
  for (const auto& row : j.entries) out.insert(out.end(), row.begin(), row.end());
  for (const auto& row : j.material) out.insert(out.end(), row.begin(), row.end());
  return out;
}

}  // namespace

CompiledField::CompiledField(const VectorField& f)
    : field_(f),
      jac_(flowcurv::jacobian(f)),
      velocity_program_(f.components(), f.param_names()),
      full_program_(full_outputs(f, jac_), f.param_names()) {}

Vec3 CompiledField::velocity(const Vec3& x, std::span<const double> params) const {
  Vec3 v;
  velocity_program_.run(x.data(), params, std::span<double>(v.data(), 3));
  return v;
}

Mat3 CompiledField::jacobian(const Vec3& x, std::span<const double> params) const {
  return stack(x, params).jacobian;
}

DerivativeStack CompiledField::stack(const Vec3& x, std::span<const double> params) const {
  std::array<double, 21> out{};
  full_program_.run(x.data(), params, out);
  DerivativeStack s;
  s.x = x;
  s.velocity = Vec3(out[0], out[1], out[2]);
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) {
      s.jacobian(i, k) = out[3 + 3 * i + k];
      s.jacobian_rate(i, k) = out[12 + 3 * i + k];
    }
  s.acceleration = s.jacobian * s.velocity;
  s.jerk = s.jacobian * s.acceleration + s.jacobian_rate * s.velocity;
  return s;
}

DerivativeStack time_derivatives(const VectorField& f, std::span<const double> params, const Vec3& state) {
  return CompiledField(f).stack(state, params);
}

}  // namespace flowcurv
