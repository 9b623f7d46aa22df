#include "flowcurv/catalog.hpp"

#include <cmath>

#include "flowcurv/errors.hpp"
#include "flowcurv/parser.hpp"
#include "flowcurv/polynomial.hpp"

namespace flowcurv {

namespace {

Expr var(int i) { return Expr::variable(i); }

std::vector<Parameter> params(std::initializer_list<std::pair<const char*, double>> list) {
  std::vector<Parameter> out;
  for (const auto& [n, v] : list) out.push_back({n, v});
  return out;
}

std::vector<std::string> names_of(const std::vector<Parameter>& p) {
  std::vector<std::string> out;
  for (const auto& q : p) out.push_back(q.name);
  return out;
}

SystemDef table_system(std::string name, std::string title, int table, CoefficientRow row,
                       std::vector<Parameter> user, int fixed_points) {
  SystemDef d;
  d.name = std::move(name);
  d.title = std::move(title);
  d.table = table;
  d.coefficients = std::move(row);
  d.field_params = names_of(user);
  d.user_params = std::move(user);
  d.expected_fixed_points = fixed_points;
  return d;
}

// Table-2 rows only populate a2 a3 | b1 b2 b3 b5 | c1 c2 c3 c4 c7.
CoefficientRow single_fp_row(std::array<std::string, 11> r) {
  return {r[0], r[1], "0", "0", r[2], r[3], r[4], "0", r[5], r[6], r[7], r[8], r[9], "0", "0", r[10]};
}

std::vector<SystemDef> make_catalog() {
  std::vector<SystemDef> c;

  // Centered Roessler. The user sets the original (a, b, c); the centered
  // coefficients b~ = z_- and c~ = c - x_- follow from the inner fixed point
  // x_-/a = -y_- = z_- = (c - sqrt(c^2 - 4ab)) / 2a.
  {
    SystemDef d = table_system("rossler", "Roessler (centered)", 1,
                               {"-1", "-1", "0", "0", "1", "a", "0", "0", "0", "b_tilde", "0", "-c_tilde", "0", "1",
                                "0", "0"},
                               params({{"a", 0.432}, {"b", 2.0}, {"c", 4.0}}), 2);
    d.field_params = {"a", "b_tilde", "c_tilde"};
    d.derive = [](std::span<const double> u) {
      const double a = u[0], b = u[1], cc = u[2];
      const double disc = cc * cc - 4.0 * a * b;
      if (disc < 0.0 || a == 0.0) throw NumericalError("Roessler parameters give no real inner fixed point");
      const double zm = (cc - std::sqrt(disc)) / (2.0 * a);
      const double xm = a * zm;
      return std::vector<double>{a, zm, cc - xm};
    };
    d.presets = {{"two_branch", {{"a", 0.432}}},
                 {"four_branch", {{"a", 0.52}}},
                 {"crossing", {{"a", 0.556}}},
                 {"non_crossing", {{"a", 0.43295}}}};
    d.survey_preset = "crossing";
    c.push_back(std::move(d));
  }

  // Two fixed points.
  c.push_back(table_system("sprott_f", "Sprott F", 1,
                           {"-1", "1", "0", "0", "1", "a", "0", "0", "0", "0", "0", "-1", "0", "0", "1", "0"},
                           params({{"a", 0.5}}), 2));
  c.push_back(table_system("sprott_g", "Sprott G", 1,
                           {"-1", "1", "0", "0", "1", "a", "0", "0", "0", "0", "0", "-b", "1", "0", "0", "0"},
                           params({{"a", 0.42}, {"b", 1.29}}), 2));
  c.push_back(table_system("sprott_h", "Sprott H", 1,
                           {"-1", "0", "0", "1", "1", "a", "0", "0", "0", "1", "0", "-1", "0", "0", "0", "0"},
                           params({{"a", 0.5}}), 2));
  c.push_back(table_system("sprott_k", "Sprott K", 1,
                           {"-1", "0", "1", "0", "1", "a", "0", "0", "0", "1", "0", "-b", "0", "0", "0", "0"},
                           params({{"a", 0.35}, {"b", 0.5}}), 2));
  c.push_back(table_system("sprott_m", "Sprott M", 1,
                           {"-1", "0", "0", "0", "a", "0", "1", "0", "0", "b", "0", "-1", "0", "0", "-1", "0"},
                           params({{"a", 1.95}, {"b", 1.65}}), 2));
  {
    SystemDef d = table_system("sprott_o", "Sprott O", 1,
                               {"1", "0", "0", "0", "1", "0", "-1", "0", "0", "1", "a", "0", "0", "1", "0", "0"},
                               params({{"a", 2.67}}), 2);
    d.notes = "reference figure also lists b=0.5, but the coefficient row has a single tunable coefficient a";
    c.push_back(std::move(d));
  }
  c.push_back(table_system("sprott_p", "Sprott P", 1,
                           {"a", "1", "0", "0", "-1", "0", "0", "1", "0", "1", "1", "0", "0", "0", "0", "0"},
                           params({{"a", 2.68}}), 2));
  c.push_back(table_system("sprott_q", "Sprott Q", 1,
                           {"-1", "0", "0", "0", "a", "b", "0", "0", "1", "1", "0", "-1", "0", "0", "0", "0"},
                           params({{"a", 3.1}, {"b", 0.5}}), 2));
  c.push_back(table_system("sprott_s", "Sprott S", 1,
                           {"1", "0", "0", "0", "0", "-a", "-b", "0", "0", "2", "1", "0", "0", "0", "1", "0"},
                           params({{"a", 0.99}, {"b", 3.8}}), 2));

  // Single fixed point.
  c.push_back(table_system("sprott_d", "Sprott D", 2,
                           single_fp_row({"-1", "0", "1", "0", "1", "0", "0", "1", "a", "0", "1"}),
                           params({{"a", 2.3}}), 1));
  c.push_back(table_system("sprott_i", "Sprott I", 2,
                           single_fp_row({"-a", "0", "1", "0", "1", "0", "1", "0", "-1", "0", "1"}),
                           params({{"a", 0.25}}), 1));
  c.push_back(table_system("sprott_j", "Sprott J", 2,
                           single_fp_row({"a", "0", "-1", "0", "1", "0", "1", "1", "-a", "0", "0"}),
                           params({{"a", 1.76}}), 1));
  {
    SystemDef d = table_system("sprott_r", "Sprott R", 2,
                               single_fp_row({"-1", "0", "0", "0", "1", "0", "a", "-b_over_a", "-1", "1", "0"}),
                               params({{"a", 0.90}, {"b", 0.395}}), 1);
    d.field_params = {"a", "b_over_a"};
    d.derive = [](std::span<const double> u) {
      if (u[0] == 0.0) throw NumericalError("Sprott R requires a != 0");
      return std::vector<double>{u[0], u[1] / u[0]};
    };
    c.push_back(std::move(d));
  }
  c.push_back(table_system("thomas", "Thomas", 2,
                           single_fp_row({"1", "0", "-1", "a", "-1", "0", "0", "0", "-c", "0", "1"}),
                           params({{"a", 0.28}, {"c", 2.0}}), 1));

  // Inverted Roessler-like attractors.
  {
    SystemDef d = table_system("sprott_l", "Sprott L", 2,
                               single_fp_row({"-1", "0", "a", "0", "1", "0", "0", "2*b", "-1", "0", "b"}),
                               params({{"a", 3.87}, {"b", 0.91}}), 1);
    d.orientation = Orientation::Inverted;
    c.push_back(std::move(d));
  }
  {
    SystemDef d = table_system("sprott_n", "Sprott N", 2,
                               single_fp_row({"-a", "0", "1", "0", "two_over_a", "1", "0", "1", "-a", "0", "0"}),
                               params({{"a", 4.2}}), 1);
    d.field_params = {"a", "two_over_a"};
    d.derive = [](std::span<const double> u) {
      if (u[0] == 0.0) throw NumericalError("Sprott N requires a != 0");
      return std::vector<double>{u[0], 2.0 / u[0]};
    };
    d.orientation = Orientation::Inverted;
    c.push_back(std::move(d));
  }
  {
    SystemDef d = table_system("malasoma_a", "Malasoma A", 2,
                               single_fp_row({"1", "0", "0", "-a", "1", "0", "-1", "0", "0", "1", "0"}),
                               params({{"a", 2.017}}), 1);
    d.orientation = Orientation::Inverted;
    d.default_ic = Vec3(0.1, 1.0, 1.9);
    c.push_back(std::move(d));
  }
  {
    SystemDef d = table_system("malasoma_b", "Malasoma B", 2,
                               single_fp_row({"0", "1", "0", "-a", "1", "0", "-1", "0", "0", "1", "0"}),
                               params({{"a", 2.017}}), 1);
    d.orientation = Orientation::Inverted;
    d.notes = "no reference initial condition; default is displaced from the fixed point";
    c.push_back(std::move(d));
  }

  // Uncentered Roessler, kept for testing the centering transformation.
  {
    SystemDef d;
    d.name = "rossler_original";
    d.title = "Roessler (original coordinates)";
    d.components = {"-y - z", "x + a*y", "b + z*(x - c)"};
    d.user_params = params({{"a", 0.432}, {"b", 2.0}, {"c", 4.0}});
    d.field_params = names_of(d.user_params);
    d.expected_fixed_points = 2;
    d.listed = false;
    c.push_back(std::move(d));
  }
  return c;
}

std::vector<double> field_values(const SystemDef& d, std::span<const double> user) {
  if (d.derive) return d.derive(user);
  return {user.begin(), user.end()};
}

}  // namespace

std::array<Expr, 3> general_form(const CoefficientRow& row, const std::vector<std::string>& field_params) {
  const std::optional<std::vector<std::string>> declared(field_params);
  std::array<Expr, 16> k;
  for (std::size_t i = 0; i < 16; ++i) k[i] = parse_expr(row[i], declared);
  const Expr x = var(0), y = var(1), z = var(2);
  return {
      Expr::sum({k[0] * y, k[1] * z, k[2] * x * z, k[3] * pow(z, 2)}),
      Expr::sum({k[4] * x, k[5] * y, k[6] * z, k[7] * pow(y, 2), k[8] * pow(z, 2)}),
      Expr::sum({k[9] * x, k[10] * y, k[11] * z, k[12] * x * y, k[13] * x * z, k[14] * pow(x, 2),
                 k[15] * pow(y, 2)}),
  };
}

VectorField SystemDef::field() const {
  std::vector<double> user;
  for (const auto& p : user_params) user.push_back(p.default_value);
  const auto values = field_values(*this, user);
  std::vector<Parameter> fp;
  for (std::size_t i = 0; i < field_params.size(); ++i) fp.push_back({field_params[i], values[i]});
  if (coefficients) return VectorField(general_form(*coefficients, field_params), std::move(fp));
  std::array<std::string, 3> src = components;
  return parse_field(src, std::move(fp));
}

const std::vector<SystemDef>& catalog() {
  static const std::vector<SystemDef> systems = make_catalog();
  return systems;
}

std::vector<const SystemDef*> list_systems() {
  std::vector<const SystemDef*> out;
  for (const auto& d : catalog())
    if (d.listed) out.push_back(&d);
  return out;
}

const SystemDef& find_system(const std::string& name) {
  const std::string key = name == "rossler_centered" ? "rossler" : name;
  for (const auto& d : catalog())
    if (d.name == key) return d;
  throw LookupError("unknown system '" + name + "'");
}

System build(const std::string& name, const std::map<std::string, double>& overrides, const std::string& preset) {
  const SystemDef& d = find_system(name);
  std::map<std::string, double> user;
  for (const auto& p : d.user_params) user[p.name] = p.default_value;
  if (!preset.empty()) {
    const Preset* found = nullptr;
    for (const auto& p : d.presets)
      if (p.name == preset) found = &p;
    if (!found) throw LookupError("system '" + d.name + "' has no preset '" + preset + "'");
    for (const auto& [k, v] : found->params) user[k] = v;
  }
  for (const auto& [k, v] : overrides) {
    if (!user.contains(k)) throw LookupError("system '" + d.name + "' has no parameter '" + k + "'");
    user[k] = v;
  }
  std::vector<double> uvals;
  for (const auto& p : d.user_params) uvals.push_back(user.at(p.name));

  System s{d.name, d.field(), field_values(d, uvals), std::move(user), d.default_ic, &d};
  return s;
}

System make_custom_system(std::string name, VectorField field, const std::map<std::string, double>& overrides) {
  auto values = field.bind(overrides);
  std::map<std::string, double> user;
  for (std::size_t i = 0; i < values.size(); ++i) user[field.params()[i].name] = values[i];
  return System{std::move(name), std::move(field), std::move(values), std::move(user), std::nullopt, nullptr};
}

VectorField center(const VectorField& f, std::span<const double> params, const Vec3& fixed_point) {
  const auto lookup = f.lookup(params);
  const std::array<double, 3> p{fixed_point.x(), fixed_point.y(), fixed_point.z()};
  double residual = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double v = evaluate(f.component(i), p, lookup);
    residual += v * v;
  }
  if (!(std::sqrt(residual) < 1e-9))
    throw NumericalError("centering point is not a fixed point (|F| = " + std::to_string(std::sqrt(residual)) + ")");

  const std::array<Expr, 3> shifted{var(0) + Expr::constant(p[0]), var(1) + Expr::constant(p[1]),
                                    var(2) + Expr::constant(p[2])};
  std::array<Expr, 3> out;
  for (int i = 0; i < 3; ++i) {
    Expr bound = substitute_parameters(f.component(i), lookup);
    Polynomial poly = Polynomial::expand(substitute_variables(bound, shifted));
    double scale = 0.0;
    for (const auto& [m, c] : poly.terms()) scale = std::max(scale, std::abs(c));
    poly.prune(1e-15 * scale);
    Polynomial constant_free;
    for (const auto& [m, c] : poly.terms()) {
      if (m == Monomial{0, 0, 0} && std::abs(c) < 1e-9) continue;
      constant_free += Polynomial::expand(Expr::constant(c) * pow(var(0), m[0]) * pow(var(1), m[1]) *
                                          pow(var(2), m[2]));
    }
    out[i] = constant_free.to_expr();
  }
  return VectorField(out, {});
}

}  // namespace flowcurv
