#include "flowcurv/curvature.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <boost/math/tools/toms748_solve.hpp>

#include "flowcurv/errors.hpp"
#include "flowcurv/parallel.hpp"

namespace flowcurv {

namespace {

using Vec3E = std::array<Expr, 3>;
using Mat3E = std::array<std::array<Expr, 3>, 3>;

Vec3E mul(const Mat3E& m, const Vec3E& v) {
  Vec3E out;
  for (int i = 0; i < 3; ++i) out[i] = Expr::sum({m[i][0] * v[0], m[i][1] * v[1], m[i][2] * v[2]});
  return out;
}

Vec3E cross(const Vec3E& a, const Vec3E& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

Expr dot(const Vec3E& a, const Vec3E& b) { return Expr::sum({a[0] * b[0], a[1] * b[1], a[2] * b[2]}); }

std::array<Expr, 3> grad(const Expr& e) { return {diff(e, 0), diff(e, 1), diff(e, 2)}; }

std::size_t index(CurvatureField w) { return static_cast<std::size_t>(w); }

double median_abs(std::vector<double> v) {
  if (v.empty()) return 0.0;
  for (auto& x : v) x = std::abs(x);
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

Vec3 hermite(const Vec3& p0, const Vec3& v0, const Vec3& p1, const Vec3& v1, double h, double s) {
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * p0 + (s3 - 2 * s2 + s) * h * v0 + (-2 * s3 + 3 * s2) * p1 + (s3 - s2) * h * v1;
}

// Root of g on [0, 1] given g(0) * g(1) < 0; returns the bracket end with
// the smaller |g|.
template <class G>
double bracket_root(G&& g, double g0, double g1) {
  boost::uintmax_t iters = 200;
  const auto tol = boost::math::tools::eps_tolerance<double>(52);
  const auto [a, b] = boost::math::tools::toms748_solve(g, 0.0, 1.0, g0, g1, tol, iters);
  return std::abs(g(a)) <= std::abs(g(b)) ? a : b;
}

}  // namespace

const char* to_string(CurvatureField w) {
  switch (w) {
    case CurvatureField::Phi: return "phi";
    case CurvatureField::PhiC: return "phi_c";
    case CurvatureField::PhiT: return "phi_t";
  }
  return "?";
}

CurvatureField curvature_field_from_string(const std::string& s) {
  if (s == "phi") return CurvatureField::Phi;
  if (s == "phi_c") return CurvatureField::PhiC;
  if (s == "phi_t") return CurvatureField::PhiT;
  throw LookupError("unknown curvature field '" + s + "' (expected phi, phi_c or phi_t)");
}

const Expr& SymbolicCurvature::field(CurvatureField w) const {
  switch (w) {
    case CurvatureField::PhiC: return phi_c;
    case CurvatureField::PhiT: return phi_t;
    default: return phi;
  }
}

const std::array<Expr, 3>& SymbolicCurvature::gradient(CurvatureField w) const {
  switch (w) {
    case CurvatureField::PhiC: return grad_phi_c;
    case CurvatureField::PhiT: return grad_phi_t;
    default: return grad_phi;
  }
}

SymbolicCurvature phi_symbolic(const VectorField& f) {
  const SymbolicJacobian j = jacobian(f);
  const Vec3E v = f.components();
  const Vec3E a = mul(j.entries, v);
  const Vec3E ja = mul(j.entries, a);
  const Vec3E jerk_t = mul(j.material, v);
  SymbolicCurvature s;
  s.phi_c = dot(v, cross(a, ja));
  s.phi_t = dot(v, cross(a, jerk_t));
  s.phi = s.phi_c + s.phi_t;
  s.grad_phi = grad(s.phi);
  s.grad_phi_c = grad(s.phi_c);
  s.grad_phi_t = grad(s.phi_t);
  return s;
}

CurvatureModel::CurvatureModel(const VectorField& f) : compiled_(f), symbolic_(phi_symbolic(f)) {
  const auto names = f.param_names();
  for (auto w : {CurvatureField::Phi, CurvatureField::PhiC, CurvatureField::PhiT}) {
    const auto& g = symbolic_.gradient(w);
    const std::array<Expr, 4> outs{symbolic_.field(w), g[0], g[1], g[2]};
    programs_[index(w)] = Program(outs, names);
  }
}

CurvatureSample CurvatureModel::sample(const Vec3& x, std::span<const double> params) const {
  const DerivativeStack s = compiled_.stack(x, params);
  CurvatureSample out;
  out.state = x;
  Mat3 cols;
  cols << s.velocity, s.acceleration, s.jerk;
  out.phi = cols.determinant();
  out.phi_c = s.velocity.dot(s.acceleration.cross(s.jacobian * s.acceleration));
  out.phi_t = s.velocity.dot(s.acceleration.cross(s.jacobian_rate * s.velocity));
  out.grad_phi = gradient(CurvatureField::Phi, x, params);
  return out;
}

double CurvatureModel::value(CurvatureField w, const Vec3& x, std::span<const double> params) const {
  Vec3 g;
  return value_and_gradient(w, x, params, g);
}

Vec3 CurvatureModel::gradient(CurvatureField w, const Vec3& x, std::span<const double> params) const {
  Vec3 g;
  value_and_gradient(w, x, params, g);
  return g;
}

double CurvatureModel::value_and_gradient(CurvatureField w, const Vec3& x, std::span<const double> params,
                                          Vec3& grad_out) const {
  std::array<double, 4> out{};
  programs_[index(w)].run(x.data(), params, out);
  grad_out = Vec3(out[1], out[2], out[3]);
  return out[0];
}

CurvatureSample phi_eval(const VectorField& f, std::span<const double> params, const Vec3& state) {
  return CurvatureModel(f).sample(state, params);
}

std::vector<CurvatureSample> sample_trajectory(const CurvatureModel& model, std::span<const double> params,
                                               const Trajectory& traj) {
  std::vector<CurvatureSample> out(traj.size());
  parallel_for(traj.size(), [&](std::size_t i) { out[i] = model.sample(traj.x[i], params); });
  return out;
}

CrossingReport crossings(const CurvatureModel& model, std::span<const double> params, const Trajectory& traj,
                         CurvatureField which, const CrossingOptions& opts) {
  CrossingReport rep;
  const std::size_t n = traj.size();
  if (n < 2) return rep;
  std::vector<double> v(n);
  parallel_for(n, [&](std::size_t i) { v[i] = model.value(which, traj.x[i], params); });
  rep.scale = median_abs(v);

  std::vector<CrossingEvent> raw;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (!(v[k] * v[k + 1] < 0.0)) continue;
    const Vec3& p0 = traj.x[k];
    const Vec3& p1 = traj.x[k + 1];
    const Vec3 f0 = model.compiled().velocity(p0, params);
    const Vec3 f1 = model.compiled().velocity(p1, params);
    const double h = traj.t[k + 1] - traj.t[k];
    const auto g = [&](double s) { return model.value(which, hermite(p0, f0, p1, f1, h, s), params); };
    const double s = bracket_root(g, v[k], v[k + 1]);
    CrossingEvent e;
    e.t = traj.t[k] + s * h;
    e.state = hermite(p0, f0, p1, f1, h, s);
    e.which = which;
    e.direction = v[k] < 0.0 ? 1 : -1;
    e.value = model.value(which, e.state, params);
    raw.push_back(e);
  }

  std::vector<bool> tangent(raw.size(), false);
  for (std::size_t i = 0; i + 1 < raw.size(); ++i)
    if (raw[i + 1].t - raw[i].t < traj.dt_output) tangent[i] = tangent[i + 1] = true;

  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto& e = raw[i];
    const bool near_fp = std::any_of(opts.fixed_points.begin(), opts.fixed_points.end(),
                                     [&](const Vec3& p) { return (e.state - p).norm() < opts.eps_fp; });
    if (near_fp) {
      ++rep.excluded_near_fixed_point;
      continue;
    }
    rep.max_event_residual = std::max(rep.max_event_residual, std::abs(e.value));
    (tangent[i] ? rep.tangencies : rep.events).push_back(e);
  }
  return rep;
}

std::vector<Vec3> manifold_points(const CurvatureModel& model, std::span<const double> params, const Vec3& lower,
                                  const Vec3& upper, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto draw = [&] {
    Vec3 p;
    for (int a = 0; a < 3; ++a) p[a] = lower[a] + u(rng) * (upper[a] - lower[a]);
    return p;
  };
  constexpr int kSteps = 64;
  std::vector<Vec3> out;
  for (std::size_t attempt = 0; out.size() < count && attempt < 100 * count + 100; ++attempt) {
    const Vec3 a = draw(), b = draw();
    const auto at = [&](double s) { return Vec3(a + s * (b - a)); };
    double prev = model.value(CurvatureField::Phi, a, params);
    for (int i = 1; i <= kSteps && out.size() < count; ++i) {
      const double s0 = (i - 1.0) / kSteps, s1 = static_cast<double>(i) / kSteps;
      const double cur = model.value(CurvatureField::Phi, at(s1), params);
      if (prev * cur < 0.0) {
        const auto g = [&](double s) { return model.value(CurvatureField::Phi, at(s0 + s * (s1 - s0)), params); };
        out.push_back(at(s0 + bracket_root(g, prev, cur) * (s1 - s0)));
      }
      prev = cur;
    }
  }
  return out;
}

DarbouxStats darboux_residual(const CurvatureModel& model, std::span<const double> params,
                              std::span<const Vec3> points) {
  DarbouxStats st;
  std::vector<double> r;
  for (const auto& p : points) {
    Vec3 g;
    model.value_and_gradient(CurvatureField::Phi, p, params, g);
    const Vec3 f = model.compiled().velocity(p, params);
    const double denom = g.norm() * f.norm();
    if (!(denom > 1e-300) || g.norm() < 1e-12 || f.norm() < 1e-12) {
      ++st.excluded_degenerate;
      continue;
    }
    r.push_back(std::abs(g.dot(f)) / denom);
  }
  st.points = r.size();
  if (r.empty()) return st;
  std::sort(r.begin(), r.end());
  st.median = r[r.size() / 2];
  st.p90 = r[std::min(r.size() - 1, static_cast<std::size_t>(0.9 * static_cast<double>(r.size())))];
  st.max = r.back();
  double sum = 0.0;
  for (double x : r) sum += x;
  st.mean = sum / static_cast<double>(r.size());
  return st;
}

}  // namespace flowcurv
