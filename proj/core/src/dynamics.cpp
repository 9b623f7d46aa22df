#include "flowcurv/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <boost/numeric/odeint.hpp>

#include "flowcurv/errors.hpp"

namespace flowcurv {

namespace odeint = boost::numeric::odeint;

namespace {

using State = std::array<double, 3>;

struct Rhs {
  const CompiledField* f;
  std::span<const double> params;
  void operator()(const State& x, State& dx, double /*t*/) const {
    const Vec3 v = f->velocity(Vec3(x[0], x[1], x[2]), params);
    dx = {v[0], v[1], v[2]};
  }
};

Vec3 to_vec(const State& s) { return Vec3(s[0], s[1], s[2]); }

// Bilinear cross product; Eigen conjugates for complex scalars.
Eigen::Vector3cd cross(const Eigen::Vector3cd& a, const Eigen::Vector3cd& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

bool escaped(const State& s, double radius) {
  const double n = to_vec(s).norm();
  return !std::isfinite(n) || n > radius;
}

}  // namespace

const char* to_string(TrajectoryStatus s) {
  switch (s) {
    case TrajectoryStatus::Complete: return "complete";
    case TrajectoryStatus::Diverged: return "diverged";
    case TrajectoryStatus::StepUnderflow: return "step_underflow";
  }
  return "?";
}

Trajectory integrate(const CompiledField& f, std::span<const double> params, const Vec3& ic, double t_end,
                     double dt_output, double transient, const IntegrationOptions& opts) {
  if (!(dt_output > 0.0)) throw std::invalid_argument("dt_output must be positive");
  if (!(transient >= 0.0) || !(t_end > transient)) throw std::invalid_argument("need t_end > transient >= 0");

  Trajectory traj;
  traj.t0 = transient;
  traj.dt_output = dt_output;
  traj.method = "dopri5";
  traj.abs_tol = opts.abs_tol;
  traj.rel_tol = opts.rel_tol;

  const Rhs rhs{&f, params};
  auto stepper = odeint::make_dense_output(opts.abs_tol, opts.rel_tol, odeint::runge_kutta_dopri5<State>());
  const State x0{ic[0], ic[1], ic[2]};
  stepper.initialize(x0, 0.0, std::min(opts.initial_step, dt_output));

  const auto n = static_cast<std::size_t>(std::floor((t_end - transient) / dt_output + 1e-9)) + 1;
  traj.t.reserve(n);
  traj.x.reserve(n);
  State x{};
  bool stepped = false;
  for (std::size_t k = 0; k < n; ++k) {
    const double tk = transient + static_cast<double>(k) * dt_output;
    if (tk <= 0.0) {
      traj.t.push_back(tk);
      traj.x.push_back(ic);
      continue;
    }
    while (!stepped || stepper.current_time() < tk) {
      try {
        stepper.do_step(rhs);
      } catch (const odeint::step_adjustment_error&) {
        traj.status = TrajectoryStatus::StepUnderflow;
      }
      stepped = true;
      const double t_now = stepper.current_time();
      if (traj.status == TrajectoryStatus::Complete && escaped(stepper.current_state(), opts.divergence_radius))
        traj.status = TrajectoryStatus::Diverged;
      if (traj.status == TrajectoryStatus::Complete && stepper.current_time_step() < 1e-13 * std::max(1.0, t_now))
        traj.status = TrajectoryStatus::StepUnderflow;
      if (traj.status != TrajectoryStatus::Complete) {
        traj.stop_time = t_now;
        return traj;
      }
    }
    stepper.calc_state(tk, x);
    traj.t.push_back(tk);
    traj.x.push_back(to_vec(x));
  }
  traj.stop_time = t_end;
  return traj;
}

Trajectory integrate_rk4(const CompiledField& f, std::span<const double> params, const Vec3& ic, double t_end,
                         double step) {
  if (!(step > 0.0) || !(t_end > 0.0)) throw std::invalid_argument("step and t_end must be positive");
  Trajectory traj;
  traj.dt_output = step;
  traj.method = "rk4";
  const Rhs rhs{&f, params};
  odeint::runge_kutta4<State> rk;
  State x{ic[0], ic[1], ic[2]};
  const auto n = static_cast<std::size_t>(std::llround(t_end / step));
  traj.t.reserve(n + 1);
  traj.x.reserve(n + 1);
  traj.t.push_back(0.0);
  traj.x.push_back(ic);
  for (std::size_t k = 0; k < n; ++k) {
    rk.do_step(rhs, x, static_cast<double>(k) * step, step);
    if (escaped(x, 1e6)) {
      traj.status = TrajectoryStatus::Diverged;
      traj.stop_time = static_cast<double>(k + 1) * step;
      return traj;
    }
    traj.t.push_back(static_cast<double>(k + 1) * step);
    traj.x.push_back(to_vec(x));
  }
  traj.stop_time = t_end;
  return traj;
}

const char* to_string(FixedPointClass c) {
  switch (c) {
    case FixedPointClass::Node: return "node";
    case FixedPointClass::Saddle: return "saddle";
    case FixedPointClass::FocusNode: return "focus-node";
    case FixedPointClass::SaddleFocus: return "saddle-focus";
  }
  return "?";
}

const char* to_string(FixedPointRole r) {
  switch (r) {
    case FixedPointRole::Inner: return "inner";
    case FixedPointRole::Outer: return "outer";
    case FixedPointRole::Unassigned: return "unassigned";
  }
  return "?";
}

const char* to_string(ShapeLabel s) {
  switch (s) {
    case ShapeLabel::Plane: return "plane";
    case ShapeLabel::ThreePlanes: return "three-planes";
    case ShapeLabel::PlaneTwoParaboloids: return "plane+two-paraboloids";
  }
  return "?";
}

int FixedPoint::unstable_count() const {
  return static_cast<int>(std::count_if(eigenvalues.begin(), eigenvalues.end(),
                                        [](const std::complex<double>& l) { return l.real() > 0.0; }));
}

double FixedPoint::eigen_residual() const {
  double worst = 0.0;
  for (int i = 0; i < 3; ++i) {
    const Eigen::Matrix3cd m = jacobian.cast<std::complex<double>>() -
                               eigenvalues[static_cast<std::size_t>(i)] * Eigen::Matrix3cd::Identity();
    worst = std::max(worst, (m * eigenvectors[static_cast<std::size_t>(i)]).norm());
  }
  return worst;
}

Eigenvalues eigenvalues3(const Mat3& m) {
  using C = std::complex<double>;
  const double tr = m.trace();
  const double minors = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0) + m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0) +
                        m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
  const double det = m.determinant();
  // lambda^3 + c2 lambda^2 + c1 lambda + c0
  const double c2 = -tr, c1 = minors, c0 = -det;
  Mat3 companion;
  companion << -c2, -c1, -c0, 1, 0, 0, 0, 1, 0;
  const Eigen::Vector3cd raw = Eigen::EigenSolver<Mat3>(companion, false).eigenvalues();

  const auto poly = [&](C l) { return ((l + c2) * l + c1) * l + c0; };
  const auto dpoly = [&](C l) { return (3.0 * l + 2.0 * c2) * l + c1; };
  std::array<C, 3> roots{raw[0], raw[1], raw[2]};
  for (auto& r : roots) {
    for (int it = 0; it < 4; ++it) {
      const C d = dpoly(r);
      if (std::abs(d) == 0.0) break;
      const C next = r - poly(r) / d;
      if (!(std::abs(poly(next)) < std::abs(poly(r)))) break;
      r = next;
    }
  }

  std::sort(roots.begin(), roots.end(), [](C a, C b) { return std::abs(a.imag()) < std::abs(b.imag()); });
  const double scale = std::max(1.0, std::abs(roots[2]));
  // a triple root only resolves to about eps^(1/3), a double one to eps^(1/2)
  const C mean = (roots[0] + roots[1] + roots[2]) / 3.0;
  double spread = 0.0;
  for (const auto& r : roots) spread = std::max(spread, std::abs(r - mean));
  if (spread < 1e-4 * scale) return {C(tr / 3.0), C(tr / 3.0), C(tr / 3.0)};
  Eigenvalues out;
  if (std::abs(roots[2].imag()) > 1e-7 * scale) {
    const double re = 0.5 * (roots[1].real() + roots[2].real());
    const double im = 0.5 * (std::abs(roots[1].imag()) + std::abs(roots[2].imag()));
    out = {C(roots[0].real(), 0.0), C(re, im), C(re, -im)};
  } else {
    std::array<double, 3> re{roots[0].real(), roots[1].real(), roots[2].real()};
    std::sort(re.begin(), re.end());
    out = {C(re[0]), C(re[1]), C(re[2])};
  }
  return out;
}

Eigen::Vector3cd eigenvector3(const Mat3& m, std::complex<double> lambda) {
  const Eigen::Matrix3cd a = m.cast<std::complex<double>>() - lambda * Eigen::Matrix3cd::Identity();
  Eigen::Vector3cd best = Eigen::Vector3cd::Zero();
  double best_norm = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) {
      const Eigen::Vector3cd r1 = a.row(i).transpose(), r2 = a.row(j).transpose();
      const Eigen::Vector3cd c = cross(r1, r2);
      if (c.norm() > best_norm) {
        best_norm = c.norm();
        best = c;
      }
    }
  double row_scale = 0.0;
  for (int i = 0; i < 3; ++i) row_scale = std::max(row_scale, a.row(i).norm());
  if (best_norm > 1e-10 * std::max(1.0, row_scale * row_scale)) return best / best_norm;

  // Rank <= 1: any vector orthogonal (bilinearly) to the dominant row.
  if (row_scale < 1e-12) return Eigen::Vector3cd::UnitX();
  int r = 0;
  for (int i = 1; i < 3; ++i)
    if (a.row(i).norm() > a.row(r).norm()) r = i;
  const Eigen::Vector3cd row = a.row(r).transpose();
  int k = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(row[i]) < std::abs(row[k])) k = i;
  const Eigen::Vector3cd v = cross(row, Eigen::Vector3cd::Unit(k));
  return v / v.norm();
}

FixedPointClass classify_spectrum(const Eigenvalues& ev) {
  const bool complex_pair = ev[1].imag() != 0.0;
  if (complex_pair) {
    const double re = ev[1].real(), r = ev[0].real();
    return re * r < 0.0 ? FixedPointClass::SaddleFocus : FixedPointClass::FocusNode;
  }
  bool pos = false, neg = false;
  for (const auto& l : ev) {
    pos = pos || l.real() > 0.0;
    neg = neg || l.real() < 0.0;
  }
  return pos && neg ? FixedPointClass::Saddle : FixedPointClass::Node;
}

ShapeInfo classify_fp_shape(FixedPointClass cls) {
  switch (cls) {
    case FixedPointClass::Saddle: return {ShapeLabel::ThreePlanes, false};
    case FixedPointClass::SaddleFocus: return {ShapeLabel::PlaneTwoParaboloids, true};
    default: return {ShapeLabel::Plane, false};
  }
}

FixedPoint analyze_fixed_point(const CompiledField& f, std::span<const double> params, const Vec3& location) {
  FixedPoint fp;
  fp.location = location;
  const auto s = f.stack(location, params);
  fp.jacobian = s.jacobian;
  fp.residual = s.velocity.norm();
  fp.eigenvalues = eigenvalues3(fp.jacobian);
  for (std::size_t i = 0; i < 3; ++i) fp.eigenvectors[i] = eigenvector3(fp.jacobian, fp.eigenvalues[i]);
  fp.cls = classify_spectrum(fp.eigenvalues);
  fp.shape = classify_fp_shape(fp.cls);
  return fp;
}

namespace {

std::optional<Vec3> newton(const CompiledField& f, std::span<const double> params, Vec3 x, int max_iter) {
  auto residual = [&](const Vec3& p) { return f.velocity(p, params).norm(); };
  double r = residual(x);
  for (int it = 0; it < max_iter; ++it) {
    if (r < 1e-13 * (1.0 + x.norm())) break;
    const auto s = f.stack(x, params);
    Eigen::FullPivLU<Mat3> lu(s.jacobian);
    if (!lu.isInvertible()) return std::nullopt;
    const Vec3 dx = lu.solve(s.velocity);
    double alpha = 1.0;
    bool improved = false;
    for (int h = 0; h < 30; ++h, alpha *= 0.5) {
      const Vec3 trial = x - alpha * dx;
      const double rt = residual(trial);
      if (std::isfinite(rt) && rt < r) {
        x = trial;
        r = rt;
        improved = true;
        break;
      }
    }
    if (!improved || x.norm() > 1e6) break;
  }
  if (!(r < 1e-10)) return std::nullopt;
  return x;
}

int role_rank(FixedPointRole r) { return r == FixedPointRole::Inner ? 0 : r == FixedPointRole::Outer ? 1 : 2; }

}  // namespace

std::vector<FixedPoint> find_fixed_points(const CompiledField& f, std::span<const double> params,
                                          const FixedPointSearch& search) {
  if (search.grid_n < 1 || !((search.upper - search.lower).minCoeff() > 0.0))
    throw std::invalid_argument("empty fixed-point search box");
  std::mt19937_64 rng(search.seed);
  std::uniform_real_distribution<double> jitter(-search.jitter, search.jitter);
  const Vec3 cell = (search.upper - search.lower) / search.grid_n;

  std::vector<Vec3> roots;
  for (int i = 0; i < search.grid_n; ++i)
    for (int j = 0; j < search.grid_n; ++j)
      for (int k = 0; k < search.grid_n; ++k) {
        Vec3 seed;
        const int idx[3] = {i, j, k};
        for (int a = 0; a < 3; ++a) seed[a] = search.lower[a] + (idx[a] + 0.5 + jitter(rng)) * cell[a];
        auto root = newton(f, params, seed, search.max_iterations);
        if (!root) continue;
        const bool dup = std::any_of(roots.begin(), roots.end(),
                                     [&](const Vec3& r) { return (r - *root).norm() < search.merge_tol; });
        if (!dup) roots.push_back(*root);
      }

  std::vector<FixedPoint> out;
  for (const auto& r : roots) {
    FixedPoint fp = analyze_fixed_point(f, params, r);
    const int u = fp.unstable_count();
    if (roots.size() == 2)
      fp.role = u == 2 ? FixedPointRole::Inner : u == 1 ? FixedPointRole::Outer : FixedPointRole::Unassigned;
    out.push_back(std::move(fp));
  }
  std::sort(out.begin(), out.end(), [](const FixedPoint& a, const FixedPoint& b) {
    if (a.role != b.role) return role_rank(a.role) < role_rank(b.role);
    return std::lexicographical_compare(a.location.data(), a.location.data() + 3, b.location.data(),
                                        b.location.data() + 3);
  });
  return out;
}

const FixedPoint* inner_fixed_point(const std::vector<FixedPoint>& fps) {
  if (fps.size() == 1) return &fps.front();
  for (const auto& fp : fps)
    if (fp.role == FixedPointRole::Inner) return &fp;
  return nullptr;
}

WrappingReport wrapping_number(const std::vector<FixedPoint>& fps) {
  WrappingReport rep;
  if (fps.size() != 2) {
    rep.reason = fps.size() < 2 ? "single fixed point" : "more than two fixed points";
    return rep;
  }
  const FixedPoint* inner = &fps[0];
  const FixedPoint* outer = &fps[1];
  if (inner->unstable_count() < outer->unstable_count()) std::swap(inner, outer);
  rep.inner = inner->location;
  rep.outer = outer->location;
  rep.outer_eigenvalues = outer->eigenvalues;
  rep.distance = (outer->location - inner->location).norm();
  if (outer->eigenvalues[1].imag() == 0.0) {
    rep.reason = "outer fixed point has no complex pair";
    return rep;
  }
  rep.omega = std::abs(outer->eigenvalues[1].imag());
  rep.lambda3 = outer->eigenvalues[0].real();
  if (rep.lambda3 == 0.0) {
    rep.reason = "outer real eigenvalue is zero";
    return rep;
  }
  rep.W = std::abs(rep.omega / rep.lambda3) * rep.distance;
  rep.defined = true;
  return rep;
}

}  // namespace flowcurv
