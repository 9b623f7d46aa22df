#include "flowcurv/section.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <boost/math/tools/toms748_solve.hpp>

namespace flowcurv {

namespace {

Vec3 hermite(const Vec3& p0, const Vec3& v0, const Vec3& p1, const Vec3& v1, double h, double s) {
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * p0 + (s3 - 2 * s2 + s) * h * v0 + (-2 * s3 + 3 * s2) * p1 + (s3 - s2) * h * v1;
}

Vec3 parse_vec(const std::string& s) {
  std::stringstream in(s);
  Vec3 v;
  char sep = 0;
  for (int i = 0; i < 3; ++i) {
    if (!(in >> v[i])) throw std::invalid_argument("expected three comma-separated numbers in '" + s + "'");
    if (i < 2 && !(in >> sep && sep == ',')) throw std::invalid_argument("expected ',' in '" + s + "'");
  }
  if (in >> sep) throw std::invalid_argument("trailing characters in '" + s + "'");
  return v;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

std::vector<double> moving_median(const std::vector<double>& v, int window) {
  const auto n = static_cast<std::ptrdiff_t>(v.size());
  const int half = window / 2;
  std::vector<double> out(v.size());
  std::vector<double> buf(static_cast<std::size_t>(window));
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    for (int k = -half; k < window - half; ++k) {
      const std::ptrdiff_t j = std::clamp<std::ptrdiff_t>(i + k, 0, n - 1);
      buf[static_cast<std::size_t>(k + half)] = v[static_cast<std::size_t>(j)];
    }
    std::nth_element(buf.begin(), buf.begin() + half, buf.end());
    out[static_cast<std::size_t>(i)] = buf[static_cast<std::size_t>(half)];
  }
  return out;
}

int sign(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace

const char* to_string(CrossingDirection d) {
  switch (d) {
    case CrossingDirection::Positive: return "+";
    case CrossingDirection::Negative: return "-";
    case CrossingDirection::Both: return "both";
  }
  return "?";
}

SectionSpec parse_section(const std::string& text) {
  SectionSpec s;
  bool have_p = false, have_n = false;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ';')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("expected key=value in section spec, got '" + item + "'");
    const std::string key = trim(item.substr(0, eq)), value = trim(item.substr(eq + 1));
    if (key == "p") {
      s.point = parse_vec(value);
      have_p = true;
    } else if (key == "n") {
      s.normal = parse_vec(value);
      have_n = true;
    } else if (key == "u") {
      s.rho_axis = parse_vec(value);
      s.half_plane = true;
    } else if (key == "dir") {
      if (value == "+") s.direction = CrossingDirection::Positive;
      else if (value == "-") s.direction = CrossingDirection::Negative;
      else if (value == "both") s.direction = CrossingDirection::Both;
      else throw std::invalid_argument("dir must be +, - or both");
    } else {
      throw std::invalid_argument("unknown section key '" + key + "'");
    }
  }
  if (!have_p || !have_n) throw std::invalid_argument("section spec needs p=... and n=...");
  if (!(s.normal.norm() > 0.0)) throw std::invalid_argument("section normal must be nonzero");
  s.normal.normalize();
  if (s.rho_axis) {
    Vec3 u = *s.rho_axis - s.rho_axis->dot(s.normal) * s.normal;
    if (!(u.norm() > 1e-12)) throw std::invalid_argument("rho axis must not be parallel to the normal");
    s.rho_axis = u.normalized();
  }
  return s;
}

std::string format_section(const SectionSpec& s) {
  std::ostringstream o;
  o.precision(17);
  o << "p=" << s.point[0] << "," << s.point[1] << "," << s.point[2] << ";n=" << s.normal[0] << "," << s.normal[1]
    << "," << s.normal[2] << ";dir=" << to_string(s.direction);
  if (s.rho_axis) o << ";u=" << (*s.rho_axis)[0] << "," << (*s.rho_axis)[1] << "," << (*s.rho_axis)[2];
  return o.str();
}

SectionResult section_crossings(const CompiledField& f, std::span<const double> params, const Trajectory& traj,
                                const SectionSpec& spec) {
  SectionResult res;
  const std::size_t n = traj.size();
  if (n < 2) return res;
  const auto dist = [&](const Vec3& x) { return (x - spec.point).dot(spec.normal); };
  double d0 = dist(traj.x[0]);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double d1 = dist(traj.x[k + 1]);
    const double prev = d0;
    d0 = d1;
    const bool up = prev < 0.0 && d1 >= 0.0;
    const bool down = prev > 0.0 && d1 <= 0.0;
    if (!up && !down) continue;
    if ((up && spec.direction == CrossingDirection::Negative) || (down && spec.direction == CrossingDirection::Positive))
      continue;

    const Vec3& p0 = traj.x[k];
    const Vec3& p1 = traj.x[k + 1];
    const Vec3 f0 = f.velocity(p0, params), f1 = f.velocity(p1, params);
    const double h = traj.t[k + 1] - traj.t[k];
    const auto g = [&](double s) { return dist(hermite(p0, f0, p1, f1, h, s)); };
    double s = 1.0;
    if (d1 != 0.0) {
      boost::uintmax_t iters = 200;
      const auto [a, b] = boost::math::tools::toms748_solve(g, 0.0, 1.0, prev, d1,
                                                            boost::math::tools::eps_tolerance<double>(52), iters);
      s = std::abs(g(a)) <= std::abs(g(b)) ? a : b;
    }
    SectionCrossing c;
    c.t = traj.t[k] + s * h;
    c.state = hermite(p0, f0, p1, f1, h, s);
    const Vec3 fv = f.velocity(c.state, params);
    const double fn = fv.dot(spec.normal);
    if (!(std::abs(fn) > 1e-8)) {
      ++res.tangential_dropped;
      continue;
    }
    c.direction = up ? 1 : -1;
    c.transversality = std::abs(fn) / fv.norm();
    c.rho = spec.rho_axis ? (c.state - spec.point).dot(*spec.rho_axis) : (c.state - spec.point).norm();
    if (spec.half_plane && !(c.rho > 0.0)) {
      ++res.outside_half_plane;
      continue;
    }
    res.max_residual = std::max(res.max_residual, std::abs(dist(c.state)) / std::max(1.0, c.state.norm()));
    res.crossings.push_back(c);
  }
  return res;
}

SectionSpec default_section(const CompiledField& f, std::span<const double> params, const Trajectory& traj,
                            const Vec3& center) {
  if (traj.empty()) throw std::invalid_argument("empty trajectory");
  Vec3 mean = Vec3::Zero();
  for (const auto& x : traj.x) mean += x;
  mean /= static_cast<double>(traj.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& x : traj.x) cov += (x - mean) * (x - mean).transpose();
  cov /= static_cast<double>(traj.size());

  int axis = 0;
  for (int a = 1; a < 3; ++a)
    if (cov(a, a) > cov(axis, axis)) axis = a;
  SectionSpec spec;
  spec.point = center;
  spec.normal = Vec3::Unit(axis);
  spec.half_plane = true;

  Vec3 u = mean - center;
  u[axis] = 0.0;
  if (u.norm() > 1e-9 * std::max(1.0, mean.norm())) {
    spec.rho_axis = u.normalized();
  } else {
    int b = axis == 0 ? 1 : 0;
    for (int a = 0; a < 3; ++a)
      if (a != axis && cov(a, a) > cov(b, b)) b = a;
    spec.rho_axis = Vec3::Unit(b);
  }

  spec.direction = CrossingDirection::Both;
  const auto all = section_crossings(f, params, traj, spec);
  double up = 0.0, down = 0.0;
  for (const auto& c : all.crossings) (c.direction > 0 ? up : down) += c.transversality;
  spec.direction = up >= down ? CrossingDirection::Positive : CrossingDirection::Negative;
  return spec;
}

int ReturnMap::symbol_of(double r) const {
  return static_cast<int>(std::lower_bound(critical_points.begin(), critical_points.end(), r) -
                          critical_points.begin());
}

bool ReturnMap::monotone() const {
  return std::all_of(panels.begin(), panels.end(),
                     [&](const Panel& p) { return p.violation <= options.violation_budget; });
}

ReturnMap build_return_map(std::span<const double> rho, const SegmentationOptions& opts) {
  ReturnMap map;
  map.options = opts;
  map.rho.assign(rho.begin(), rho.end());
  for (std::size_t k = 0; k + 1 < rho.size(); ++k) map.pairs.emplace_back(rho[k], rho[k + 1]);
  const std::size_t n = map.pairs.size();
  if (n < opts.min_points) {
    map.warning = "only " + std::to_string(n) + " return pairs; at least " + std::to_string(opts.min_points) +
                  " are needed to partition the map";
    map.symbols.assign(n, 0);
    if (n > 0) {
      Panel p;
      p.lo = p.image_lo = std::numeric_limits<double>::infinity();
      p.hi = p.image_hi = -std::numeric_limits<double>::infinity();
      for (const auto& [a, b] : map.pairs) {
        p.lo = std::min(p.lo, a);
        p.hi = std::max(p.hi, a);
        p.image_lo = std::min(p.image_lo, b);
        p.image_hi = std::max(p.image_hi, b);
      }
      p.count = n;
      map.panels.push_back(p);
    }
    return map;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return map.pairs[i].first < map.pairs[j].first; });
  std::vector<double> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = map.pairs[order[i]].first;
    b[i] = map.pairs[order[i]].second;
  }
  const std::vector<double> smooth = moving_median(b, opts.smoothing_window);
  std::vector<int> slope(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) slope[i] = sign(smooth[i + 1] - smooth[i]);

  int cur = 0;
  std::size_t i = 0;
  const std::size_t ns = slope.size();
  while (i < ns) {
    if (slope[i] == 0) {
      ++i;
      continue;
    }
    if (cur == 0) {
      cur = slope[i++];
      continue;
    }
    if (slope[i] == cur) {
      ++i;
      continue;
    }
    std::size_t j = i;
    int run = 0;
    while (j < ns && (slope[j] == -cur || slope[j] == 0)) {
      if (slope[j] != 0) ++run;
      ++j;
      if (run >= opts.r_min) break;
    }
    if (run >= opts.r_min) {
      map.critical_points.push_back(a[i]);
      cur = -cur;
      i = j;
    } else {
      ++i;
    }
  }
  map.m = static_cast<int>(map.critical_points.size()) + 1;
  map.partitioned = true;

  map.symbols.resize(n);
  for (std::size_t k = 0; k < n; ++k) map.symbols[k] = map.symbol_of(map.pairs[k].first);

  // Panels, in sorted order.
  map.panels.assign(static_cast<std::size_t>(map.m), Panel{});
  for (auto& p : map.panels) {
    p.lo = p.image_lo = std::numeric_limits<double>::infinity();
    p.hi = p.image_hi = -std::numeric_limits<double>::infinity();
  }
  std::vector<std::vector<int>> panel_slopes(map.panels.size());
  for (std::size_t k = 0; k < n; ++k) {
    auto& p = map.panels[static_cast<std::size_t>(map.symbol_of(a[k]))];
    p.lo = std::min(p.lo, a[k]);
    p.hi = std::max(p.hi, a[k]);
    p.image_lo = std::min(p.image_lo, b[k]);
    p.image_hi = std::max(p.image_hi, b[k]);
    ++p.count;
    if (k + 1 < n && map.symbol_of(a[k + 1]) == map.symbol_of(a[k]) && slope[k] != 0)
      panel_slopes[static_cast<std::size_t>(map.symbol_of(a[k]))].push_back(slope[k]);
  }
  for (std::size_t p = 0; p < map.panels.size(); ++p) {
    const auto& s = panel_slopes[p];
    if (s.empty()) continue;
    const auto ups = std::count(s.begin(), s.end(), 1);
    const auto downs = static_cast<std::ptrdiff_t>(s.size()) - ups;
    map.panels[p].direction = ups >= downs ? 1 : -1;
    map.panels[p].violation = static_cast<double>(std::min(ups, downs)) / static_cast<double>(s.size());
  }

  int minor = 0;
  for (std::size_t p = 0; p < map.panels.size(); ++p) {
    auto& pn = map.panels[p];
    const double span = pn.image_hi - pn.image_lo;
    for (std::size_t q : {p - 1, p + 1}) {
      if (q >= map.panels.size()) continue;
      const auto& nb = map.panels[q];
      const double nspan = nb.image_hi - nb.image_lo;
      const double overlap = std::min(pn.image_hi, nb.image_hi) - std::max(pn.image_lo, nb.image_lo);
      if (span < opts.minor_ratio * nspan && overlap >= opts.merge_overlap * span && !nb.minor) {
        pn.minor = true;
        ++minor;
        break;
      }
    }
  }
  map.merged_m = map.m - minor;
  return map;
}

TransitionMatrix transition_matrix(const ReturnMap& map) {
  TransitionMatrix t;
  t.m = map.m;
  t.gamma.assign(static_cast<std::size_t>(map.m), std::vector<int>(static_cast<std::size_t>(map.m), 0));
  for (std::size_t k = 0; k < map.pairs.size(); ++k) {
    const int i = map.symbols[k];
    const int j = map.symbol_of(map.pairs[k].second);
    t.gamma[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = 1;
  }
  return t;
}

}  // namespace flowcurv
