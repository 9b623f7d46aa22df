#include "flowcurv/classify.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include <json.hpp>

#include "flowcurv/errors.hpp"
#include "flowcurv/parallel.hpp"

namespace flowcurv {

namespace {

using Json = nlohmann::ordered_json;

constexpr const char* kPhiUnit = "state^3/time^6";

Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json q(const Json& value, const char* unit) { return Json{{"value", value}, {"unit", unit}}; }
Json q(double value, const char* unit) { return q(num(value), unit); }
Json count(std::size_t n) { return q(Json(n), "count"); }

Json vec(const Vec3& v) { return Json::array({num(v[0]), num(v[1]), num(v[2])}); }

double sig3(double v) {
  if (v == 0.0 || !std::isfinite(v)) return v;
  const double e = std::floor(std::log10(std::abs(v)));
  const double scale = std::pow(10.0, 2.0 - e);
  return std::round(v * scale) / scale;
}

Json eigen_json(const Eigenvalues& ev) {
  Json a = Json::array();
  for (const auto& l : ev) a.push_back(Json{{"re", num(l.real())}, {"im", num(l.imag())}});
  return a;
}

Json fixed_point_json(const FixedPoint& fp) {
  return Json{{"location", q(vec(fp.location), "state")},
              {"eigenvalues", q(eigen_json(fp.eigenvalues), "1/time")},
              {"class", to_string(fp.cls)},
              {"role", to_string(fp.role)},
              {"shape", to_string(fp.shape.label)},
              {"has_phi_t_component", fp.shape.has_phi_t_component},
              {"unstable_eigenvalues", count(static_cast<std::size_t>(fp.unstable_count()))},
              {"residual", q(fp.residual, "state/time")},
              {"eigen_residual", q(fp.eigen_residual(), "state/time")}};
}

Json fixed_points_array(const std::vector<FixedPoint>& fps) {
  Json a = Json::array();
  for (const auto& fp : fps) a.push_back(fixed_point_json(fp));
  return a;
}

Json wrapping_object(const WrappingReport& w) {
  Json j{{"defined", w.defined}, {"reason", w.reason}};
  j["omega"] = q(w.defined ? num(w.omega) : Json(nullptr), "rad/time");
  j["lambda3"] = q(w.defined ? num(w.lambda3) : Json(nullptr), "1/time");
  j["distance"] = q(w.distance, "state");
  j["W"] = q(w.defined ? num(w.W) : Json(nullptr), "dimensionless");
  j["outer_eigenvalues"] = q(w.reason == "single fixed point" ? Json::array() : eigen_json(w.outer_eigenvalues),
                             "1/time");
  return j;
}

Json report_object(const ClassifyReport& r) {
  Json j;
  j["system"] = r.system;
  j["preset"] = r.preset;
  Json params = Json::object();
  for (const auto& [k, v] : r.user_params) params[k] = q(v, "dimensionless");
  j["params"] = params;
  Json fparams = Json::object();
  for (const auto& [k, v] : r.field_params) fparams[k] = q(v, "dimensionless");
  j["field_params"] = fparams;
  j["notes"] = r.notes;

  const auto& o = r.options;
  Json settings;
  settings["t_end"] = q(o.t_end, "time");
  settings["transient"] = q(o.transient, "time");
  settings["dt"] = q(o.dt, "time");
  settings["ic"] = q(vec(r.ic), "state");
  settings["ic_source"] = r.ic_source;
  settings["integrator"] = Json{{"method", "dopri5"},
                                {"abs_tol", q(IntegrationOptions{}.abs_tol, "state")},
                                {"rel_tol", q(IntegrationOptions{}.rel_tol, "dimensionless")},
                                {"divergence_radius", q(IntegrationOptions{}.divergence_radius, "state")}};
  settings["fixed_point_search"] = Json{{"lower", q(vec(o.search.lower), "state")},
                                        {"upper", q(vec(o.search.upper), "state")},
                                        {"grid_n", count(static_cast<std::size_t>(o.search.grid_n))},
                                        {"seed", q(Json(o.search.seed), "dimensionless")},
                                        {"merge_tol", q(o.search.merge_tol, "state")}};
  settings["section"] = format_section(r.section);
  settings["section_source"] = o.section ? "user" : "default";
  settings["segmentation"] = Json{{"min_points", count(o.segmentation.min_points)},
                                  {"smoothing_window", count(static_cast<std::size_t>(o.segmentation.smoothing_window))},
                                  {"r_min", count(static_cast<std::size_t>(o.segmentation.r_min))},
                                  {"violation_budget", q(o.segmentation.violation_budget, "dimensionless")},
                                  {"minor_ratio", q(o.segmentation.minor_ratio, "dimensionless")},
                                  {"merge_overlap", q(o.segmentation.merge_overlap, "dimensionless")}};
  settings["eps_fp"] = q(o.eps_fp, "state");
  settings["darboux_points"] = count(o.darboux_points);
  settings["mesh_resolution"] = count(static_cast<std::size_t>(std::max(0, o.mesh_resolution)));
  settings["mesh_margin"] = q(o.mesh_margin, "dimensionless");
  j["settings"] = settings;

  j["fixed_points"] = Json{{"expected", count(static_cast<std::size_t>(r.expected_fixed_points))},
                           {"found", count(r.fixed_points.size())},
                           {"points", fixed_points_array(r.fixed_points)}};
  j["wrapping"] = wrapping_object(r.wrapping);
  j["trajectory"] = Json{{"status", to_string(r.status)},
                         {"stop_time", q(r.stop_time, "time")},
                         {"samples", count(r.samples)}};
  j["crossings"] = Json{{"field", "phi_t"},
                        {"verdict", to_string(r.verdict)},
                        {"reason", r.verdict_reason},
                        {"count", count(r.crossing_count)},
                        {"tangencies", count(r.tangency_count)},
                        {"excluded_near_fixed_point", count(r.excluded_near_fixed_point)},
                        {"scale", q(r.phi_t_scale, kPhiUnit)},
                        {"first_time", q(r.first_crossing_time ? num(*r.first_crossing_time) : Json(nullptr), "time")}};

  const auto& map = r.return_map;
  Json panels = Json::array();
  for (const auto& p : map.panels)
    panels.push_back(Json{{"lo", q(p.lo, "state")},
                          {"hi", q(p.hi, "state")},
                          {"direction", p.direction > 0 ? "increasing" : "decreasing"},
                          {"count", count(p.count)},
                          {"violation", q(p.violation, "dimensionless")},
                          {"minor", p.minor}});
  j["return_map"] = Json{{"section_crossings", count(r.section_crossings)},
                         {"tangential_dropped", count(r.section_tangential)},
                         {"pairs", count(map.pairs.size())},
                         {"partitioned", map.partitioned},
                         {"warning", map.warning},
                         {"m", count(static_cast<std::size_t>(map.m))},
                         {"merged_m", count(static_cast<std::size_t>(map.merged_m))},
                         {"critical_points", q(Json(map.critical_points), "state")},
                         {"monotone", map.monotone()},
                         {"panels", panels},
                         {"gamma", q(Json(r.gamma.gamma), "dimensionless")}};

  const auto& d = r.darboux;
  j["darboux"] = Json{{"points", count(d.points)},
                      {"excluded_degenerate", count(d.excluded_degenerate)},
                      {"median", q(sig3(d.median), "dimensionless")},
                      {"mean", q(sig3(d.mean), "dimensionless")},
                      {"p90", q(sig3(d.p90), "dimensionless")},
                      {"max", q(sig3(d.max), "dimensionless")}};

  const auto& m = r.mesh;
  Json bounds = Json::array();
  for (int a = 0; a < 3; ++a) {
    bounds.push_back(num(m.bounds.lower[a]));
    bounds.push_back(num(m.bounds.upper[a]));
  }
  j["mesh"] = Json{{"computed", m.computed},
                   {"field", to_string(m.field)},
                   {"bounds", q(bounds, "state")},
                   {"resolution", count(static_cast<std::size_t>(m.resolution))},
                   {"vertices", count(m.vertices)},
                   {"triangles", count(m.triangles)},
                   {"components", count(m.components)},
                   {"flagged_vertices", count(m.flagged_vertices)},
                   {"spurious_components", count(m.spurious_components)},
                   {"interpretation",
                    "spurious candidates are mesh components dominated by vertices whose gradient norm is below "
                    "1e-6 of the median"}};
  return j;
}

}  // namespace

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Wrapping: return "wrapping";
    case Verdict::Crossing: return "crossing";
    case Verdict::Undetermined: return "undetermined";
  }
  return "?";
}

ClassifyReport classify_system(const System& sys, const ClassifyOptions& opts, const std::string& preset) {
  ClassifyReport r;
  r.system = sys.name;
  r.preset = preset;
  r.user_params = sys.user_params;
  for (std::size_t i = 0; i < sys.params.size(); ++i) r.field_params.emplace_back(sys.field.params()[i].name, sys.params[i]);
  r.options = opts;
  if (sys.def) {
    r.notes = sys.def->notes;
    r.expected_fixed_points = sys.def->expected_fixed_points;
  }

  const CurvatureModel model(sys.field);
  const auto& cf = model.compiled();
  r.fixed_points = find_fixed_points(cf, sys.params, opts.search);
  r.wrapping = wrapping_number(r.fixed_points);
  const FixedPoint* inner = inner_fixed_point(r.fixed_points);
  if (opts.ic) {
    r.ic = *opts.ic;
    r.ic_source = "user";
  } else if (sys.default_ic) {
    r.ic = *sys.default_ic;
    r.ic_source = "catalog";
  } else {
    if (!inner) throw NumericalError("system '" + sys.name + "' has no fixed point to start from");
    r.ic = inner->location + Vec3::Constant(opts.ic_offset);
    r.ic_source = "inner fixed point + offset";
  }
  const Vec3 center = inner ? inner->location : Vec3::Zero();
  r.section = opts.section.value_or(SectionSpec{});

  const Trajectory traj = integrate(cf, sys.params, r.ic, opts.t_end, opts.dt, opts.transient);
  r.status = traj.status;
  r.stop_time = traj.stop_time;
  r.samples = traj.size();
  if (traj.status != TrajectoryStatus::Complete) {
    r.verdict_reason = std::string("trajectory ") + to_string(traj.status) + " before the end of the run";
    r.return_map = build_return_map({}, opts.segmentation);
    r.gamma = transition_matrix(r.return_map);
    return r;
  }

  CrossingOptions copts;
  copts.eps_fp = opts.eps_fp;
  for (const auto& fp : r.fixed_points) copts.fixed_points.push_back(fp.location);
  const auto cr = crossings(model, sys.params, traj, CurvatureField::PhiT, copts);
  r.crossing_count = cr.events.size();
  r.tangency_count = cr.tangencies.size();
  r.excluded_near_fixed_point = cr.excluded_near_fixed_point;
  r.phi_t_scale = cr.scale;
  if (!cr.events.empty()) r.first_crossing_time = cr.events.front().t;
  r.verdict = cr.events.empty() ? Verdict::Wrapping : Verdict::Crossing;
  r.verdict_reason = cr.events.empty() ? "no transversal phi_t crossing on the attractor"
                                       : "trajectory crosses phi_t = 0 on the attractor";

  r.section = opts.section ? *opts.section : default_section(cf, sys.params, traj, center);
  const auto sec = section_crossings(cf, sys.params, traj, r.section);
  r.section_crossings = sec.crossings.size();
  r.section_tangential = sec.tangential_dropped;
  std::vector<double> rho;
  rho.reserve(sec.crossings.size());
  for (const auto& c : sec.crossings) rho.push_back(c.rho);
  r.return_map = build_return_map(rho, opts.segmentation);
  r.gamma = transition_matrix(r.return_map);

  const Box box = trajectory_bounds(traj, opts.mesh_margin);
  if (opts.darboux_points > 0) {
    const auto pts = manifold_points(model, sys.params, box.lower, box.upper, opts.darboux_points, opts.search.seed);
    r.darboux = darboux_residual(model, sys.params, pts);
  }
  if (opts.mesh_resolution > 0) {
    MeshJob job;
    job.field = CurvatureField::PhiT;
    job.bounds = box;
    job.resolution = opts.mesh_resolution;
    Mesh mesh = extract(model, sys.params, job);
    flag_singularities(mesh);
    r.mesh.computed = true;
    r.mesh.bounds = box;
    r.mesh.resolution = job.resolution;
    r.mesh.vertices = mesh.vertices.size();
    r.mesh.triangles = mesh.triangles.size();
    r.mesh.components = mesh.components.size();
    r.mesh.flagged_vertices = mesh.flagged_count;
    r.mesh.spurious_components = mesh.spurious_components;
  }
  return r;
}

std::vector<ClassifyJob> survey_jobs() {
  std::vector<ClassifyJob> out;
  for (const auto* d : list_systems()) out.push_back({d->name, {}, d->survey_preset});
  return out;
}

std::vector<ClassifyReport> classify_all(const std::vector<ClassifyJob>& list, const ClassifyOptions& opts,
                                         unsigned jobs) {
  std::vector<ClassifyReport> out(list.size());
  std::vector<std::exception_ptr> errors(list.size());
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(1, list.size()))));
  const unsigned saved = thread_limit();
  set_thread_limit(std::max(1u, saved / jobs));
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < jobs; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < list.size(); i = next++) {
          try {
            const auto& job = list[i];
            out[i] = classify_system(build(job.name, job.overrides, job.preset), opts, job.preset);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
  }
  set_thread_limit(saved);
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

std::string report_json(const ClassifyReport& r, int indent) { return report_object(r).dump(indent) + "\n"; }

std::string reports_json(const std::vector<ClassifyReport>& rs, int indent) {
  Json a = Json::array();
  for (const auto& r : rs) a.push_back(report_object(r));
  return Json{{"reports", a}}.dump(indent) + "\n";
}

std::string fixed_points_json(const std::vector<FixedPoint>& fps, int indent) {
  return fixed_points_array(fps).dump(indent) + "\n";
}

std::string wrapping_json(const WrappingReport& w, int indent) { return wrapping_object(w).dump(indent) + "\n"; }

}  // namespace flowcurv
