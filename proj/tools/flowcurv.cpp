#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "flowcurv/catalog.hpp"
#include "flowcurv/classify.hpp"
#include "flowcurv/curvature.hpp"
#include "flowcurv/dynamics.hpp"
#include "flowcurv/errors.hpp"
#include "flowcurv/io.hpp"
#include "flowcurv/parallel.hpp"
#include "flowcurv/parser.hpp"
#include "flowcurv/section.hpp"
#include "flowcurv/surface.hpp"

using namespace flowcurv;
using Json = nlohmann::ordered_json;

namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

struct SystemArgs {
  std::string name;
  std::string file;
  std::string preset;
  std::vector<std::string> params;
};

struct RunArgs {
  std::string ic;
  double t_end = 20000.0;
  double dt = 0.01;
  double transient = 500.0;
  std::string traj;
  std::uint64_t seed = 0;
};

void add_system_options(CLI::App* cmd, SystemArgs& s) {
  cmd->add_option("--system", s.name, "catalog system name");
  cmd->add_option("--system-file", s.file, "custom system file (dx/dy/dz/param lines)");
  cmd->add_option("--preset", s.preset, "catalog parameter preset");
  cmd->add_option("--param", s.params, "parameter override k=v (repeatable)");
}

void add_run_options(CLI::App* cmd, RunArgs& r, bool with_traj) {
  cmd->add_option("--ic", r.ic, "initial condition X,Y,Z (default: catalog value or inner fixed point + 0.1)");
  cmd->add_option("--t-end", r.t_end, "end time")->capture_default_str();
  cmd->add_option("--dt", r.dt, "output spacing")->capture_default_str();
  cmd->add_option("--transient", r.transient, "discarded initial time")->capture_default_str();
  cmd->add_option("--seed", r.seed, "fixed-point seed jitter")->capture_default_str();
  if (with_traj) cmd->add_option("--traj", r.traj, "read the trajectory from CSV (t,x,y,z) instead of integrating");
}

std::map<std::string, double> parse_overrides(const std::vector<std::string>& items) {
  std::map<std::string, double> out;
  for (const auto& it : items) {
    const auto eq = it.find('=');
    if (eq == std::string::npos) throw UsageError("--param expects k=v, got '" + it + "'");
    const std::string key = it.substr(0, eq), value = it.substr(eq + 1);
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (value.empty() || *end != '\0') throw UsageError("--param " + key + ": '" + value + "' is not a number");
    out[key] = v;
  }
  return out;
}

Vec3 parse_triple(const std::string& text, const char* what) {
  std::stringstream in(text);
  Vec3 v;
  char sep = 0;
  for (int i = 0; i < 3; ++i) {
    if (!(in >> v[i])) throw UsageError(std::string(what) + " expects X,Y,Z");
    if (i < 2 && !(in >> sep && sep == ',')) throw UsageError(std::string(what) + " expects X,Y,Z");
  }
  if (in >> sep) throw UsageError(std::string(what) + " expects X,Y,Z");
  return v;
}

System resolve(const SystemArgs& s) {
  if (s.name.empty() == s.file.empty()) throw UsageError("give exactly one of --system or --system-file");
  const auto overrides = parse_overrides(s.params);
  if (!s.file.empty()) {
    if (!s.preset.empty()) throw UsageError("--preset applies to catalog systems only");
    VectorField f = parse_system_file(read_file(s.file));
    return make_custom_system(std::filesystem::path(s.file).stem().string(), std::move(f), overrides);
  }
  return build(s.name, overrides, s.preset);
}

FixedPointSearch search_with(std::uint64_t seed) {
  FixedPointSearch fs;
  fs.seed = seed;
  return fs;
}

Vec3 initial_condition(const System& sys, const RunArgs& r, const std::vector<FixedPoint>& fps) {
  if (!r.ic.empty()) return parse_triple(r.ic, "--ic");
  if (sys.default_ic) return *sys.default_ic;
  const FixedPoint* inner = inner_fixed_point(fps);
  if (!inner) throw NumericalError("no fixed point found; pass --ic");
  return inner->location + Vec3::Constant(0.1);
}

void emit(const std::string& out, const std::string& content) {
  if (out.empty() || out == "-") {
    std::cout << content;
    std::cout.flush();
  } else {
    write_file_atomic(out, content);
  }
}

int diverged_status(const Trajectory& t) {
  if (t.status == TrajectoryStatus::Complete) return 0;
  std::cerr << "flowcurv: trajectory " << to_string(t.status) << " at t = " << t.stop_time << "\n";
  return 2;
}

// Trajectory from --traj or a fresh integration.
Trajectory acquire(const System& sys, const CompiledField& cf, const RunArgs& r, const std::vector<FixedPoint>& fps) {
  if (!r.traj.empty()) return trajectory_from_csv(parse_csv(read_file(r.traj)));
  return integrate(cf, sys.params, initial_condition(sys, r, fps), r.t_end, r.dt, r.transient);
}

std::string system_list_text(bool json) {
  if (json) {
    Json a = Json::array();
    for (const auto* d : list_systems()) {
      Json defaults = Json::object();
      Json names = Json::array();
      for (const auto& p : d->user_params) {
        names.push_back(p.name);
        defaults[p.name] = p.default_value;
      }
      Json e{{"name", d->name},
             {"title", d->title},
             {"params", names},
             {"defaults", defaults},
             {"fixed_point_count_expected", d->expected_fixed_points},
             {"orientation", d->orientation == Orientation::Inverted ? "inverted" : "direct"}};
      if (d->default_ic) e["default_ic"] = Json::array({(*d->default_ic)[0], (*d->default_ic)[1], (*d->default_ic)[2]});
      else e["default_ic"] = nullptr;
      Json presets = Json::array();
      for (const auto& p : d->presets) presets.push_back(p.name);
      e["presets"] = presets;
      e["notes"] = d->notes;
      a.push_back(e);
    }
    return a.dump(2) + "\n";
  }
  std::ostringstream o;
  for (const auto* d : list_systems()) {
    o << d->name << "\t" << d->expected_fixed_points << "\t";
    for (std::size_t i = 0; i < d->user_params.size(); ++i)
      o << (i ? " " : "") << d->user_params[i].name << "=" << format_number(d->user_params[i].default_value);
    o << "\n";
  }
  return o.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flow curvature analysis of 3D polynomial flows"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "flowcurv 0.1.0");

  // systems list
  auto* systems = app.add_subcommand("systems", "catalog commands");
  systems->require_subcommand(1);
  auto* list = systems->add_subcommand("list", "list catalog systems");
  bool list_json = false;
  list->add_flag("--json", list_json, "JSON output");

  // integrate
  SystemArgs int_sys;
  RunArgs int_run;
  int_run.t_end = 1000.0;
  int_run.transient = 0.0;
  std::string int_out;
  auto* integ = app.add_subcommand("integrate", "integrate a trajectory to CSV (t,x,y,z)");
  add_system_options(integ, int_sys);
  add_run_options(integ, int_run, false);
  integ->add_option("--out", int_out, "output CSV (default stdout)");

  // fixed-points
  SystemArgs fp_sys;
  std::uint64_t fp_seed = 0;
  bool fp_json = false;
  auto* fpc = app.add_subcommand("fixed-points", "locate and classify fixed points");
  add_system_options(fpc, fp_sys);
  fpc->add_option("--seed", fp_seed, "seed jitter")->capture_default_str();
  fpc->add_flag("--json", fp_json, "JSON output");

  // wrap-number
  SystemArgs wn_sys;
  bool wn_json = false;
  auto* wn = app.add_subcommand("wrap-number", "wrapping number from the two fixed points");
  add_system_options(wn, wn_sys);
  wn->add_flag("--json", wn_json, "JSON output");

  // curvature
  SystemArgs cv_sys;
  RunArgs cv_run;
  std::string cv_out;
  auto* cv = app.add_subcommand("curvature", "phi, phi_c, phi_t along a trajectory");
  add_system_options(cv, cv_sys);
  add_run_options(cv, cv_run, true);
  cv->add_option("--out", cv_out, "output CSV (default stdout)");

  // crossings
  SystemArgs cr_sys;
  RunArgs cr_run;
  std::string cr_which = "phi_t", cr_out;
  double cr_eps = 1e-3;
  bool cr_json = false;
  auto* cr = app.add_subcommand("crossings", "trajectory crossings of phi = 0, phi_c = 0 or phi_t = 0");
  add_system_options(cr, cr_sys);
  add_run_options(cr, cr_run, true);
  cr->add_option("--which", cr_which, "phi, phi_c or phi_t")->capture_default_str();
  cr->add_option("--eps-fp", cr_eps, "exclusion radius around fixed points")->capture_default_str();
  cr->add_option("--out", cr_out, "event CSV (default stdout)");
  cr->add_flag("--json", cr_json, "JSON summary instead of CSV");

  // poincare
  SystemArgs pc_sys;
  RunArgs pc_run;
  std::string pc_plane, pc_out;
  auto* pc = app.add_subcommand("poincare", "Poincare section crossings (t,x,y,z,rho)");
  add_system_options(pc, pc_sys);
  add_run_options(pc, pc_run, true);
  pc->add_option("--plane", pc_plane, "\"p=PX,PY,PZ;n=NX,NY,NZ;dir=-\" (default: heuristic section)");
  pc->add_option("--out", pc_out, "output CSV (default stdout)");

  // return-map
  std::string rm_in, rm_out, rm_gamma;
  SegmentationOptions rm_opts;
  auto* rm = app.add_subcommand("return-map", "first-return pairs, branch partition and transition matrix");
  rm->add_option("--in", rm_in, "section CSV with a rho column")->required();
  rm->add_option("--out", rm_out, "pairs CSV (rho_k,rho_k1,symbol; default stdout)");
  rm->add_option("--gamma", rm_gamma, "write {m, critical_points, matrix} JSON");
  rm->add_option("--r-min", rm_opts.r_min, "minimum run length")->capture_default_str();
  rm->add_option("--window", rm_opts.smoothing_window, "median window")->capture_default_str();

  // surface
  SystemArgs sf_sys;
  RunArgs sf_run;
  std::string sf_field = "phi_t", sf_bounds = "auto", sf_out, sf_flags;
  int sf_res = 64;
  auto* sf = app.add_subcommand("surface", "triangle mesh of phi = 0, phi_c = 0 or phi_t = 0");
  add_system_options(sf, sf_sys);
  add_run_options(sf, sf_run, true);
  sf->add_option("--field", sf_field, "phi, phi_c or phi_t")->capture_default_str();
  sf->add_option("--bounds", sf_bounds, "auto or x0,x1,y0,y1,z0,z1")->capture_default_str();
  sf->add_option("--res", sf_res, "cells per axis")->capture_default_str();
  sf->add_option("--out", sf_out, "OBJ output")->required();
  sf->add_option("--flags", sf_flags, "per-vertex flag CSV");

  // classify
  SystemArgs cl_sys;
  ClassifyOptions cl_opts;
  bool cl_all = false, cl_json = false;
  unsigned cl_jobs = 1;
  std::string cl_out;
  std::uint64_t cl_seed = 0;
  auto* cl = app.add_subcommand("classify", "full per-system report with the wrapping/crossing verdict");
  add_system_options(cl, cl_sys);
  cl->add_flag("--all", cl_all, "every catalog system");
  cl->add_option("--jobs", cl_jobs, "concurrent systems for --all")->envname("FLOWCURV_JOBS")->capture_default_str();
  cl->add_option("--seed", cl_seed, "fixed-point seed jitter")->capture_default_str();
  cl->add_option("--t-end", cl_opts.t_end, "end time")->capture_default_str();
  cl->add_option("--transient", cl_opts.transient, "discarded initial time")->capture_default_str();
  cl->add_option("--dt", cl_opts.dt, "output spacing")->capture_default_str();
  cl->add_option("--mesh-res", cl_opts.mesh_resolution, "phi_t mesh resolution (0 disables)")->capture_default_str();
  cl->add_flag("--json", cl_json, "JSON output");
  cl->add_option("--out", cl_out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (list->parsed()) {
      std::cout << system_list_text(list_json);
      return 0;
    }

    if (integ->parsed()) {
      const System sys = resolve(int_sys);
      const CompiledField cf(sys.field);
      std::vector<FixedPoint> fps;
      if (int_run.ic.empty() && !sys.default_ic) fps = find_fixed_points(cf, sys.params, search_with(int_run.seed));
      const auto traj =
          integrate(cf, sys.params, initial_condition(sys, int_run, fps), int_run.t_end, int_run.dt, int_run.transient);
      emit(int_out, trajectory_csv(traj));
      return diverged_status(traj);
    }

    if (fpc->parsed()) {
      const System sys = resolve(fp_sys);
      const CompiledField cf(sys.field);
      const auto fps = find_fixed_points(cf, sys.params, search_with(fp_seed));
      if (fp_json) {
        std::cout << fixed_points_json(fps);
      } else {
        for (const auto& f : fps) {
          std::cout << to_string(f.role) << "\t" << to_string(f.cls) << "\t" << format_number(f.location[0]) << ","
                    << format_number(f.location[1]) << "," << format_number(f.location[2]);
          for (const auto& l : f.eigenvalues) std::cout << "\t" << format_number(l.real()) << (l.imag() < 0 ? "" : "+") << format_number(l.imag()) << "i";
          std::cout << "\n";
        }
      }
      if (fps.empty()) {
        std::cerr << "flowcurv: no fixed points found\n";
        return 2;
      }
      return 0;
    }

    if (wn->parsed()) {
      const System sys = resolve(wn_sys);
      const CompiledField cf(sys.field);
      const auto w = wrapping_number(find_fixed_points(cf, sys.params));
      if (wn_json) {
        std::cout << wrapping_json(w);
      } else if (w.defined) {
        std::cout << "W = " << format_number(w.W) << " (omega = " << format_number(w.omega)
                  << ", lambda3 = " << format_number(w.lambda3) << ", D = " << format_number(w.distance) << ")\n";
      } else {
        std::cout << "W undefined: " << w.reason << "\n";
      }
      return 0;
    }

    if (cv->parsed()) {
      const System sys = resolve(cv_sys);
      const CurvatureModel model(sys.field);
      std::vector<FixedPoint> fps;
      if (cv_run.traj.empty() && cv_run.ic.empty() && !sys.default_ic)
        fps = find_fixed_points(model.compiled(), sys.params, search_with(cv_run.seed));
      const auto traj = acquire(sys, model.compiled(), cv_run, fps);
      const auto samples = sample_trajectory(model, sys.params, traj);
      std::string out = "t,x,y,z,phi,phi_c,phi_t\n";
      for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        out += format_number(traj.t[i]) + "," + format_number(s.state[0]) + "," + format_number(s.state[1]) + "," +
               format_number(s.state[2]) + "," + format_number(s.phi) + "," + format_number(s.phi_c) + "," +
               format_number(s.phi_t) + "\n";
      }
      emit(cv_out, out);
      return diverged_status(traj);
    }

    if (cr->parsed()) {
      const System sys = resolve(cr_sys);
      const CurvatureModel model(sys.field);
      const auto which = curvature_field_from_string(cr_which);
      const auto fps = find_fixed_points(model.compiled(), sys.params, search_with(cr_run.seed));
      const auto traj = acquire(sys, model.compiled(), cr_run, fps);
      CrossingOptions opts;
      opts.eps_fp = cr_eps;
      for (const auto& f : fps) opts.fixed_points.push_back(f.location);
      const auto rep = crossings(model, sys.params, traj, which, opts);
      if (cr_json) {
        Json j{{"which", cr_which},
               {"events", rep.events.size()},
               {"tangencies", rep.tangencies.size()},
               {"excluded_near_fixed_point", rep.excluded_near_fixed_point},
               {"scale", rep.scale},
               {"max_event_residual", rep.max_event_residual}};
        emit(cr_out, j.dump(2) + "\n");
      } else {
        std::string out = "t,x,y,z,direction,value,kind\n";
        std::vector<std::pair<const CrossingEvent*, const char*>> all;
        for (const auto& e : rep.events) all.emplace_back(&e, "crossing");
        for (const auto& e : rep.tangencies) all.emplace_back(&e, "tangency");
        std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first->t < b.first->t; });
        for (const auto& [e, kind] : all)
          out += format_number(e->t) + "," + format_number(e->state[0]) + "," + format_number(e->state[1]) + "," +
                 format_number(e->state[2]) + "," + std::to_string(e->direction) + "," + format_number(e->value) +
                 "," + kind + "\n";
        emit(cr_out, out);
      }
      return diverged_status(traj);
    }

    if (pc->parsed()) {
      const System sys = resolve(pc_sys);
      const CompiledField cf(sys.field);
      const auto fps = find_fixed_points(cf, sys.params, search_with(pc_run.seed));
      const auto traj = acquire(sys, cf, pc_run, fps);
      if (traj.status != TrajectoryStatus::Complete) return diverged_status(traj);
      SectionSpec spec;
      if (!pc_plane.empty()) {
        try {
          spec = parse_section(pc_plane);
        } catch (const std::invalid_argument& e) {
          throw UsageError(std::string("--plane: ") + e.what());
        }
      } else {
        const FixedPoint* inner = inner_fixed_point(fps);
        if (!inner) throw NumericalError("no fixed point for the default section; pass --plane");
        spec = default_section(cf, sys.params, traj, inner->location);
      }
      const auto res = section_crossings(cf, sys.params, traj, spec);
      std::string out = "t,x,y,z,rho\n";
      for (const auto& c : res.crossings)
        out += format_number(c.t) + "," + format_number(c.state[0]) + "," + format_number(c.state[1]) + "," +
               format_number(c.state[2]) + "," + format_number(c.rho) + "\n";
      emit(pc_out, out);
      std::cerr << "section " << format_section(spec) << ": " << res.crossings.size() << " crossings, "
                << res.tangential_dropped << " tangential dropped\n";
      return 0;
    }

    if (rm->parsed()) {
      const auto table = parse_csv(read_file(rm_in));
      const std::size_t col = table.column("rho");
      std::vector<double> rho;
      for (const auto& row : table.rows) rho.push_back(row[col]);
      const auto map = build_return_map(rho, rm_opts);
      if (!map.warning.empty()) std::cerr << "flowcurv: " << map.warning << "\n";
      const auto gamma = transition_matrix(map);
      std::string out = "rho_k,rho_k1,symbol\n";
      for (std::size_t k = 0; k < map.pairs.size(); ++k)
        out += format_number(map.pairs[k].first) + "," + format_number(map.pairs[k].second) + "," +
               std::to_string(map.symbols[k]) + "\n";
      emit(rm_out, out);
      if (!rm_gamma.empty()) {
        Json g{{"m", map.m}, {"merged_m", map.merged_m}, {"critical_points", map.critical_points}, {"matrix", gamma.gamma}};
        write_file_atomic(rm_gamma, g.dump(2) + "\n");
      }
      return 0;
    }

    if (sf->parsed()) {
      const System sys = resolve(sf_sys);
      const CurvatureModel model(sys.field);
      MeshJob job;
      job.field = curvature_field_from_string(sf_field);
      job.resolution = sf_res;
      if (sf_bounds == "auto") {
        std::vector<FixedPoint> fps;
        if (sf_run.traj.empty() && sf_run.ic.empty() && !sys.default_ic)
          fps = find_fixed_points(model.compiled(), sys.params, search_with(sf_run.seed));
        const auto traj = acquire(sys, model.compiled(), sf_run, fps);
        if (traj.status != TrajectoryStatus::Complete) return diverged_status(traj);
        job.bounds = trajectory_bounds(traj, 0.2);
      } else {
        try {
          job.bounds = parse_box(sf_bounds);
        } catch (const std::invalid_argument& e) {
          throw UsageError(std::string("--bounds: ") + e.what());
        }
      }
      if (job.resolution < 8) throw UsageError("--res must be at least 8");
      Mesh mesh = extract(model, sys.params, job);
      flag_singularities(mesh);
      write_file_atomic(sf_out, to_obj(mesh));
      if (!sf_flags.empty()) write_file_atomic(sf_flags, flags_csv(mesh));
      std::cerr << mesh.vertices.size() << " vertices, " << mesh.triangles.size() << " triangles, "
                << mesh.components.size() << " components, " << mesh.spurious_components
                << " spurious candidates" << (mesh.empty() ? " (surface misses the box)" : "") << "\n";
      return 0;
    }

    if (cl->parsed()) {
      cl_opts.search.seed = cl_seed;
      if (cl_all) {
        if (!cl_sys.name.empty() || !cl_sys.file.empty()) throw UsageError("--all excludes --system/--system-file");
        const auto reports = classify_all(survey_jobs(), cl_opts, cl_jobs);
        if (cl_json) {
          emit(cl_out, reports_json(reports));
        } else {
          std::ostringstream o;
          o << "system\tverdict\tcrossings\tW\tm\tspurious\n";
          for (const auto& r : reports)
            o << r.system << "\t" << to_string(r.verdict) << "\t" << r.crossing_count << "\t"
              << (r.wrapping.defined ? format_number(r.wrapping.W) : "-") << "\t" << r.return_map.m << "\t"
              << r.mesh.spurious_components << "\n";
          emit(cl_out, o.str());
        }
        return 0;
      }
      const System sys = resolve(cl_sys);
      const auto r = classify_system(sys, cl_opts, cl_sys.preset);
      if (cl_json) {
        emit(cl_out, report_json(r));
      } else {
        std::ostringstream o;
        o << r.system << ": " << to_string(r.verdict) << " (" << r.crossing_count << " phi_t crossings)\n";
        if (r.wrapping.defined) o << "W = " << format_number(r.wrapping.W) << "\n";
        o << "branches m = " << r.return_map.m << " (merged " << r.return_map.merged_m << ")\n";
        emit(cl_out, o.str());
      }
      return r.status == TrajectoryStatus::Complete ? 0 : 2;
    }
  } catch (const NumericalError& e) {
    std::cerr << "flowcurv: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "flowcurv: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
