#include <filesystem>
#include <functional>

#include <unistd.h>

#include <doctest.h>
#include <json.hpp>

#include "flowcurv/catalog.hpp"
#include "flowcurv/classify.hpp"
#include "flowcurv/io.hpp"
#include "flowcurv/parallel.hpp"

using namespace flowcurv;
namespace fs = std::filesystem;

namespace {

ClassifyOptions quick() {
  ClassifyOptions o;
  o.t_end = 1500.0;
  o.transient = 200.0;
  o.mesh_resolution = 16;
  o.darboux_points = 40;
  return o;
}

// Every number must sit in a {"value", "unit"} object.
void check_units(const nlohmann::json& j, const std::string& path) {
  if (j.is_object()) {
    if (j.contains("value") && j.contains("unit")) {
      CHECK(j.size() == 2);
      CHECK(j["unit"].is_string());
      return;
    }
    for (auto it = j.begin(); it != j.end(); ++it) check_units(it.value(), path + "." + it.key());
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) check_units(j[i], path + "[" + std::to_string(i) + "]");
  } else {
    INFO(path);
    CHECK_FALSE(j.is_number());
  }
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("csv parsing") {
    const auto t = parse_csv("t,x\n0,1\n\n0.5, 2e-3\n");
    CHECK(t.header == std::vector<std::string>{"t", "x"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[1][1] == 2e-3);
    CHECK(t.column("x") == 1);
    CHECK_THROWS_AS(t.column("y"), InputError);
    try {
      parse_csv("t,x\n0,1\n1,abc\n");
      FAIL("expected InputError");
    } catch (const InputError& e) {
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_csv("t,x\n0\n"), InputError);
    CHECK_THROWS_AS(parse_csv(""), InputError);
  }

  TEST_CASE("numbers round-trip") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) CHECK(std::stod(format_number(v)) == v);
  }

  TEST_CASE("trajectory csv round-trip") {
    Trajectory t;
    t.t = {0.0, 0.01, 0.02};
    t.x = {Vec3(1, 2, 3), Vec3(0.1, 0.2, 0.3), Vec3(-1, -2, -3)};
    const auto back = trajectory_from_csv(parse_csv(trajectory_csv(t)));
    CHECK(back.t == t.t);
    CHECK(back.x == t.x);
    CHECK(back.dt_output == doctest::Approx(0.01));
    CHECK_THROWS_AS(trajectory_from_csv(parse_csv("t,x,y,z\n1,0,0,0\n0,0,0,0\n")), InputError);
  }

  TEST_CASE("atomic writes") {
    const fs::path dir = fs::temp_directory_path() / ("flowcurv_io_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const fs::path p = dir / "out.txt";
    write_file_atomic(p, "first");
    write_file_atomic(p, "second");
    CHECK(read_file(p) == "second");
    std::size_t n = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++n;
    CHECK(n == 1);
    CHECK_THROWS_AS(write_file_atomic(dir / "missing" / "x.txt", "x"), InputError);
    CHECK_THROWS_AS(read_file(dir / "missing.txt"), InputError);
    fs::remove_all(dir);
  }

  TEST_CASE("thread limit") {
    const unsigned saved = thread_limit();
    set_thread_limit(3);
    CHECK(thread_limit() == 3);
    std::vector<int> hits(10000, 0);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; }, 16);
    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
    set_thread_limit(saved);
  }

  TEST_CASE("report json carries units and defaults") {
    const auto r = classify_system(build("sprott_s"), quick());
    const auto j = nlohmann::json::parse(report_json(r));
    check_units(j, "");
    CHECK(j["system"] == "sprott_s");
    for (const char* k : {"t_end", "transient", "dt", "ic", "section", "segmentation", "mesh_resolution"})
      CHECK(j["settings"].contains(k));
    CHECK(j["settings"]["t_end"]["value"] == 1500.0);
    CHECK(j["fixed_points"]["found"]["value"] == 2);
    CHECK(j["wrapping"]["defined"] == true);
  }

  TEST_CASE("reports are reproducible") {
    auto o = quick();
    o.search.seed = 17;
    const std::string a = report_json(classify_system(build("sprott_k"), o));
    const std::string b = report_json(classify_system(build("sprott_k"), o));
    CHECK(a == b);
  }

  TEST_CASE("concurrent survey keeps job order") {
    std::vector<ClassifyJob> jobs{{"sprott_s", {}, ""}, {"thomas", {}, ""}, {"sprott_o", {}, ""}};
    auto o = quick();
    o.mesh_resolution = 0;
    const auto serial = classify_all(jobs, o, 1);
    const auto par = classify_all(jobs, o, 3);
    REQUIRE(par.size() == 3);
    CHECK(par[1].system == "thomas");
    CHECK(reports_json(serial) == reports_json(par));
  }

  TEST_CASE("survey covers the catalog") {
    const auto jobs = survey_jobs();
    CHECK(jobs.size() == 19);
    CHECK(jobs.front().name == "rossler");
    CHECK(jobs.front().preset == "crossing");
  }
}
