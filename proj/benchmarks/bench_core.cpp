#include <random>

#include <benchmark/benchmark.h>

#include "flowcurv/catalog.hpp"
#include "flowcurv/curvature.hpp"
#include "flowcurv/dynamics.hpp"
#include "flowcurv/section.hpp"
#include "flowcurv/surface.hpp"

using namespace flowcurv;

namespace {

std::vector<Vec3> points(std::size_t n) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-5, 5);
  std::vector<Vec3> out(n);
  for (auto& p : out) p = Vec3(u(rng), u(rng), u(rng));
  return out;
}

void BM_PhiSample(benchmark::State& state) {
  const System s = build("rossler");
  const CurvatureModel m(s.field);
  const auto pts = points(1024);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(m.sample(pts[i++ & 1023], s.params));
  }
}
BENCHMARK(BM_PhiSample);

void BM_PhiGradient(benchmark::State& state) {
  const System s = build("thomas");
  const CurvatureModel m(s.field);
  const auto pts = points(1024);
  std::size_t i = 0;
  Vec3 g;
  for (auto _ : state) {
    benchmark::DoNotOptimize(m.value_and_gradient(CurvatureField::PhiT, pts[i++ & 1023], s.params, g));
  }
}
BENCHMARK(BM_PhiGradient);

void BM_Integrate(benchmark::State& state) {
  const System s = build("rossler");
  const CompiledField f(s.field);
  const double t_end = static_cast<double>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(integrate(f, s.params, Vec3(0.1, 0.1, 0.1), t_end, 0.01));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * 100);
}
BENCHMARK(BM_Integrate)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_ReturnMap(benchmark::State& state) {
  const System s = build("rossler", {}, "two_branch");
  const CompiledField f(s.field);
  const auto tr = integrate(f, s.params, Vec3(0.1, 0.1, 0.1), 5000.0, 0.01, 500.0);
  const auto sec = section_crossings(f, s.params, tr, default_section(f, s.params, tr, Vec3::Zero()));
  std::vector<double> rho;
  for (const auto& c : sec.crossings) rho.push_back(c.rho);
  for (auto _ : state) {
    benchmark::DoNotOptimize(transition_matrix(build_return_map(rho)));
  }
}
BENCHMARK(BM_ReturnMap)->Unit(benchmark::kMillisecond);

void BM_MarchingCubes(benchmark::State& state) {
  const ScalarField sphere = [](const Vec3& x, Vec3& g) {
    g = 2 * x;
    return x.squaredNorm() - 1.0;
  };
  Box b;
  b.lower = Vec3::Constant(-1.5);
  b.upper = Vec3::Constant(1.5);
  const int res = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(extract(sphere, b, res));
  }
}
BENCHMARK(BM_MarchingCubes)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
