// Microbenchmarks for the integration and section machinery on catalog flows.

#include <benchmark/benchmark.h>

#include <centra/catalog.hpp>
#include <centra/centralizer.hpp>
#include <centra/poincare.hpp>

using namespace centra;

namespace {

Vec pt(double x, double y) {
  Vec p(2);
  p << x, y;
  return p;
}

void BM_FlowMap(benchmark::State& state) {
  CatalogEntry e = catalog_get("morse_gradient_torus");
  Vec p = pt(0.3, 0.15);
  for (auto _ : state) {
    benchmark::DoNotOptimize(flow(e.X, p, 5.0, 1e-10));
  }
}
BENCHMARK(BM_FlowMap);

void BM_Variational(benchmark::State& state) {
  CatalogEntry e = catalog_get("shear_strip");
  Vec p = pt(0, 0.5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(variational(e.X, p, 2.0, 1e-10));
  }
}
BENCHMARK(BM_Variational);

void BM_LinearPoincare(benchmark::State& state) {
  CatalogEntry e = catalog_get("annulus_unit_speed");
  Vec p = pt(1.5, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(linear_poincare(e.X, p, 1.0, 1e-10));
  }
}
BENCHMARK(BM_LinearPoincare);

void BM_PoincareHit(benchmark::State& state) {
  CatalogEntry e = catalog_get("shear_strip");
  Vec p = pt(0, 0.3);
  PoincareMapNum pm = poincare_map(e.X, p, 2.0, 4.0, 0.02, 1.0);
  Vec q = pt(0.004, 0.302);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pm.evaluate(q));
  }
}
BENCHMARK(BM_PoincareHit);

void BM_DistortionSeries(benchmark::State& state) {
  CatalogEntry e = catalog_get("shear_strip");
  for (auto _ : state) {
    benchmark::DoNotOptimize(normal_distortion(e.X, pt(0, 0), pt(0, 0.1), 3, 1e-9));
  }
}
BENCHMARK(BM_DistortionSeries);

void BM_SameOrbitSearch(benchmark::State& state) {
  CatalogEntry e = catalog_get("annulus_unit_speed");
  Vec x = pt(1.5, 0.2);
  Vec y = flow(e.X, x, 0.3, 1e-11);
  for (auto _ : state) {
    benchmark::DoNotOptimize(same_orbit_search(e.X, x, y, 5.0));
  }
}
BENCHMARK(BM_SameOrbitSearch);

}  // namespace

BENCHMARK_MAIN();
