#include "upsense/baselines.hpp"
#include "upsense/cacc.hpp"
#include "upsense/harness.hpp"
#include "upsense/mirrored_music.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace upsense;

/// Shared noiseless xi grid on the default desk-scale configuration.
struct Fixture {
  ScenarioConfig cfg = ScenarioConfig::desk_defaults();
  XiGrid xi;
  MirrorConfig mc;
  double omega0 = 0.0;
  double tau0 = 0.0;
  int num_targets = 3;

  Fixture() {
    Rng rng(7);
    const auto paths = make_random_paths(cfg, SceneConstraints{}, rng);
    xi = decompose_cacc(cfg, paths).xi();
    choose_m0_g0(xi, mc);
    omega0 = los_path(paths).spatial_freq_rad;
    tau0 = los_path(paths).delay_s;
  }

  static const Fixture& instance() {
    static Fixture f;
    return f;
  }
};

void BM_MirroredSearch(benchmark::State& state) {
  const Fixture& f = Fixture::instance();
  for (auto _ : state) {
    auto r = algorithm1(f.xi, f.omega0, f.tau0, f.cfg, f.mc, f.num_targets);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_MirroredSearch)->Unit(benchmark::kMillisecond);

void BM_ConventionalSearch(benchmark::State& state) {
  const Fixture& f = Fixture::instance();
  for (auto _ : state) {
    auto r = conventional_estimate(f.xi, f.omega0, f.tau0, f.cfg, f.mc, f.num_targets);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_ConventionalSearch)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
