#include <random>

#include <benchmark/benchmark.h>

#include "clusterqed/cavity.hpp"
#include "clusterqed/optics.hpp"
#include "clusterqed/protocol.hpp"

namespace cq = clusterqed;

namespace {

cq::PhysicalParams rubidium() { return cq::PhysicalParams::from_two_pi_mhz(27.0, 2.4, 6.0); }

void BM_Amplitudes(benchmark::State& state) {
  const auto p = rubidium();
  double t = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cq::amplitudes_at(p, t));
    t += 1e-4;
    if (t > p.window) t = 0.0;
  }
}
BENCHMARK(BM_Amplitudes);

void BM_OdeOracle(benchmark::State& state) {
  const auto p = rubidium();
  const std::vector<double> times{0.0, 0.05, 0.1, 0.15, 0.2};
  for (auto _ : state) benchmark::DoNotOptimize(cq::ode_oracle_integrate(p, times));
}
BENCHMARK(BM_OdeOracle)->Unit(benchmark::kMicrosecond);

void BM_ExactRound(benchmark::State& state) {
  auto model = cq::ImperfectionModel::ideal();
  model.force_emission = state.range(0) == 0;
  model.photon_loss = {0.1};
  const auto network = cq::default_four_atom_network();
  const auto target = cq::build_four_atom_target().state;
  for (auto _ : state) benchmark::DoNotOptimize(cq::exact_generation_round(model, network, target));
}
BENCHMARK(BM_ExactRound)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SampledRound(benchmark::State& state) {
  auto model = cq::ImperfectionModel::ideal();
  model.force_emission = false;
  cq::GenerationSampler sampler(model, cq::default_four_atom_network(), cq::build_four_atom_target().state);
  std::mt19937_64 rng(7);
  for (auto _ : state) benchmark::DoNotOptimize(sampler.sample(rng));
}
BENCHMARK(BM_SampledRound)->Unit(benchmark::kMicrosecond);

void BM_Corrections(benchmark::State& state) {
  const auto model = cq::ImperfectionModel::ideal();
  const auto network = cq::default_four_atom_network();
  const auto target = cq::build_four_atom_target().state;
  const auto table = cq::exact_generation_round(model, network, target);
  for (auto _ : state) {
    auto copy = table;
    cq::apply_corrections(copy, target);
    benchmark::DoNotOptimize(copy);
  }
}
BENCHMARK(BM_Corrections)->Unit(benchmark::kMicrosecond);

void BM_Fusion(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto model = cq::ImperfectionModel::ideal(2);
  const auto first = cq::build_paired_cluster(n, 0);
  const auto second = cq::build_paired_cluster(n, 100);
  for (auto _ : state) benchmark::DoNotOptimize(cq::fuse(first, second, model));
}
BENCHMARK(BM_Fusion)->Arg(4)->Arg(6)->Unit(benchmark::kMicrosecond);

void BM_GrowthModel(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(cq::expected_growth(20, 0.125, 0.5));
}
BENCHMARK(BM_GrowthModel);

}  // namespace

BENCHMARK_MAIN();
