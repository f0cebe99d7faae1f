#include <benchmark/benchmark.h>

#include <cmath>

#include "gof/el.hpp"
#include "gof/kmt.hpp"
#include "gof/numerics.hpp"

namespace {

void BM_KmtStatistic(benchmark::State& state, gof::NullFamily family) {
  const auto s = gof::sample(gof::Distribution::standard(family),
                             static_cast<std::size_t>(state.range(0)), 1234);
  for (auto _ : state) benchmark::DoNotOptimize(gof::kmt_statistic(family, s).statistic);
}
BENCHMARK_CAPTURE(BM_KmtStatistic, normal, gof::NullFamily::Normal)
    ->RangeMultiplier(2)->Range(50, 800)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_KmtStatistic, logistic, gof::NullFamily::Logistic)
    ->RangeMultiplier(2)->Range(50, 800)->Unit(benchmark::kMillisecond);

void BM_ElStatistic(benchmark::State& state, gof::ElVariant variant) {
  const auto s = gof::sample(gof::Distribution::normal(), static_cast<std::size_t>(state.range(0)), 99);
  for (auto _ : state) {
    benchmark::DoNotOptimize(gof::el_statistic(gof::NullFamily::Normal, s, variant).statistic);
  }
}
BENCHMARK_CAPTURE(BM_ElStatistic, el1, gof::ElVariant::EL1)->Arg(50)->Arg(500)->Arg(5000);
BENCHMARK_CAPTURE(BM_ElStatistic, el2, gof::ElVariant::EL2)->Arg(50)->Arg(500)->Arg(5000);

// H over [-6, 4]; the argument selects the logistic null.
void BM_TransformQuadrature(benchmark::State& state) {
  const auto family = state.range(0) ? gof::NullFamily::Logistic : gof::NullFamily::Normal;
  auto f = [family](double x) { return gof::integrand_components(family, x); };
  for (auto _ : state) {
    benchmark::DoNotOptimize(gof::numerics::integrate_vector<3>(f, -6.0, 4.0, 1e-9).value);
  }
}
BENCHMARK(BM_TransformQuadrature)->Arg(0)->Arg(1);

void BM_Chi2Quantile(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(gof::chi2_quantile(7, 0.95));
}
BENCHMARK(BM_Chi2Quantile);

}  // namespace

BENCHMARK_MAIN();
