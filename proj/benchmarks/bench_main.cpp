#include "maxzero/bootstrap.hpp"
#include "maxzero/dgp.hpp"
#include "maxzero/estimation.hpp"
#include "maxzero/numerics.hpp"
#include "maxzero/rng.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace maxzero;

Dataset make_data(std::size_t n, std::size_t kd, std::size_t k) {
  DgpSpec spec;
  spec.n = n;
  spec.k_delta = kd;
  spec.k_theta = k;
  RngStream stream(1, stream_id(1, 0));
  return gen_dataset(spec, stream);
}

void BM_SolveSpd(benchmark::State& state) {
  const auto dim = static_cast<Eigen::Index>(state.range(0));
  RngStream stream(2, 0);
  Matrix a(dim, 2 * dim);
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < dim; ++i) a(i, j) = stream.normal();
  }
  const SpdMatrix s(gram(a.transpose()));
  Vector b = Vector::Ones(dim);
  for (auto _ : state) benchmark::DoNotOptimize(solve_spd(s, b));
}
BENCHMARK(BM_SolveSpd)->Arg(10)->Arg(50)->Arg(200);

void BM_BankFit(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const Dataset data = make_data(n, 2, k);
  const ParsimoniousBank bank(data, k);
  ParsimoniousBank::Estimates out;
  for (auto _ : state) {
    bank.fit(data.y(), SeFlavor::robust, true, out);
    benchmark::DoNotOptimize(out.theta.data());
  }
}
BENCHMARK(BM_BankFit)->Args({250, 10})->Args({1000, 35})->Args({8000, 447});

void BM_FitParsimonious(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Dataset data = make_data(n, 2, 10);
  const LinearResponse model(2);
  for (auto _ : state) benchmark::DoNotOptimize(fit_parsimonious(data, model, 3));
}
BENCHMARK(BM_FitParsimonious)->Arg(250)->Arg(2000);

void BM_MaxBootstrap(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const Dataset data = make_data(250, 0, k);
  const LinearResponse model(0);
  BootstrapConfig cfg;
  cfg.M = 200;
  for (auto _ : state) {
    benchmark::DoNotOptimize(max_bootstrap(data, model, k, WeightScheme::inv_se, cfg));
  }
}
BENCHMARK(BM_MaxBootstrap)->Arg(10)->Arg(35)->Unit(benchmark::kMillisecond);

void BM_WaldBootstrap(benchmark::State& state) {
  const Dataset data = make_data(500, 0, 35);
  const LinearResponse model(0);
  BootstrapConfig cfg;
  cfg.M = 200;
  for (auto _ : state) benchmark::DoNotOptimize(wald_bootstrap(data, model, 35, cfg));
}
BENCHMARK(BM_WaldBootstrap)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
