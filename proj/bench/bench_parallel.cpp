// Serial reference vs OpenMP kernels: the bench sweep and demo generation.

#include "ioc_eiv/bench.hpp"
#include "ioc_eiv/demos.hpp"
#include "ioc_eiv/forward.hpp"
#include "ioc_eiv/io.hpp"

#include <benchmark/benchmark.h>

#include <omp.h>

using namespace ioc_eiv;

namespace {

io::Config sweep_config() {
  io::json j = io::read_json_file(std::string(IOC_EIV_SOURCE_DIR) + "/configs/spring_damper.json");
  j["reps"] = 4;
  return io::config_from_json(j);
}

void BM_BenchSerial(benchmark::State& state) {
  const io::Config cfg = sweep_config();
  for (auto _ : state) benchmark::DoNotOptimize(bench::run_bench_serial(cfg, 1));
}

void BM_BenchParallel(benchmark::State& state) {
  const io::Config cfg = sweep_config();
  const int jobs = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(bench::run_bench_parallel(cfg, 1, jobs));
}

Vector u_star() {
  const ForwardProblem fp = io::load_config(std::string(IOC_EIV_SOURCE_DIR) + "/configs/spring_damper.json").problem;
  return forward::solve(fp, *fp.theta_true()).U;
}

void BM_GenerateSerial(benchmark::State& state) {
  const Vector U = u_star();
  const NoiseSpec spec = NoiseSpec::gaussian(Matrix::Constant(1, 1, 1e-4), 3);
  for (auto _ : state) benchmark::DoNotOptimize(generate_serial(U, spec, static_cast<int>(state.range(0))));
}

void BM_GenerateParallel(benchmark::State& state) {
  const Vector U = u_star();
  const NoiseSpec spec = NoiseSpec::gaussian(Matrix::Constant(1, 1, 1e-4), 3);
  for (auto _ : state) benchmark::DoNotOptimize(generate(U, spec, static_cast<int>(state.range(0))));
}

}  // namespace

BENCHMARK(BM_BenchSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BenchParallel)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GenerateSerial)->Arg(1000)->Arg(100000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_GenerateParallel)->Arg(1000)->Arg(100000)->Unit(benchmark::kMicrosecond);

int main(int argc, char** argv) {
  benchmark::Initialize(&argc, argv);
  benchmark::AddCustomContext("omp_max_threads", std::to_string(omp_get_max_threads()));
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
