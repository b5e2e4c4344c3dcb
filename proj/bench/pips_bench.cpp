#include <benchmark/benchmark.h>

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "pips/core/rng.hpp"
#include "pips/evaluator/judge.hpp"
#include "pips/switch/switch.hpp"

namespace {

using namespace pips;

std::vector<ProgramArtifact> make_programs(std::size_t n) {
  std::vector<ProgramArtifact> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::string src =
        "def solve(symbols):\n"
        "    objects = symbols['objects']\n"
        "    total = 0\n"
        "    for o in objects:\n"
        "        if o['color'] == 'red' and o['size'] > " + std::to_string(i % 7) + ":\n"
        "            total += 1\n"
        "    return total\n";
    out.push_back({src, "solve", 0});
  }
  return out;
}

std::vector<RunOutcome> make_runs(std::size_t n) {
  RunOutcome run;
  run.status = RunStatus::ok;
  run.return_value = Json(3);
  return std::vector<RunOutcome>(n, run);
}

std::vector<SwitchSample> make_samples(std::size_t n, std::uint64_t seed) {
  DeterministicRng rng(seed);
  std::vector<SwitchSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    SwitchSample s;
    double z = -0.5;
    for (std::size_t k = 0; k < kCriteriaCount; ++k) {
      s.features.push_back(rng.uniform());
      z += (k % 2 ? 1.0 : -0.5) * s.features.back();
    }
    s.label = rng.bernoulli(1.0 / (1.0 + std::exp(-3.0 * z)));
    out.push_back(std::move(s));
  }
  return out;
}

void BM_AnalyzeBatchSerial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto programs = make_programs(n);
  auto runs = make_runs(n);
  AnswerSpec spec{AnswerKind::integer, {}, 1e-6};
  for (auto _ : state) benchmark::DoNotOptimize(analyze_batch_serial(programs, runs, spec));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_AnalyzeBatchOpenMP(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto programs = make_programs(n);
  auto runs = make_runs(n);
  AnswerSpec spec{AnswerKind::integer, {}, 1e-6};
  for (auto _ : state) benchmark::DoNotOptimize(analyze_batch(programs, runs, spec));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_TrainSwitchSerial(benchmark::State& state) {
  auto samples = make_samples(static_cast<std::size_t>(state.range(0)), 7);
  for (auto _ : state) benchmark::DoNotOptimize(train_switch_serial(samples));
}

void BM_TrainSwitchOpenMP(benchmark::State& state) {
  auto samples = make_samples(static_cast<std::size_t>(state.range(0)), 7);
  for (auto _ : state) benchmark::DoNotOptimize(train_switch(samples));
}

std::map<std::string, std::vector<SwitchSample>> make_grouped(std::size_t tasks, std::size_t per_task) {
  std::map<std::string, std::vector<SwitchSample>> grouped;
  for (std::size_t t = 0; t < tasks; ++t) grouped["task" + std::to_string(t)] = make_samples(per_task, t + 1);
  return grouped;
}

void BM_LodoSerial(benchmark::State& state) {
  auto grouped = make_grouped(static_cast<std::size_t>(state.range(0)), 200);
  for (auto _ : state) benchmark::DoNotOptimize(lodo_eval_serial(grouped));
}

void BM_LodoOpenMP(benchmark::State& state) {
  auto grouped = make_grouped(static_cast<std::size_t>(state.range(0)), 200);
  for (auto _ : state) benchmark::DoNotOptimize(lodo_eval(grouped));
}

}  // namespace

BENCHMARK(BM_AnalyzeBatchSerial)->Arg(64)->Arg(512);
BENCHMARK(BM_AnalyzeBatchOpenMP)->Arg(64)->Arg(512);
BENCHMARK(BM_TrainSwitchSerial)->Arg(1000)->Arg(20000);
BENCHMARK(BM_TrainSwitchOpenMP)->Arg(1000)->Arg(20000);
BENCHMARK(BM_LodoSerial)->Arg(4)->Arg(23);
BENCHMARK(BM_LodoOpenMP)->Arg(4)->Arg(23);

BENCHMARK_MAIN();
