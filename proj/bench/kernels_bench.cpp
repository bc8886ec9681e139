// SPDX-License-Identifier: Apache-2.0
// Serial vs OpenMP paths of the per-task kernels. Argument 0 = serial, 1 = parallel.
#include <benchmark/benchmark.h>

#include "jointrl/grpo.hpp"
#include "jointrl/reward.hpp"
#include "jointrl/sampler.hpp"
#include "jointrl/trainer.hpp"

using namespace jointrl;

namespace {

struct Fixture {
  std::shared_ptr<Environment> env = make_environment("routing");
  RunConfig config;
  AgentSystem agents;
  std::shared_ptr<const TaskInstance> task;
  Trajectory initial;
  std::vector<int> budgets;

  Fixture() {
    config.max_steps = 8;
    agents = build_agents(config, *env);
    for (std::uint64_t seed = 0;; ++seed) {
      task = std::make_shared<const TaskInstance>(env->generate_task(TaskKind::kMath, seed));
      initial = initial_rollout(task, agents, {}, *env, config.episode(), seed);
      if (initial.length() == 8) break;
    }
    budgets.assign(8, 8);
  }
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

void BM_NodeWiseSample(benchmark::State& state) {
  auto& f = fixture();
  const bool parallel = state.range(0) != 0;
  for (auto _ : state) {
    auto result = node_wise_sample(f.initial, f.budgets, f.agents, {}, *f.env,
                                   f.config.episode(), 1, parallel);
    benchmark::DoNotOptimize(result.groups.data());
  }
}

void BM_ScoreGroups(benchmark::State& state) {
  auto& f = fixture();
  const bool parallel = state.range(0) != 0;
  const auto sampled =
      node_wise_sample(f.initial, f.budgets, f.agents, {}, *f.env, f.config.episode(), 1);
  for (auto _ : state) {
    auto groups = sampled.groups;
    score_groups(groups, *f.task, {}, parallel);
    benchmark::DoNotOptimize(groups.data());
  }
}

void BM_GrpoStep(benchmark::State& state) {
  auto& f = fixture();
  auto sampled =
      node_wise_sample(f.initial, f.budgets, f.agents, {}, *f.env, f.config.episode(), 1);
  score_groups(sampled.groups, *f.task);
  auto grpo = f.config.grpo();
  grpo.update_all = true;
  grpo.parallel = state.range(0) != 0;
  for (auto _ : state) {
    state.PauseTiming();
    AgentSystem copy;
    for (auto spec : f.agents.agents()) {
      spec.policy = std::make_shared<PolicyHandle>(*spec.policy);
      copy.add(spec);
    }
    state.ResumeTiming();
    auto report = grpo_step(sampled.groups, copy, grpo, 1);
    benchmark::DoNotOptimize(report.updates.data());
  }
}

void BM_Evaluate(benchmark::State& state) {
  auto config = RunConfig{};
  config.parallel = state.range(0) != 0;
  auto env = make_environment("routing");
  Trainer trainer(config, env);
  const auto tasks = env->generate_dataset(200, 3);
  for (auto _ : state) {
    auto result = trainer.evaluate(tasks);
    benchmark::DoNotOptimize(result.accuracy);
  }
}

}  // namespace

BENCHMARK(BM_NodeWiseSample)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScoreGroups)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_GrpoStep)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Evaluate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
