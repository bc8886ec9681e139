// SPDX-License-Identifier: Apache-2.0
#include "jointrl/sampler.hpp"

#include <exception>

#include "jointrl/text.hpp"

namespace jointrl {

namespace {

struct BranchJob {
  std::size_t group = 0;
  std::size_t member = 0;
  SampledAction forced;
  std::uint64_t seed = 0;
};

}  // namespace

Trajectory initial_rollout(std::shared_ptr<const TaskInstance> task,
                           const AgentSystem& agents, const MemorySnapshot& memory,
                           const Environment& env, const EpisodeConfig& config,
                           std::uint64_t seed) {
  return run_episode(std::move(task), agents, memory, env, config, seed);
}

SamplingStats sampling_counts(const std::vector<int>& budgets) {
  SamplingStats stats;
  stats.naive_bound = 1.0;
  for (int g : budgets) {
    stats.fresh_rollouts += g - 1;
    stats.memberships += g;
    stats.naive_bound *= g;
  }
  stats.distinct_rollouts = 1 + stats.fresh_rollouts;
  return stats;
}

SamplingResult node_wise_sample(const Trajectory& initial,
                                const std::vector<int>& budgets,
                                const AgentSystem& agents,
                                const MemorySnapshot& memory, const Environment& env,
                                const EpisodeConfig& config, std::uint64_t seed,
                                bool parallel) {
  const int k = initial.length();
  if (k < 1) throw Error("node-wise sampling needs a non-empty trajectory");
  if (static_cast<int>(budgets.size()) != k) {
    throw Error("expected " + std::to_string(k) + " group budgets, got " +
                std::to_string(budgets.size()));
  }
  for (int g : budgets) {
    if (g < 2) throw Error("every group budget must be >= 2");
  }

  SamplingResult result;
  result.stats = sampling_counts(budgets);
  result.groups.resize(static_cast<std::size_t>(k));
  std::vector<BranchJob> jobs;
  jobs.reserve(static_cast<std::size_t>(result.stats.fresh_rollouts));

  // Draws are taken serially so remote servers see a deterministic order.
  for (int i = 1; i <= k; ++i) {
    auto& group = result.groups[static_cast<std::size_t>(i) - 1];
    const auto& node = initial.nodes[static_cast<std::size_t>(i) - 1];
    group.node_index = i;
    group.agent = node.agent;
    group.observation = observation_at(initial, i, agents, memory, env, config);
    const auto* spec = agents.find(node.agent);
    if (spec == nullptr) throw PolicyError("no policy for agent '" + node.agent + "'");
    const auto group_seed = mix_seed(seed, static_cast<std::uint64_t>(i));
    auto draws = sample_actions(*spec->policy, group.observation, budgets[i - 1] - 1,
                                config.temperature, group_seed);
    group.rollouts.resize(static_cast<std::size_t>(budgets[i - 1]));
    group.old_logprobs.resize(group.rollouts.size());
    group.rollouts[0] = initial;
    group.old_logprobs[0] = node.action_logprob;
    for (std::size_t d = 0; d < draws.size(); ++d) {
      group.old_logprobs[d + 1] = draws[d].logprob;
      jobs.push_back({static_cast<std::size_t>(i) - 1, d + 1, std::move(draws[d]),
                      mix_seed(group_seed, d + 1)});
    }
  }

  std::vector<std::exception_ptr> failures(jobs.size());
  const auto total = static_cast<std::int64_t>(jobs.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::int64_t n = 0; n < total; ++n) {
    auto& job = jobs[static_cast<std::size_t>(n)];
    auto& group = result.groups[job.group];
    try {
      group.rollouts[job.member] =
          run_branch(initial, group.node_index, job.forced, agents, memory, env,
                     config, job.seed);
    } catch (...) {
      failures[static_cast<std::size_t>(n)] = std::current_exception();
    }
  }
  for (const auto& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }
  return result;
}

}  // namespace jointrl
