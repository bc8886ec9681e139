// SPDX-License-Identifier: Apache-2.0
#ifndef JOINTRL_SAMPLER_HPP_
#define JOINTRL_SAMPLER_HPP_

#include <cstdint>
#include <vector>

#include "jointrl/orchestrator.hpp"

namespace jointrl {

struct RewardBreakdown {
  double accuracy = 0.0;    // R_A
  double format = 0.0;      // R_F
  double efficiency = 0.0;  // R_E
  double total = 0.0;       // R = R_A + R_F - R_E
  double memory = 0.0;      // R_M = R_A + R_F
};

// G_i rollouts sharing nodes 1..i-1; member 0 is the initial trajectory.
struct SamplingGroup {
  int node_index = 0;
  AgentId agent;
  Observation observation;  // what agent m_i saw at node i
  std::vector<Trajectory> rollouts;
  std::vector<double> rewards;  // total R per member, filled by scoring
  std::vector<RewardBreakdown> breakdowns;
  std::vector<double> old_logprobs;

  std::size_t size() const { return rollouts.size(); }
  const StructuredOutput& action(std::size_t member) const {
    return rollouts.at(member).nodes.at(static_cast<std::size_t>(node_index) - 1).action;
  }
};

struct SamplingStats {
  std::int64_t fresh_rollouts = 0;     // sum of (G_i - 1)
  std::int64_t memberships = 0;        // sum of G_i
  std::int64_t distinct_rollouts = 0;  // 1 + sum of (G_i - 1)
  double naive_bound = 0.0;            // product of G_i
};

struct SamplingResult {
  std::vector<SamplingGroup> groups;
  SamplingStats stats;
};

Trajectory initial_rollout(std::shared_ptr<const TaskInstance> task,
                           const AgentSystem& agents, const MemorySnapshot& memory,
                           const Environment& env, const EpisodeConfig& config,
                           std::uint64_t seed);

// Branch draws always use config.temperature, even for greedy configs.
// The parallel and serial paths produce identical results.
SamplingResult node_wise_sample(const Trajectory& initial,
                                const std::vector<int>& budgets,
                                const AgentSystem& agents,
                                const MemorySnapshot& memory, const Environment& env,
                                const EpisodeConfig& config, std::uint64_t seed,
                                bool parallel = true);

SamplingStats sampling_counts(const std::vector<int>& budgets);

}  // namespace jointrl

#endif  // JOINTRL_SAMPLER_HPP_
