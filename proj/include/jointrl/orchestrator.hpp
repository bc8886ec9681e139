// SPDX-License-Identifier: Apache-2.0
#ifndef JOINTRL_ORCHESTRATOR_HPP_
#define JOINTRL_ORCHESTRATOR_HPP_

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "jointrl/core_model.hpp"
#include "jointrl/observation.hpp"
#include "jointrl/policy.hpp"

namespace jointrl {

// Deterministic, side-effect free: response text from tool-call arguments.
using ToolFunction = std::function<std::string(const nlohmann::json& arguments)>;
using TaskGenerator = std::function<TaskInstance(TaskKind kind, std::uint64_t seed)>;

struct SubAgentInfo {
  AgentId id;
  AgentRole role = AgentRole::kQa;
  std::vector<std::string> tools;
  // Keywords shown to the master next to the agent name.
  std::string description;
};

class Environment {
 public:
  explicit Environment(std::string id) : id_(std::move(id)) {}
  Environment(const Environment&) = delete;
  Environment& operator=(const Environment&) = delete;

  const std::string& id() const { return id_; }

  void add_tool(const std::string& name, ToolFunction tool,
                std::string description = {});
  bool has_tool(const std::string& name) const;
  std::string tool_description(const std::string& name) const;
  std::string call_tool(const std::string& name,
                        const nlohmann::json& arguments) const;

  // `scripted` answers for the sub-agent whenever no policy backs it.
  void add_sub_agent(SubAgentInfo info, ToolFunction scripted);
  const std::vector<SubAgentInfo>& sub_agents() const { return sub_agents_; }
  const SubAgentInfo* sub_agent(const std::string& id) const;
  std::string call_scripted_agent(const std::string& id,
                                  const nlohmann::json& arguments) const;

  void set_task_generator(std::vector<TaskKind> kinds, TaskGenerator generator);
  const std::vector<TaskKind>& kinds() const { return kinds_; }
  TaskInstance generate_task(TaskKind kind, std::uint64_t seed) const;
  // Round-robin over the environment's task mix.
  std::vector<TaskInstance> generate_dataset(std::size_t count,
                                             std::uint64_t seed) const;
  void set_dataset_schedule(
      std::function<std::pair<TaskKind, std::uint64_t>(std::size_t index,
                                                       std::uint64_t seed)>
          schedule) {
    schedule_ = std::move(schedule);
  }

  // Optional override of the accuracy rule: final answer -> R_A.
  std::function<double(const std::string& final_answer, const TaskInstance&)>
      answer_checker;

  std::int64_t episodes_started() const { return episodes_.load(); }
  std::int64_t tool_calls() const { return tool_calls_.load(); }
  void note_episode_start() const { ++episodes_; }
  void reset_counters() const {
    episodes_ = 0;
    tool_calls_ = 0;
  }

 private:
  std::string id_;
  std::map<std::string, ToolFunction> tools_;
  std::map<std::string, std::string> tool_descriptions_;
  std::map<std::string, ToolFunction> scripted_;
  std::vector<SubAgentInfo> sub_agents_;
  std::vector<TaskKind> kinds_;
  TaskGenerator generator_;
  std::function<std::pair<TaskKind, std::uint64_t>(std::size_t, std::uint64_t)>
      schedule_;
  mutable std::atomic<std::int64_t> episodes_{0};
  mutable std::atomic<std::int64_t> tool_calls_{0};
};

std::shared_ptr<Environment> make_environment(std::string_view name);
std::vector<std::string> environment_names();

// Remote-side policy for mock servers: a sub-agent picks uniformly among its
// tool calls, the master among calls to the sub-agents.
RequestHandler uniform_tool_handler(const Environment& env);

class AgentSystem {
 public:
  void add(AgentSpec spec);
  const AgentSpec* find(const AgentId& id) const;
  const AgentSpec& master() const;
  const std::vector<AgentSpec>& agents() const { return agents_; }
  // Exactly one master; every agent has a policy.
  void validate() const;

 private:
  std::vector<AgentSpec> agents_;
};

// Recalled entries per agent, frozen at episode start.
using MemorySnapshot = std::map<AgentId, std::vector<MemoryEntry>>;

struct EpisodeConfig {
  int max_steps = 8;
  double temperature = 1.2;
  bool greedy = false;
  std::int64_t start_time = 0;
};

Trajectory run_episode(std::shared_ptr<const TaskInstance> task,
                       const AgentSystem& agents, const MemorySnapshot& memory,
                       const Environment& env, const EpisodeConfig& config,
                       std::uint64_t seed);

// Observation presented at node `node_index` (1-based), rebuilt by replaying
// the trajectory's prefix.
Observation observation_at(const Trajectory& trajectory, int node_index,
                           const AgentSystem& agents,
                           const MemorySnapshot& memory, const Environment& env,
                           const EpisodeConfig& config);

// Copies nodes 1..node_index-1, applies `forced` at node_index, then samples
// to termination. Counts as one episode.
Trajectory run_branch(const Trajectory& initial, int node_index,
                      const SampledAction& forced, const AgentSystem& agents,
                      const MemorySnapshot& memory, const Environment& env,
                      const EpisodeConfig& config, std::uint64_t seed);

// Agent and tool identifiers invoked along the trajectory, in order.
std::vector<std::string> trajectory_plan(const Trajectory& trajectory,
                                         const Environment& env);

}  // namespace jointrl

#endif  // JOINTRL_ORCHESTRATOR_HPP_
