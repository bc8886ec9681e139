// SPDX-License-Identifier: Apache-2.0
#ifndef JOINTRL_TRAINER_HPP_
#define JOINTRL_TRAINER_HPP_

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "jointrl/config.hpp"
#include "jointrl/grpo.hpp"
#include "jointrl/memory.hpp"
#include "jointrl/metrics.hpp"
#include "jointrl/reward.hpp"
#include "jointrl/sampler.hpp"

namespace jointrl {

inline constexpr const char* kMasterId = "master";

// Master plus one agent per environment sub-agent, minus `scripted_agents`.
// Agents listed in `remote_agents` are served by `remote_endpoint`.
AgentSystem build_agents(const RunConfig& config, const Environment& env);

struct MemoryAudit {
  AgentId agent;
  std::size_t size = 0;
  std::optional<double> min_score;
  std::size_t inserted = 0;
  std::size_t expected_inserted = 0;  // participating rollouts with R_M > U
};

struct StepOutcome {
  std::int64_t step = 0;
  Trajectory initial;
  std::vector<SamplingGroup> groups;
  SamplingStats stats;
  std::int64_t episodes = 0;  // engine episode counter delta
  RewardBounds bounds;
  std::vector<MemoryAudit> audits;
  GrpoReport update;
};

struct EvalResult {
  std::map<std::string, double> per_kind_accuracy;
  double accuracy = 0.0;
  double avg_reasoning_rounds = 0.0;
  std::size_t tasks = 0;
  std::vector<Trajectory> trajectories;  // one greedy episode per task
};

nlohmann::json to_json(const EvalResult& result);

struct TrainResult {
  nlohmann::json summary;
  std::vector<EvalResult> evals;  // in emission order; last is final
  std::vector<std::int64_t> eval_tasks_seen;
};

class Trainer {
 public:
  explicit Trainer(RunConfig config, std::shared_ptr<Environment> env = nullptr);
  Trainer(RunConfig config, std::shared_ptr<Environment> env, AgentSystem agents);

  const RunConfig& config() const { return config_; }
  const Environment& environment() const { return *env_; }
  const AgentSystem& agents() const { return agents_; }
  std::map<AgentId, MemoryStore>& memory() { return memory_; }
  const std::map<AgentId, MemoryStore>& memory() const { return memory_; }
  std::int64_t step() const { return step_; }
  std::int64_t grpo_steps() const { return grpo_steps_; }
  std::int64_t memory_passes() const { return memory_passes_; }

  // Where remote-agent batch files go; empty keeps them in memory only.
  void set_batch_dir(std::string dir) { batch_dir_ = std::move(dir); }

  // One training task: rollout, sampling, scoring, memory, GRPO, metrics.
  StepOutcome train_step(const TaskInstance& task, MetricsStream* metrics = nullptr);

  // Full loop over iterations x epochs x dataset. Checkpoints after each epoch
  // when `out_dir` is non-empty.
  TrainResult train(const std::vector<TaskInstance>& dataset,
                    const std::vector<TaskInstance>& eval_set, MetricsStream& metrics,
                    const std::string& out_dir = {});

  // Read-only: no policy or memory writes.
  EvalResult evaluate(const std::vector<TaskInstance>& tasks) const;

  MemorySnapshot snapshot(const std::string& query) const;

  void save_checkpoint(const std::string& dir, std::int64_t iteration,
                       std::int64_t epoch) const;
  void load_checkpoint(const std::string& dir);

 private:
  RunConfig config_;
  std::shared_ptr<Environment> env_;
  AgentSystem agents_;
  std::map<AgentId, MemoryStore> memory_;
  std::string batch_dir_;
  std::int64_t step_ = 0;
  std::int64_t grpo_steps_ = 0;
  std::int64_t memory_passes_ = 0;
};

RewardOptions reward_options(const RunConfig& config, const Environment& env);

}  // namespace jointrl

#endif  // JOINTRL_TRAINER_HPP_
