// SPDX-License-Identifier: Apache-2.0
#ifndef JOINTRL_GRPO_HPP_
#define JOINTRL_GRPO_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jointrl/sampler.hpp"

namespace jointrl {

struct GrpoConfig {
  double clip_eps = 0.2;
  int topk = 5;             // 0 disables updates
  bool update_all = false;  // update every node instead of the top-K
  int grpo_epochs = 2;
  double kl_coef = 0.0;
  double learning_rate = 1e-6;
  double max_grad_norm = 1.0;
  double std_floor = 1e-8;
  double temperature = 1.2;  // must match the sampling temperature
  bool parallel = true;

  void validate() const;
};

struct AdvantageSet {
  std::vector<double> advantages;
  double mean = 0.0;
  double stddev = 0.0;  // population
  bool degenerate = false;
};

AdvantageSet compute_advantages(std::span<const double> rewards,
                                double std_floor = 1e-8);

double population_variance(std::span<const double> values);

// (1/G) sum_i min(rho_i A_i, clip(rho_i, 1-eps, 1+eps) A_i), rho_i = exp(new-old).
double clipped_objective(std::span<const double> old_logprobs,
                         std::span<const double> new_logprobs,
                         std::span<const double> advantages, double clip_eps);

// Current-policy log-probabilities of each member's node-i action.
std::vector<double> group_logprobs(const PolicyHandle& policy,
                                   const SamplingGroup& group, double temperature);

double group_objective(const PolicyHandle& policy, const SamplingGroup& group,
                       std::span<const double> advantages, double clip_eps,
                       double temperature);

// Exact gradient of group_objective; members on a binding clip contribute 0.
std::vector<double> objective_gradient(const PolicyHandle& policy,
                                       const SamplingGroup& group,
                                       std::span<const double> advantages,
                                       double clip_eps, double temperature);

// Indices of the K groups with the largest reward variance, ranked; ties go
// to the earlier node.
std::vector<std::size_t> select_topk_groups(const std::vector<SamplingGroup>& groups,
                                            int k);
std::vector<std::size_t> select_topk_by_variance(std::span<const double> variances,
                                                 int k);

struct GroupUpdate {
  int node_index = 0;
  AgentId agent;
  double variance = 0.0;
  std::vector<double> advantages;
  std::optional<double> objective_before;  // builtin agents only
  std::optional<double> objective_after;
  bool emitted = false;
};

struct BatchRecord {
  AgentId agent_id;
  std::string context;
  std::string output_text;
  double advantage = 0.0;
  double old_logprob = 0.0;
  double clip_eps = 0.0;
  std::int64_t step = 0;
};

nlohmann::json to_json(const BatchRecord& record);

struct GrpoReport {
  std::vector<GroupUpdate> updates;  // in selection rank order
  std::vector<BatchRecord> batch;
  std::string batch_file;  // set when batch records were written

  std::vector<int> selected_nodes() const;
};

// Updates builtin agents in place; remote agents get batch records, written to
// `<batch_dir>/step_<step>.jsonl` when batch_dir is non-empty.
GrpoReport grpo_step(const std::vector<SamplingGroup>& groups,
                     const AgentSystem& agents, const GrpoConfig& config,
                     std::int64_t step, const std::string& batch_dir = {});

}  // namespace jointrl

#endif  // JOINTRL_GRPO_HPP_
