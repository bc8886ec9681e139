// SPDX-License-Identifier: Apache-2.0
#ifndef JOINTRL_CONFIG_HPP_
#define JOINTRL_CONFIG_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "jointrl/grpo.hpp"
#include "jointrl/memory.hpp"
#include "jointrl/orchestrator.hpp"

namespace jointrl {

// Flat run configuration. Key names follow the usual GRPO trainer names.
struct RunConfig {
  double learning_rate = 1e-6;
  double max_grad_norm = 1.0;
  std::int64_t num_groups = 5;
  std::int64_t topk_groups = 5;
  double kl_coef = 0.0;
  std::int64_t grpo_epoch = 2;
  double policy_clip_eps = 0.2;
  double temperature = 1.2;
  std::int64_t num_train_epochs = 5;
  std::int64_t iterations = 2;
  std::int64_t max_steps = 8;
  std::int64_t seed = 0;
  std::string environment = "routing";
  double std_floor = 1e-8;
  bool update_all_nodes = false;
  bool efficiency_reward = true;

  double deletion_threshold = 0.0;
  std::int64_t memory_capacity = 1024;
  std::int64_t recall_n = 3;
  double alpha = 1.0;
  double beta = 1.0;

  double eval_temperature = 0.0;  // 0 = greedy
  std::int64_t eval_tasks = 200;
  std::int64_t eval_every = 0;  // tasks between evaluations; 0 = end of run only
  std::int64_t train_tasks = 50;
  bool parallel = true;
  std::int64_t feature_dim = 1 << 14;
  std::string remote_agents;     // comma-separated agent ids
  std::string remote_endpoint;   // http://host:port/path
  std::string scripted_agents;   // sub-agents left to the environment

  GrpoConfig grpo() const;
  MemoryConfig memory() const;
  EpisodeConfig episode() const;

  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

std::vector<std::string> config_keys();

// Parses `value` into the named key; throws ConfigError naming the key.
void set_config_value(RunConfig& config, const std::string& key,
                      const std::string& value);
std::string get_config_value(const RunConfig& config, const std::string& key);

// `key = value` lines; `#` starts a comment.
RunConfig parse_config(const std::string& text, const std::string& origin = "config");
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& config);

// JOINTRL_<KEY> overrides for every key.
void apply_env_overrides(RunConfig& config,
                         const std::function<const char*(const char*)>& getenv_fn);

nlohmann::json to_json(const RunConfig& config);

std::vector<std::string> split_list(const std::string& text);

}  // namespace jointrl

#endif  // JOINTRL_CONFIG_HPP_
