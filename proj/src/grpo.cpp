// SPDX-License-Identifier: Apache-2.0
#include "jointrl/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>

namespace jointrl {

void GrpoConfig::validate() const {
  if (!(clip_eps > 0.0 && clip_eps < 1.0)) {
    throw ConfigError("policy_clip_eps must lie in (0, 1)");
  }
  if (topk < 0) throw ConfigError("topk_groups must be >= 0");
  if (grpo_epochs < 1) throw ConfigError("grpo_epoch must be >= 1");
  if (kl_coef != 0.0) throw ConfigError("kl_coef must be 0 in this engine");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(std_floor > 0.0)) throw ConfigError("std_floor must be positive");
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
}

double population_variance(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double sum = 0.0;
  for (double v : values) sum += (v - mean) * (v - mean);
  return sum / n;
}

AdvantageSet compute_advantages(std::span<const double> rewards, double std_floor) {
  if (rewards.size() < 2) {
    throw Error("advantages need a group of at least 2 rewards, got " +
                std::to_string(rewards.size()));
  }
  AdvantageSet out;
  const double n = static_cast<double>(rewards.size());
  out.mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  out.stddev = std::sqrt(population_variance(rewards));
  out.advantages.assign(rewards.size(), 0.0);
  if (!(out.stddev > std_floor)) {
    out.degenerate = true;
    return out;
  }
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    out.advantages[i] = (rewards[i] - out.mean) / out.stddev;
  }
  return out;
}

double clipped_objective(std::span<const double> old_logprobs,
                         std::span<const double> new_logprobs,
                         std::span<const double> advantages, double clip_eps) {
  if (old_logprobs.size() != new_logprobs.size() ||
      old_logprobs.size() != advantages.size() || advantages.empty()) {
    throw Error("clipped objective needs equal, non-empty member lists");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < advantages.size(); ++i) {
    const double ratio = std::exp(new_logprobs[i] - old_logprobs[i]);
    if (!std::isfinite(ratio)) {
      throw Error("non-finite probability ratio for group member " + std::to_string(i));
    }
    const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
    total += std::min(ratio * advantages[i], clipped * advantages[i]);
  }
  return total / static_cast<double>(advantages.size());
}

std::vector<double> group_logprobs(const PolicyHandle& policy,
                                   const SamplingGroup& group, double temperature) {
  const auto logps =
      action_distribution(policy, group.observation, temperature).log_probabilities();
  std::vector<double> out;
  out.reserve(group.size());
  for (std::size_t j = 0; j < group.size(); ++j) {
    const auto& action = group.action(j);
    std::size_t index = group.observation.candidates.size();
    for (std::size_t c = 0; c < group.observation.candidates.size(); ++c) {
      if (group.observation.candidates[c].action == action) {
        index = c;
        break;
      }
    }
    if (index == group.observation.candidates.size()) {
      throw PolicyError("group member " + std::to_string(j) +
                        " acted outside the support of agent '" + group.agent + "'");
    }
    out.push_back(logps[index]);
  }
  return out;
}

double group_objective(const PolicyHandle& policy, const SamplingGroup& group,
                       std::span<const double> advantages, double clip_eps,
                       double temperature) {
  const auto current = group_logprobs(policy, group, temperature);
  return clipped_objective(group.old_logprobs, current, advantages, clip_eps);
}

std::vector<double> objective_gradient(const PolicyHandle& policy,
                                       const SamplingGroup& group,
                                       std::span<const double> advantages,
                                       double clip_eps, double temperature) {
  if (!policy.is_builtin()) {
    throw PolicyError("objective gradient is unsupported for remote policy '" +
                      policy.agent_id + "'");
  }
  if (advantages.size() != group.size() || group.old_logprobs.size() != group.size()) {
    throw Error("advantages and log-probabilities must cover every group member");
  }
  std::vector<double> gradient(policy.parameters.size(), 0.0);
  const auto current = group_logprobs(policy, group, temperature);
  const double inv_g = 1.0 / static_cast<double>(group.size());
  for (std::size_t j = 0; j < group.size(); ++j) {
    const double a = advantages[j];
    if (a == 0.0) continue;
    const double ratio = std::exp(current[j] - group.old_logprobs[j]);
    if (!std::isfinite(ratio)) {
      throw Error("non-finite probability ratio for group member " + std::to_string(j));
    }
    if ((a > 0.0 && ratio > 1.0 + clip_eps) || (a < 0.0 && ratio < 1.0 - clip_eps)) {
      continue;
    }
    // d(rho A)/dtheta = rho A dlogpi/dtheta
    accumulate_log_prob_gradient(policy, group.observation, group.action(j),
                                 temperature, inv_g * ratio * a, gradient);
  }
  return gradient;
}

std::vector<std::size_t> select_topk_by_variance(std::span<const double> variances,
                                                 int k) {
  std::vector<std::size_t> order(variances.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return variances[a] > variances[b];
  });
  if (k < 0) k = 0;
  if (order.size() > static_cast<std::size_t>(k)) order.resize(static_cast<std::size_t>(k));
  return order;
}

std::vector<std::size_t> select_topk_groups(const std::vector<SamplingGroup>& groups,
                                            int k) {
  std::vector<double> variances;
  variances.reserve(groups.size());
  for (const auto& group : groups) variances.push_back(population_variance(group.rewards));
  // stable sort keeps node order among equal variances
  std::vector<std::size_t> by_node(groups.size());
  std::iota(by_node.begin(), by_node.end(), std::size_t{0});
  std::stable_sort(by_node.begin(), by_node.end(), [&](std::size_t a, std::size_t b) {
    return groups[a].node_index < groups[b].node_index;
  });
  std::vector<double> ordered;
  for (auto i : by_node) ordered.push_back(variances[i]);
  std::vector<std::size_t> out;
  for (auto rank : select_topk_by_variance(ordered, k)) out.push_back(by_node[rank]);
  return out;
}

nlohmann::json to_json(const BatchRecord& record) {
  return {{"agent_id", record.agent_id},     {"context", record.context},
          {"output_text", record.output_text}, {"advantage", record.advantage},
          {"old_logprob", record.old_logprob}, {"clip_eps", record.clip_eps},
          {"step", record.step}};
}

std::vector<int> GrpoReport::selected_nodes() const {
  std::vector<int> out;
  for (const auto& update : updates) out.push_back(update.node_index);
  return out;
}

GrpoReport grpo_step(const std::vector<SamplingGroup>& groups,
                     const AgentSystem& agents, const GrpoConfig& config,
                     std::int64_t step, const std::string& batch_dir) {
  config.validate();
  GrpoReport report;
  std::vector<std::size_t> selected;
  if (config.update_all) {
    selected.resize(groups.size());
    std::iota(selected.begin(), selected.end(), std::size_t{0});
  } else {
    selected = select_topk_groups(groups, config.topk);
  }
  if (selected.empty()) return report;

  report.updates.resize(selected.size());
  std::map<AgentId, std::vector<std::size_t>> by_agent;  // positions in `selected`
  for (std::size_t s = 0; s < selected.size(); ++s) {
    const auto& group = groups[selected[s]];
    if (group.rewards.size() != group.size()) {
      throw Error("group at node " + std::to_string(group.node_index) + " is not scored");
    }
    auto& update = report.updates[s];
    update.node_index = group.node_index;
    update.agent = group.agent;
    update.variance = population_variance(group.rewards);
    update.advantages = compute_advantages(group.rewards, config.std_floor).advantages;
    by_agent[group.agent].push_back(s);
  }

  std::vector<AgentId> builtin;
  for (auto& [agent, positions] : by_agent) {
    const auto* spec = agents.find(agent);
    if (spec == nullptr || spec->policy == nullptr) {
      throw PolicyError("no policy for agent '" + agent + "'");
    }
    if (spec->policy->is_builtin()) {
      builtin.push_back(agent);
      continue;
    }
    // node order within an agent
    std::sort(positions.begin(), positions.end(), [&](std::size_t a, std::size_t b) {
      return report.updates[a].node_index < report.updates[b].node_index;
    });
    for (auto s : positions) {
      const auto& group = groups[selected[s]];
      auto& update = report.updates[s];
      update.emitted = true;
      const auto context = group.observation.render();
      for (std::size_t j = 0; j < group.size(); ++j) {
        report.batch.push_back({agent, context,
                                serialize_structured_output(group.action(j)),
                                update.advantages[j], group.old_logprobs[j],
                                config.clip_eps, step});
      }
    }
  }

  // Agents own disjoint parameter vectors, so their updates run concurrently.
  std::vector<std::exception_ptr> failures(builtin.size());
  const auto count = static_cast<std::int64_t>(builtin.size());
#pragma omp parallel for schedule(dynamic) if (config.parallel)
  for (std::int64_t a = 0; a < count; ++a) {
    try {
      const auto& agent = builtin[static_cast<std::size_t>(a)];
      auto& policy = *agents.find(agent)->policy;
      auto positions = by_agent.at(agent);
      std::sort(positions.begin(), positions.end(), [&](std::size_t x, std::size_t y) {
        return report.updates[x].node_index < report.updates[y].node_index;
      });
      for (auto s : positions) {
        const auto& group = groups[selected[s]];
        auto& update = report.updates[s];
        update.objective_before = group_objective(policy, group, update.advantages,
                                                  config.clip_eps, config.temperature);
        for (int epoch = 0; epoch < config.grpo_epochs; ++epoch) {
          const auto gradient = objective_gradient(policy, group, update.advantages,
                                                   config.clip_eps, config.temperature);
          apply_update(policy, gradient, config.learning_rate, config.max_grad_norm);
        }
        update.objective_after = group_objective(policy, group, update.advantages,
                                                 config.clip_eps, config.temperature);
      }
    } catch (...) {
      failures[static_cast<std::size_t>(a)] = std::current_exception();
    }
  }
  for (const auto& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }

  if (!report.batch.empty() && !batch_dir.empty()) {
    std::filesystem::create_directories(batch_dir);
    report.batch_file =
        (std::filesystem::path(batch_dir) / ("step_" + std::to_string(step) + ".jsonl"))
            .string();
    std::ofstream out(report.batch_file, std::ios::trunc);
    if (!out) throw Error("cannot write batch file " + report.batch_file);
    for (const auto& record : report.batch) out << to_json(record).dump() << '\n';
    if (!out) throw Error("failed writing batch file " + report.batch_file);
  }
  return report;
}

}  // namespace jointrl
