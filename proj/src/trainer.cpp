// SPDX-License-Identifier: Apache-2.0
#include "jointrl/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <filesystem>
#include <fstream>
#include <set>

#include "jointrl/text.hpp"

namespace jointrl {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kEvalSalt = 0xe5a1;

bool contains(const std::vector<std::string>& items, const std::string& item) {
  return std::find(items.begin(), items.end(), item) != items.end();
}

std::vector<AgentId> participants(const Trajectory& trajectory) {
  std::vector<AgentId> out;
  for (const auto& node : trajectory.nodes) {
    if (!contains(out, node.agent)) out.push_back(node.agent);
  }
  return out;
}

nlohmann::json optional_json(const std::optional<double>& value) {
  return value ? nlohmann::json(*value) : nlohmann::json(nullptr);
}

void write_json_file(const fs::path& path, const nlohmann::json& value) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << value.dump(2) << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  auto value = nlohmann::json::parse(in, nullptr, false);
  if (value.is_discarded()) throw DataError("invalid JSON in " + path.string());
  return value;
}

}  // namespace

AgentSystem build_agents(const RunConfig& config, const Environment& env) {
  const auto remote = split_list(config.remote_agents);
  const auto scripted = split_list(config.scripted_agents);
  for (const auto& id : remote) {
    if (id != kMasterId && env.sub_agent(id) == nullptr) {
      throw ConfigError("remote_agents names unknown agent '" + id + "'");
    }
  }
  for (const auto& id : scripted) {
    if (env.sub_agent(id) == nullptr) {
      throw ConfigError("scripted_agents names unknown agent '" + id + "'");
    }
  }
  std::shared_ptr<const RemotePolicyClient> client;
  if (!remote.empty()) {
    client = std::make_shared<const RemotePolicyClient>(
        HttpTransport::from_url(config.remote_endpoint));
  }
  const auto dim = static_cast<std::size_t>(config.feature_dim);
  auto make_policy = [&](const AgentId& id) {
    return std::make_shared<PolicyHandle>(contains(remote, id)
                                              ? PolicyHandle::remote_policy(id, client)
                                              : PolicyHandle::builtin(id, dim));
  };

  AgentSystem agents;
  agents.add({kMasterId, AgentRole::kMaster, make_policy(kMasterId), {}});
  for (const auto& info : env.sub_agents()) {
    if (contains(scripted, info.id)) continue;
    agents.add({info.id, info.role, make_policy(info.id),
                std::set<std::string>(info.tools.begin(), info.tools.end())});
  }
  agents.validate();
  return agents;
}

RewardOptions reward_options(const RunConfig& config, const Environment& env) {
  RewardOptions options;
  options.use_efficiency = config.efficiency_reward;
  options.answer_checker = env.answer_checker;
  return options;
}

nlohmann::json to_json(const EvalResult& result) {
  return {{"per_kind_accuracy", result.per_kind_accuracy},
          {"accuracy", result.accuracy},
          {"avg_reasoning_rounds", result.avg_reasoning_rounds},
          {"tasks", result.tasks}};
}

Trainer::Trainer(RunConfig config, std::shared_ptr<Environment> env)
    : config_(std::move(config)),
      env_(env ? std::move(env) : make_environment(config_.environment)) {
  config_.validate();
  agents_ = build_agents(config_, *env_);
  for (const auto& spec : agents_.agents()) memory_.emplace(spec.id, MemoryStore(spec.id));
}

Trainer::Trainer(RunConfig config, std::shared_ptr<Environment> env, AgentSystem agents)
    : config_(std::move(config)), env_(std::move(env)), agents_(std::move(agents)) {
  if (env_ == nullptr) throw ConfigError("trainer needs an environment");
  config_.validate();
  agents_.validate();
  for (const auto& spec : agents_.agents()) memory_.emplace(spec.id, MemoryStore(spec.id));
}

MemorySnapshot Trainer::snapshot(const std::string& query) const {
  MemorySnapshot out;
  const auto n = static_cast<std::size_t>(config_.recall_n);
  for (const auto& [agent, store] : memory_) {
    auto recalled = recall(store, query, n);
    if (!recalled.empty()) out.emplace(agent, std::move(recalled));
  }
  return out;
}

StepOutcome Trainer::train_step(const TaskInstance& task, MetricsStream* metrics) {
  StepOutcome out;
  const auto t = ++step_;
  out.step = t;
  const auto step_seed = mix_seed(static_cast<std::uint64_t>(config_.seed),
                                  static_cast<std::uint64_t>(t));
  const auto task_ptr = std::make_shared<const TaskInstance>(task);
  const auto recalled = snapshot(task.query);
  auto episode = config_.episode();
  episode.start_time = t;
  const auto options = reward_options(config_, *env_);

  const auto episodes_before = env_->episodes_started();
  out.initial = initial_rollout(task_ptr, agents_, recalled, *env_, episode,
                                mix_seed(step_seed, 0));
  const int k = out.initial.length();
  if (k > 0) {
    const std::vector<int> budgets(static_cast<std::size_t>(k),
                                   static_cast<int>(config_.num_groups));
    auto sampled = node_wise_sample(out.initial, budgets, agents_, recalled, *env_,
                                    episode, mix_seed(step_seed, 1), config_.parallel);
    out.groups = std::move(sampled.groups);
    out.stats = sampled.stats;
    score_groups(out.groups, task, options, config_.parallel);
  } else {
    out.stats.distinct_rollouts = 1;
    out.stats.naive_bound = 1.0;
  }
  out.episodes = env_->episodes_started() - episodes_before;

  // Memory evolution. Bounds pool every group membership; each distinct
  // rollout then updates the stores of the agents that acted in it.
  std::vector<double> member_rewards;
  std::vector<std::pair<const Trajectory*, double>> distinct;
  if (out.groups.empty()) {
    auto no_penalty = options;
    no_penalty.use_efficiency = false;
    const auto breakdown = score_rollout(out.initial, 1, task, no_penalty);
    member_rewards.push_back(breakdown.memory);
    distinct.emplace_back(&out.initial, breakdown.memory);
  } else {
    distinct.emplace_back(&out.groups.front().rollouts.front(),
                          out.groups.front().breakdowns.front().memory);
    for (const auto& group : out.groups) {
      for (std::size_t j = 0; j < group.size(); ++j) {
        member_rewards.push_back(group.breakdowns[j].memory);
        if (j > 0) distinct.emplace_back(&group.rollouts[j], group.breakdowns[j].memory);
      }
    }
  }
  out.bounds = compute_bounds(member_rewards);
  const auto memory_config = config_.memory();
  std::map<AgentId, MemoryAudit> audits;
  for (const auto& [agent, store] : memory_) audits[agent].agent = agent;
  for (const auto& [rollout, reward] : distinct) {
    MemoryUpdate update;
    update.query = task.query;
    update.plan = trajectory_plan(*rollout, *env_);
    update.output = rollout->final_answer;
    update.reward = reward;
    update.mode = update.plan.empty() ? SimilarityMode::kDirectAnswer
                                      : SimilarityMode::kToolCall;
    for (const auto& agent : participants(*rollout)) {
      auto store = memory_.find(agent);
      if (store == memory_.end()) continue;
      static const std::vector<MemoryEntry> kNone;
      const auto it = recalled.find(agent);
      const auto& entries = it == recalled.end() ? kNone : it->second;
      const auto report = update_memory(store->second, update, entries, t, out.bounds,
                                        memory_config);
      if (report.inserted) ++audits[agent].inserted;
      if (reward > out.bounds.upper) ++audits[agent].expected_inserted;
    }
  }
  for (auto& [agent, store] : memory_) {
    std::vector<MemoryId> ids;
    if (const auto it = recalled.find(agent); it != recalled.end()) {
      for (const auto& entry : it->second) ids.push_back(entry.id);
    }
    decay_others(store, ids, t, memory_config.alpha);
    evict(store, memory_config.deletion_threshold, memory_config.capacity);
    auto& audit = audits[agent];
    audit.size = store.size();
    audit.min_score = store.min_score();
    out.audits.push_back(audit);
  }
  ++memory_passes_;

  out.update = grpo_step(out.groups, agents_, config_.grpo(), t, batch_dir_);
  ++grpo_steps_;

  if (metrics == nullptr) return out;

  std::vector<double> variances;
  double reward_sum = 0.0;
  double reward_min = 0.0;
  double reward_max = 0.0;
  std::size_t reward_count = 0;
  for (const auto& group : out.groups) {
    const double variance = population_variance(group.rewards);
    variances.push_back(variance);
    metrics->write({{"type", "group"},
                    {"step", t},
                    {"task_id", task.id},
                    {"node_index", group.node_index},
                    {"agent", group.agent},
                    {"member_count", group.size()},
                    {"rewards", group.rewards},
                    {"variance", variance}});
    for (std::size_t j = 0; j < group.size(); ++j) {
      const auto& b = group.breakdowns[j];
      metrics->write({{"type", "reward"},
                      {"step", t},
                      {"task_id", task.id},
                      {"node_index", group.node_index},
                      {"member", j},
                      {"R_A", b.accuracy},
                      {"R_F", b.format},
                      {"R_E", b.efficiency},
                      {"R", b.total},
                      {"R_M", b.memory}});
      reward_min = reward_count == 0 ? b.total : std::min(reward_min, b.total);
      reward_max = reward_count == 0 ? b.total : std::max(reward_max, b.total);
      reward_sum += b.total;
      ++reward_count;
    }
  }
  nlohmann::json memory_sizes = nlohmann::json::object();
  for (const auto& audit : out.audits) {
    memory_sizes[audit.agent] = audit.size;
    metrics->write({{"type", "memory"},
                    {"step", t},
                    {"agent", audit.agent},
                    {"size", audit.size},
                    {"min_score", optional_json(audit.min_score)},
                    {"capacity", memory_config.capacity},
                    {"deletion_threshold", memory_config.deletion_threshold},
                    {"bounds",
                     {{"mean", out.bounds.mean},
                      {"stddev", out.bounds.stddev},
                      {"lower", out.bounds.lower},
                      {"upper", out.bounds.upper}}},
                    {"inserted", audit.inserted},
                    {"expected_inserted", audit.expected_inserted}});
  }
  nlohmann::json step{{"type", "step"},
                      {"step", t},
                      {"task_id", task.id},
                      {"kind", to_string(task.kind)},
                      {"k", k},
                      {"reasoning_rounds", k},
                      {"accuracy", accuracy_reward(out.initial, task)},
                      {"terminated", to_string(out.initial.terminated)},
                      {"variances", variances},
                      {"selected", out.update.selected_nodes()},
                      {"reward_mean", reward_count ? reward_sum / reward_count : 0.0},
                      {"reward_min", reward_min},
                      {"reward_max", reward_max},
                      {"fresh_rollouts", out.stats.fresh_rollouts},
                      {"memberships", out.stats.memberships},
                      {"distinct_rollouts", out.stats.distinct_rollouts},
                      {"episodes", out.episodes},
                      {"memory_sizes", memory_sizes}};
  if (!out.update.batch_file.empty()) step["batch_file"] = out.update.batch_file;
  metrics->write(std::move(step));
  return out;
}

EvalResult Trainer::evaluate(const std::vector<TaskInstance>& tasks) const {
  EvalResult result;
  result.tasks = tasks.size();
  if (tasks.empty()) return result;
  auto episode = config_.episode();
  episode.start_time = step_;
  episode.greedy = config_.eval_temperature == 0.0;
  if (!episode.greedy) episode.temperature = config_.eval_temperature;
  auto options = reward_options(config_, *env_);
  options.use_efficiency = false;  // only R_A is reported
  const auto base_seed = mix_seed(static_cast<std::uint64_t>(config_.seed), kEvalSalt);

  std::vector<double> accuracy(tasks.size(), 0.0);
  std::vector<int> rounds(tasks.size(), 0);
  result.trajectories.resize(tasks.size());
  std::vector<std::exception_ptr> failures(tasks.size());
  const auto total = static_cast<std::int64_t>(tasks.size());
#pragma omp parallel for schedule(dynamic) if (config_.parallel)
  for (std::int64_t n = 0; n < total; ++n) {
    const auto i = static_cast<std::size_t>(n);
    try {
      const auto recalled = snapshot(tasks[i].query);
      auto& trajectory = result.trajectories[i];
      trajectory =
          run_episode(std::make_shared<const TaskInstance>(tasks[i]), agents_, recalled,
                      *env_, episode, mix_seed(base_seed, i));
      accuracy[i] = score_rollout(trajectory, 1, tasks[i], options).accuracy;
      rounds[i] = trajectory.length();
    } catch (...) {
      failures[i] = std::current_exception();
    }
  }
  for (const auto& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }

  std::map<std::string, std::pair<double, std::size_t>> per_kind;
  double correct = 0.0;
  double round_sum = 0.0;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    auto& slot = per_kind[std::string(to_string(tasks[i].kind))];
    slot.first += accuracy[i];
    ++slot.second;
    correct += accuracy[i];
    round_sum += rounds[i];
  }
  for (const auto& [kind, slot] : per_kind) {
    result.per_kind_accuracy[kind] = slot.first / static_cast<double>(slot.second);
  }
  result.accuracy = correct / static_cast<double>(tasks.size());
  result.avg_reasoning_rounds = round_sum / static_cast<double>(tasks.size());
  return result;
}

TrainResult Trainer::train(const std::vector<TaskInstance>& dataset,
                           const std::vector<TaskInstance>& eval_set,
                           MetricsStream& metrics, const std::string& out_dir) {
  if (dataset.empty()) throw DataError("training dataset is empty");
  const auto started = std::chrono::steady_clock::now();
  TrainResult result;
  nlohmann::json agent_ids = nlohmann::json::array();
  for (const auto& spec : agents_.agents()) agent_ids.push_back(spec.id);
  metrics.write({{"type", "config"},
                 {"config", to_json(config_)},
                 {"agents", agent_ids},
                 {"dataset_size", dataset.size()},
                 {"eval_size", eval_set.size()}});

  std::int64_t seen = 0;
  auto emit_eval = [&](bool final) {
    auto eval = evaluate(eval_set);
    auto record = to_json(eval);
    record["type"] = "eval";
    record["step"] = step_;
    record["tasks_seen"] = seen;
    record["final"] = final;
    metrics.write(std::move(record));
    result.evals.push_back(std::move(eval));
    result.eval_tasks_seen.push_back(seen);
  };

  for (std::int64_t iteration = 1; iteration <= config_.iterations; ++iteration) {
    for (std::int64_t epoch = 1; epoch <= config_.num_train_epochs; ++epoch) {
      for (const auto& task : dataset) {
        train_step(task, &metrics);
        ++seen;
        if (config_.eval_every > 0 && seen % config_.eval_every == 0) emit_eval(false);
      }
      if (!out_dir.empty()) {
        save_checkpoint((fs::path(out_dir) / "checkpoint").string(), iteration, epoch);
      }
    }
    metrics.write({{"type", "iteration"}, {"iteration", iteration}, {"step", step_}});
  }
  emit_eval(true);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  metrics.write({{"type", "run_end"}, {"step", step_}, {"wall_time", wall}});
  result.summary = summarize(metrics.records());
  return result;
}

void Trainer::save_checkpoint(const std::string& dir, std::int64_t iteration,
                              std::int64_t epoch) const {
  const fs::path target(dir);
  const fs::path staging = target.string() + ".tmp";
  fs::remove_all(staging);
  fs::create_directories(staging / "policies");
  fs::create_directories(staging / "memory");
  for (const auto& spec : agents_.agents()) {
    if (spec.policy->is_builtin()) {
      write_json_file(staging / "policies" / (spec.id + ".json"), to_json(*spec.policy));
    }
  }
  for (const auto& [agent, store] : memory_) {
    save_memory(store, (staging / "memory" / (agent + ".jsonl")).string());
  }
  nlohmann::json next_ids = nlohmann::json::object();
  for (const auto& [agent, store] : memory_) next_ids[agent] = store.next_id();
  write_json_file(staging / "cursor.json", {{"iteration", iteration},
                                            {"epoch", epoch},
                                            {"step", step_},
                                            {"memory_next_id", next_ids}});
  // the previous checkpoint stays intact until the new one is complete
  fs::remove_all(target);
  fs::rename(staging, target);
}

void Trainer::load_checkpoint(const std::string& dir) {
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw DataError("checkpoint '" + dir + "' not found");
  for (const auto& spec : agents_.agents()) {
    const auto policy_path = root / "policies" / (spec.id + ".json");
    if (spec.policy->is_builtin() && fs::exists(policy_path)) {
      load_parameters(*spec.policy, read_json_file(policy_path));
    }
    const auto memory_path = root / "memory" / (spec.id + ".jsonl");
    if (fs::exists(memory_path)) {
      memory_[spec.id] = load_memory(memory_path.string(), spec.id);
    }
  }
  if (fs::exists(root / "cursor.json")) {
    const auto cursor = read_json_file(root / "cursor.json");
    step_ = cursor.at("step").get<std::int64_t>();
    if (cursor.contains("memory_next_id")) {
      for (const auto& [agent, next] : cursor.at("memory_next_id").items()) {
        auto it = memory_.find(agent);
        if (it != memory_.end()) it->second.reserve_ids_below(next.get<MemoryId>());
      }
    }
  }
}

}  // namespace jointrl
