// SPDX-License-Identifier: Apache-2.0
#include "jointrl/orchestrator.hpp"

#include <algorithm>
#include <optional>

#include "jointrl/text.hpp"

namespace jointrl {

std::string Observation::render() const {
  std::string out = "query: " + query + "\n";
  if (!intention.empty()) out += "intention: " + intention + "\n";
  if (!tools.empty()) {
    out += "tools: ";
    for (std::size_t i = 0; i < tools.size(); ++i) {
      if (i) out += ", ";
      out += tools[i];
    }
    out += "\n";
  }
  for (const auto& entry : recalled) {
    out += "memory: " +
           nlohmann::json{{"ID", entry.id},
                          {"Query", entry.query},
                          {"Plan", entry.plan},
                          {"Answer", entry.output},
                          {"Time", entry.time},
                          {"Score", entry.score}}
               .dump() +
           "\n";
  }
  for (const auto& line : history) out += "history: " + line + "\n";
  return out;
}

void Environment::add_tool(const std::string& name, ToolFunction tool,
                           std::string description) {
  tools_[name] = std::move(tool);
  tool_descriptions_[name] = std::move(description);
}

std::string Environment::tool_description(const std::string& name) const {
  auto it = tool_descriptions_.find(name);
  return it == tool_descriptions_.end() ? std::string() : it->second;
}

bool Environment::has_tool(const std::string& name) const {
  return tools_.count(name) > 0;
}

std::string Environment::call_tool(const std::string& name,
                                   const nlohmann::json& arguments) const {
  auto it = tools_.find(name);
  if (it == tools_.end()) return "error: unknown tool '" + name + "'";
  ++tool_calls_;
  return it->second(arguments);
}

void Environment::add_sub_agent(SubAgentInfo info, ToolFunction scripted) {
  scripted_[info.id] = std::move(scripted);
  sub_agents_.push_back(std::move(info));
}

const SubAgentInfo* Environment::sub_agent(const std::string& id) const {
  for (const auto& info : sub_agents_) {
    if (info.id == id) return &info;
  }
  return nullptr;
}

std::string Environment::call_scripted_agent(const std::string& id,
                                             const nlohmann::json& arguments) const {
  auto it = scripted_.find(id);
  if (it == scripted_.end()) return "error: unknown agent '" + id + "'";
  ++tool_calls_;
  return it->second(arguments);
}

void Environment::set_task_generator(std::vector<TaskKind> kinds,
                                     TaskGenerator generator) {
  kinds_ = std::move(kinds);
  generator_ = std::move(generator);
}

TaskInstance Environment::generate_task(TaskKind kind, std::uint64_t seed) const {
  if (!generator_ ||
      std::find(kinds_.begin(), kinds_.end(), kind) == kinds_.end()) {
    throw Error("environment '" + id_ + "' does not support task kind '" +
                std::string(to_string(kind)) + "'");
  }
  return generator_(kind, seed);
}

std::vector<TaskInstance> Environment::generate_dataset(std::size_t count,
                                                        std::uint64_t seed) const {
  std::vector<TaskInstance> tasks;
  tasks.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (schedule_) {
      auto [kind, task_seed] = schedule_(i, seed);
      tasks.push_back(generate_task(kind, task_seed));
    } else {
      tasks.push_back(generate_task(kinds_.at(i % kinds_.size()), mix_seed(seed, i)));
    }
  }
  return tasks;
}

void AgentSystem::add(AgentSpec spec) {
  if (find(spec.id) != nullptr) {
    throw ConfigError("duplicate agent '" + spec.id + "'");
  }
  agents_.push_back(std::move(spec));
}

const AgentSpec* AgentSystem::find(const AgentId& id) const {
  for (const auto& spec : agents_) {
    if (spec.id == id) return &spec;
  }
  return nullptr;
}

const AgentSpec& AgentSystem::master() const {
  for (const auto& spec : agents_) {
    if (spec.role == AgentRole::kMaster) return spec;
  }
  throw ConfigError("agent system has no master agent");
}

void AgentSystem::validate() const {
  const auto masters = std::count_if(agents_.begin(), agents_.end(), [](const AgentSpec& s) {
    return s.role == AgentRole::kMaster;
  });
  if (masters != 1) {
    throw ConfigError("agent system needs exactly one master, found " +
                      std::to_string(masters));
  }
  for (const auto& spec : agents_) {
    if (spec.policy == nullptr) {
      throw ConfigError("agent '" + spec.id + "' has no policy");
    }
  }
}

namespace {

constexpr std::string_view kAnswerTarget = "answer";

nlohmann::json tool_arguments(const Segment& call) {
  auto parsed = nlohmann::json::parse(call.body, nullptr, false);
  if (!parsed.is_discarded() && parsed.is_object() && parsed.contains("arguments") &&
      parsed["arguments"].is_object()) {
    return parsed["arguments"];
  }
  return nlohmann::json::object();
}

StructuredOutput make_call(const std::string& thought, const std::string& name,
                           const std::string& intention) {
  nlohmann::json body{{"name", name},
                      {"arguments", {{"intention", intention}}}};
  return StructuredOutput{{{SegmentTag::kThink, thought},
                           {SegmentTag::kToolCall, body.dump()}},
                          true};
}

class EpisodeRunner {
 public:
  EpisodeRunner(std::shared_ptr<const TaskInstance> task,
                const AgentSystem& agents, const MemorySnapshot& memory,
                const Environment& env, const EpisodeConfig& config)
      : agents_(agents), memory_(memory), env_(env), config_(config) {
    if (task == nullptr) throw Error("episode needs a task");
    if (config.max_steps < 1) throw ConfigError("max_steps must be >= 1");
    master_ = agents.master().id;
    trajectory_.task = std::move(task);
  }

  bool finished() const { return finished_; }
  bool at_step_cap() const {
    return trajectory_.length() >= config_.max_steps;
  }

  AgentId acting() const { return pending_ ? pending_->first : master_; }
  int next_index() const { return trajectory_.length() + 1; }

  Observation observe() const {
    const auto agent = acting();
    Observation obs;
    obs.agent = agent;
    obs.query = trajectory_.task->query;
    obs.history = history_;
    obs.stage = stage_;
    obs.last_agent = last_agent_;
    if (auto it = memory_.find(agent); it != memory_.end()) obs.recalled = it->second;
    if (agent == master_) {
      const std::string intention =
          last_response_.empty() ? obs.query : last_response_ + " ; " + obs.query;
      for (const auto& info : env_.sub_agents()) {
        obs.tools.push_back(info.id);
        obs.candidates.push_back({"call:" + info.id, info.id,
                                  make_call("route the request to " + info.id,
                                            info.id, intention),
                                  info.description});
      }
      if (!last_response_.empty()) {
        obs.candidates.push_back(
            {"answer", std::string(kAnswerTarget),
             StructuredOutput{{{SegmentTag::kThink,
                                "the latest response resolves the query"},
                               {SegmentTag::kAnswer, last_response_}},
                              true},
             {}});
        obs.candidates.push_back(
            {"answer_bare", std::string(kAnswerTarget),
             StructuredOutput{{{SegmentTag::kAnswer, last_response_}}, true},
             {}});
      }
    } else {
      obs.intention = pending_->second;
      if (const auto* info = env_.sub_agent(agent)) {
        for (const auto& tool : info->tools) {
          obs.tools.push_back(tool);
          obs.candidates.push_back(
              {"tool:" + tool, tool, make_call("use " + tool, tool, obs.intention),
               env_.tool_description(tool)});
        }
      }
    }
    obs.memory_hints = hints(agent, obs.recalled);
    return obs;
  }

  void apply(const Observation& obs, const SampledAction& sample) {
    TrajectoryNode node;
    node.index = trajectory_.length() + 1;
    node.agent = obs.agent;
    node.observation = obs.render();
    node.action = sample.action;
    node.action_logprob = sample.logprob;
    node.timestamp = config_.start_time + node.index - 1;
    node.response = transition(node.agent, node.action);
    trajectory_.nodes.push_back(std::move(node));
  }

  void replay(const TrajectoryNode& node) {
    transition(node.agent, node.action);
    trajectory_.nodes.push_back(node);
  }

  void fail() {
    finished_ = true;
    trajectory_.terminated = Termination::kError;
    trajectory_.final_answer.clear();
  }

  Trajectory finish() {
    if (!finished_) {
      trajectory_.terminated = Termination::kMaxSteps;
      trajectory_.final_answer.clear();
    }
    return std::move(trajectory_);
  }

 private:
  // Next-step suggestions from the best recalled plan.
  std::vector<std::string> hints(const AgentId& agent,
                                 const std::vector<MemoryEntry>& recalled) const {
    if (recalled.empty()) return {};
    const auto& plan = recalled.front().plan;
    if (agent == master_) {
      int seen = 0;
      for (const auto& id : plan) {
        if (env_.sub_agent(id) == nullptr) continue;
        if (seen++ == stage_) return {id};
      }
      return {std::string(kAnswerTarget)};
    }
    const auto occurrence = std::count(plan_.begin(), plan_.end(), agent) - 1;
    long seen = 0;
    for (std::size_t i = 0; i < plan.size(); ++i) {
      if (plan[i] != agent) continue;
      if (seen++ == occurrence && i + 1 < plan.size() &&
          env_.sub_agent(plan[i + 1]) == nullptr) {
        return {plan[i + 1]};
      }
    }
    return {};
  }

  std::string transition(const AgentId& agent, const StructuredOutput& action) {
    if (agent == master_) return master_transition(action);
    return sub_agent_transition(agent, action);
  }

  std::string master_transition(const StructuredOutput& action) {
    if (const auto* call = action.last(SegmentTag::kToolCall)) {
      const auto name = tool_call_name(call->body);
      auto arguments = tool_arguments(*call);
      if (!arguments.contains("intention")) arguments["intention"] = trajectory_.task->query;
      if (env_.sub_agent(name) == nullptr) {
        const auto response = "error: unknown tool '" + name + "'";
        history_.push_back("master: " + response);
        return response;
      }
      plan_.push_back(name);
      const auto intention = arguments["intention"].is_string()
                                 ? arguments["intention"].get<std::string>()
                                 : arguments["intention"].dump();
      if (agents_.find(name) != nullptr) {
        pending_ = std::make_pair(name, intention);
        history_.push_back("master -> " + name + ": " + intention);
        return {};
      }
      const auto response = env_.call_scripted_agent(name, arguments);
      record_response(name, response);
      return response;
    }
    if (const auto* answer = action.last(SegmentTag::kAnswer)) {
      const auto text = std::string(trim(answer->body));
      finished_ = true;
      if (text.empty()) {
        trajectory_.terminated = Termination::kError;
      } else {
        trajectory_.terminated = Termination::kAnswered;
        trajectory_.final_answer = text;
      }
      return {};
    }
    history_.push_back("master: no action");
    return "error: no action";
  }

  std::string sub_agent_transition(const AgentId& agent,
                                   const StructuredOutput& action) {
    const auto intention = pending_ ? pending_->second : trajectory_.task->query;
    pending_.reset();
    std::string response;
    if (const auto* call = action.last(SegmentTag::kToolCall)) {
      const auto name = tool_call_name(call->body);
      const auto* info = env_.sub_agent(agent);
      const bool allowed =
          info != nullptr &&
          std::find(info->tools.begin(), info->tools.end(), name) != info->tools.end();
      if (allowed && env_.has_tool(name)) {
        auto arguments = tool_arguments(*call);
        if (!arguments.contains("intention")) arguments["intention"] = intention;
        plan_.push_back(name);
        response = env_.call_tool(name, arguments);
      } else {
        response = "error: unknown tool '" + name + "'";
      }
    } else if (const auto* answer = action.last(SegmentTag::kAnswer)) {
      response = std::string(trim(answer->body));
    } else {
      response = "error: no action";
    }
    record_response(agent, response);
    return response;
  }

  void record_response(const AgentId& agent, const std::string& response) {
    ++stage_;
    last_agent_ = agent;
    last_response_ = response;
    history_.push_back(agent + ": " + response);
  }

  const AgentSystem& agents_;
  const MemorySnapshot& memory_;
  const Environment& env_;
  const EpisodeConfig& config_;
  AgentId master_;
  Trajectory trajectory_;
  std::vector<std::string> history_;
  std::vector<std::string> plan_;
  std::optional<std::pair<AgentId, std::string>> pending_;
  std::string last_agent_;
  std::string last_response_;
  int stage_ = 0;
  bool finished_ = false;
};

SampledAction choose(const AgentSpec& spec, const Observation& obs,
                     const EpisodeConfig& config, std::uint64_t seed, int node) {
  if (config.greedy) return greedy_action(*spec.policy, obs);
  return sample_actions(*spec.policy, obs, 1, config.temperature,
                        mix_seed(seed, static_cast<std::uint64_t>(node)))
      .front();
}

void run_to_end(EpisodeRunner& runner, const AgentSystem& agents,
                const EpisodeConfig& config, std::uint64_t seed) {
  while (!runner.finished() && !runner.at_step_cap()) {
    const auto obs = runner.observe();
    const auto* spec = agents.find(obs.agent);
    try {
      if (spec == nullptr) throw PolicyError("no policy for agent '" + obs.agent + "'");
      runner.apply(obs, choose(*spec, obs, config, seed, runner.next_index()));
    } catch (const Error&) {
      // policy or transport failure ends the episode; it is scored, not hidden
      runner.fail();
    }
  }
}

}  // namespace

Trajectory run_episode(std::shared_ptr<const TaskInstance> task,
                       const AgentSystem& agents, const MemorySnapshot& memory,
                       const Environment& env, const EpisodeConfig& config,
                       std::uint64_t seed) {
  EpisodeRunner runner(std::move(task), agents, memory, env, config);
  env.note_episode_start();
  run_to_end(runner, agents, config, seed);
  return runner.finish();
}

Observation observation_at(const Trajectory& trajectory, int node_index,
                           const AgentSystem& agents,
                           const MemorySnapshot& memory, const Environment& env,
                           const EpisodeConfig& config) {
  if (node_index < 1 || node_index > trajectory.length()) {
    throw Error("node index " + std::to_string(node_index) + " outside trajectory");
  }
  EpisodeRunner runner(trajectory.task, agents, memory, env, config);
  for (int j = 1; j < node_index; ++j) runner.replay(trajectory.nodes[j - 1]);
  return runner.observe();
}

Trajectory run_branch(const Trajectory& initial, int node_index,
                      const SampledAction& forced, const AgentSystem& agents,
                      const MemorySnapshot& memory, const Environment& env,
                      const EpisodeConfig& config, std::uint64_t seed) {
  if (node_index < 1 || node_index > initial.length()) {
    throw Error("branch node " + std::to_string(node_index) + " outside trajectory");
  }
  EpisodeRunner runner(initial.task, agents, memory, env, config);
  env.note_episode_start();
  for (int j = 1; j < node_index; ++j) runner.replay(initial.nodes[j - 1]);
  runner.apply(runner.observe(), forced);
  run_to_end(runner, agents, config, seed);
  return runner.finish();
}

std::vector<std::string> trajectory_plan(const Trajectory& trajectory,
                                         const Environment& env) {
  std::vector<std::string> plan;
  for (const auto& node : trajectory.nodes) {
    const auto* call = node.action.last(SegmentTag::kToolCall);
    if (call == nullptr) continue;
    const auto name = tool_call_name(call->body);
    const auto* acting = env.sub_agent(node.agent);
    if (acting == nullptr) {
      if (env.sub_agent(name) != nullptr) plan.push_back(name);
    } else if (env.has_tool(name) &&
               std::find(acting->tools.begin(), acting->tools.end(), name) !=
                   acting->tools.end()) {
      plan.push_back(name);
    }
  }
  return plan;
}

}  // namespace jointrl
