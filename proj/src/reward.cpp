// SPDX-License-Identifier: Apache-2.0
#include "jointrl/reward.hpp"

#include <cstdint>

#include "jointrl/text.hpp"

namespace jointrl {

double similarity(std::string_view a, std::string_view b) { return token_f1(a, b); }

std::string predicted_function_name(std::string_view final_answer) {
  auto text = trim(final_answer);
  if (const auto colon = text.find(':'); colon != std::string_view::npos) {
    text = trim(text.substr(0, colon));
  }
  return to_lower(text);
}

double accuracy_reward(const Trajectory& trajectory, const TaskInstance& task) {
  if (trajectory.terminated != Termination::kAnswered) return 0.0;
  const auto& answer = trajectory.final_answer;
  switch (task.kind) {
    case TaskKind::kMath: {
      const auto got = parse_number(trim(answer));
      const auto want = parse_number(trim(task.answer));
      if (got && want) return *got == *want ? 1.0 : 0.0;
      return trim(answer) == trim(task.answer) ? 1.0 : 0.0;
    }
    case TaskKind::kFunctionCall:
      return predicted_function_name(answer) == predicted_function_name(task.answer)
                 ? 1.0
                 : 0.0;
    case TaskKind::kQa:
    case TaskKind::kCooperative:
      return similarity(answer, task.answer) >= kSimilarityThreshold ? 1.0 : 0.0;
  }
  return 0.0;
}

double node_format_score(const StructuredOutput& output) {
  if (!output.well_formed) return 0.0;
  const bool acts = output.has(SegmentTag::kToolCall) || output.has(SegmentTag::kAnswer);
  if (output.has(SegmentTag::kThink) && acts) return 1.0;
  return 0.5;
}

double format_reward(const Trajectory& trajectory) {
  if (trajectory.nodes.empty()) return 0.0;
  double total = 0.0;
  for (const auto& node : trajectory.nodes) total += node_format_score(node.action);
  return total / static_cast<double>(trajectory.nodes.size());
}

double efficiency_reward(int j, int k) {
  if (k < 1 || j < 1 || j > k) {
    throw Error("efficiency reward needs 1 <= j <= k, got j=" + std::to_string(j) +
                " k=" + std::to_string(k));
  }
  return static_cast<double>(k - j) / static_cast<double>(k);
}

RewardBreakdown score_rollout(const Trajectory& rollout, int node_index,
                              const TaskInstance& task, const RewardOptions& options) {
  RewardBreakdown out;
  if (options.answer_checker) {
    out.accuracy = rollout.terminated == Termination::kAnswered
                       ? options.answer_checker(rollout.final_answer, task)
                       : 0.0;
  } else {
    out.accuracy = accuracy_reward(rollout, task);
  }
  out.format = format_reward(rollout);
  if (options.use_efficiency) out.efficiency = efficiency_reward(node_index, rollout.length());
  out.memory = out.accuracy + out.format;
  out.total = out.accuracy + out.format - out.efficiency;
  return out;
}

void score_group(SamplingGroup& group, const TaskInstance& task,
                 const RewardOptions& options) {
  group.breakdowns.resize(group.rollouts.size());
  group.rewards.resize(group.rollouts.size());
  for (std::size_t j = 0; j < group.rollouts.size(); ++j) {
    group.breakdowns[j] = score_rollout(group.rollouts[j], group.node_index, task, options);
    group.rewards[j] = group.breakdowns[j].total;
  }
}

void score_groups(std::vector<SamplingGroup>& groups, const TaskInstance& task,
                  const RewardOptions& options, bool parallel) {
  std::vector<std::pair<std::size_t, std::size_t>> members;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    groups[g].breakdowns.resize(groups[g].rollouts.size());
    groups[g].rewards.resize(groups[g].rollouts.size());
    for (std::size_t j = 0; j < groups[g].rollouts.size(); ++j) members.emplace_back(g, j);
  }
  const auto total = static_cast<std::int64_t>(members.size());
#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t n = 0; n < total; ++n) {
    const auto [g, j] = members[static_cast<std::size_t>(n)];
    auto& group = groups[g];
    group.breakdowns[j] = score_rollout(group.rollouts[j], group.node_index, task, options);
    group.rewards[j] = group.breakdowns[j].total;
  }
}

}  // namespace jointrl
