// SPDX-License-Identifier: Apache-2.0
#ifndef JOINTRL_REWARD_HPP_
#define JOINTRL_REWARD_HPP_

#include <functional>
#include <string>
#include <vector>

#include "jointrl/sampler.hpp"

namespace jointrl {

// Token-level F1 after lowercasing and punctuation stripping.
double similarity(std::string_view a, std::string_view b);

inline constexpr double kSimilarityThreshold = 0.6;

// Function name carried by a final answer ("apply_refund: done" -> "apply_refund").
std::string predicted_function_name(std::string_view final_answer);

double accuracy_reward(const Trajectory& trajectory, const TaskInstance& task);
double format_reward(const Trajectory& trajectory);
double node_format_score(const StructuredOutput& output);
// (k - j) / k; throws unless 1 <= j <= k.
double efficiency_reward(int j, int k);

struct RewardOptions {
  bool use_efficiency = true;
  // Replaces the per-kind accuracy rule when set.
  std::function<double(const std::string& final_answer, const TaskInstance&)>
      answer_checker;
};

RewardBreakdown score_rollout(const Trajectory& rollout, int node_index,
                              const TaskInstance& task, const RewardOptions& options);

void score_group(SamplingGroup& group, const TaskInstance& task,
                 const RewardOptions& options = {});

// Scores every member of every group; parallel and serial results match.
void score_groups(std::vector<SamplingGroup>& groups, const TaskInstance& task,
                  const RewardOptions& options = {}, bool parallel = true);

}  // namespace jointrl

#endif  // JOINTRL_REWARD_HPP_
