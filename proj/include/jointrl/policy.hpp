// SPDX-License-Identifier: Apache-2.0
#ifndef JOINTRL_POLICY_HPP_
#define JOINTRL_POLICY_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "jointrl/core_model.hpp"
#include "jointrl/observation.hpp"
#include "jointrl/remote.hpp"

namespace jointrl {

// Semantic misuse of a policy (action outside support, wrong backend).
class PolicyError : public Error {
 public:
  using Error::Error;
};

enum class PolicyBackend { kBuiltinSoftmax, kRemote };

inline constexpr std::size_t kDefaultFeatureDim = std::size_t{1} << 14;

// Builtin policies are a hashed linear softmax: the logit of candidate a is
// the sum of parameters at slot(f, a.key) over observation features f, plus a
// shared "mem_hint" slot when a.target matches a memory hint, plus a
// context-wide "desc_match" slot once per query word found in a's name or
// description.
struct PolicyHandle {
  AgentId agent_id;
  PolicyBackend backend = PolicyBackend::kBuiltinSoftmax;
  std::vector<double> parameters;
  std::int64_t version = 0;
  std::shared_ptr<const RemotePolicyClient> remote;

  static PolicyHandle builtin(AgentId agent, std::size_t dim = kDefaultFeatureDim);
  static PolicyHandle remote_policy(AgentId agent,
                                    std::shared_ptr<const RemotePolicyClient> client);

  bool is_builtin() const { return backend == PolicyBackend::kBuiltinSoftmax; }
};

// pi_old for one GRPO step.
using PolicySnapshot = std::shared_ptr<const PolicyHandle>;

inline PolicySnapshot freeze(const PolicyHandle& policy) {
  return std::make_shared<const PolicyHandle>(policy);
}

struct AgentSpec {
  AgentId id;
  AgentRole role = AgentRole::kMaster;
  std::shared_ptr<PolicyHandle> policy;
  std::set<std::string> tool_names;
};

std::vector<std::string> observation_features(const Observation& obs);
std::size_t feature_slot(std::string_view feature, std::string_view key,
                         std::size_t dim);
// Parameter slots active for one candidate, with multiplicity.
std::vector<std::size_t> candidate_features(const Observation& obs,
                                            const Candidate& candidate,
                                            std::size_t dim);

struct ActionDistribution {
  std::vector<Candidate> support;
  std::vector<double> logits;
  double temperature = 1.0;

  std::vector<double> log_probabilities() const;
  std::vector<double> probabilities() const;
};

ActionDistribution action_distribution(const PolicyHandle& policy,
                                       const Observation& obs,
                                       double temperature);

struct SampledAction {
  StructuredOutput action;
  std::string text;
  std::string key;  // empty for remote samples
  double logprob = 0.0;
};

std::vector<SampledAction> sample_actions(const PolicyHandle& policy,
                                          const Observation& obs, int n,
                                          double temperature,
                                          std::uint64_t seed);

// Argmax with first-candidate tie-break; logprob is 0 (deterministic policy).
SampledAction greedy_action(const PolicyHandle& policy, const Observation& obs);

double log_prob(const PolicyHandle& policy, const Observation& obs,
                const StructuredOutput& action, double temperature);

// gradient += scale * d/dtheta log pi(action | obs).
void accumulate_log_prob_gradient(const PolicyHandle& policy,
                                  const Observation& obs,
                                  const StructuredOutput& action,
                                  double temperature, double scale,
                                  std::span<double> gradient);

struct UpdateStats {
  double raw_norm = 0.0;
  double applied_norm = 0.0;
};

// Gradient ascent with global-norm clipping. max_grad_norm <= 0 disables it.
UpdateStats apply_update(PolicyHandle& policy, std::span<const double> gradient,
                         double learning_rate, double max_grad_norm);

void set_weight(PolicyHandle& policy, std::string_view feature,
                std::string_view key, double value);

std::vector<RemoteCandidate> remote_request(const PolicyHandle& policy,
                                            const Observation& obs, int n,
                                            double temperature,
                                            std::optional<std::uint64_t> seed);

nlohmann::json to_json(const PolicyHandle& policy);
void load_parameters(PolicyHandle& policy, const nlohmann::json& record);

}  // namespace jointrl

#endif  // JOINTRL_POLICY_HPP_
