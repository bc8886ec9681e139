// SPDX-License-Identifier: Apache-2.0
#include "jointrl/policy.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <limits>
#include <random>

#include "jointrl/text.hpp"

namespace jointrl {

namespace {

constexpr std::string_view kMemoryHintFeature = "mem_hint";
constexpr std::string_view kDescMatchFeature = "desc_match";

bool is_number_token(const std::string& token) {
  return !token.empty() && std::all_of(token.begin(), token.end(), [](char c) {
    return std::isdigit(static_cast<unsigned char>(c));
  });
}

void require_builtin(const PolicyHandle& policy, std::string_view what) {
  if (!policy.is_builtin()) {
    throw PolicyError(std::string(what) + " is unsupported for remote policy '" +
                      policy.agent_id + "'");
  }
}

constexpr std::array<std::string_view, 14> kStopWords{
    "a", "an", "and", "for", "i", "in", "is", "me", "my", "of", "on", "the", "to", "with"};

// Distinct words shared by the query and the candidate's name or description.
int description_overlap(const Candidate& candidate,
                        const std::vector<std::string>& query_tokens) {
  std::string name = candidate.target;
  std::replace(name.begin(), name.end(), '_', ' ');
  std::vector<std::string> seen;
  int count = 0;
  for (const auto& token : feature_tokens(name + " " + candidate.description)) {
    if (is_number_token(token) ||
        std::find(kStopWords.begin(), kStopWords.end(), token) != kStopWords.end() ||
        std::find(seen.begin(), seen.end(), token) != seen.end()) {
      continue;
    }
    seen.push_back(token);
    if (std::find(query_tokens.begin(), query_tokens.end(), token) !=
        query_tokens.end()) {
      ++count;
    }
  }
  return count;
}

std::string decision_context(const Observation& obs) {
  return "stage:" + std::to_string(std::min(obs.stage, 4)) + "|last:" +
         (obs.last_agent.empty() ? std::string("none") : obs.last_agent);
}

std::vector<std::size_t> slots_for(const std::vector<std::string>& features,
                                   const Observation& obs,
                                   const Candidate& candidate, std::size_t dim) {
  std::vector<std::size_t> slots;
  slots.reserve(features.size() + 4);
  for (const auto& feature : features) {
    slots.push_back(feature_slot(feature, candidate.key, dim));
  }
  // shared across candidates within a decision context
  const int overlap = description_overlap(candidate, feature_tokens(obs.query));
  if (overlap > 0) {
    const auto slot =
        feature_slot(decision_context(obs) + "&" + std::string(kDescMatchFeature), "", dim);
    slots.insert(slots.end(), static_cast<std::size_t>(overlap), slot);
  }
  if (std::find(obs.memory_hints.begin(), obs.memory_hints.end(),
                candidate.target) != obs.memory_hints.end()) {
    slots.push_back(feature_slot(kMemoryHintFeature, "", dim));
  }
  return slots;
}

std::size_t find_candidate(const Observation& obs,
                           const StructuredOutput& action) {
  for (std::size_t i = 0; i < obs.candidates.size(); ++i) {
    if (obs.candidates[i].action == action) return i;
  }
  throw PolicyError("action outside the support of agent '" + obs.agent + "'");
}

}  // namespace

PolicyHandle PolicyHandle::builtin(AgentId agent, std::size_t dim) {
  if (dim == 0) throw ConfigError("feature_dim must be positive");
  PolicyHandle policy;
  policy.agent_id = std::move(agent);
  policy.backend = PolicyBackend::kBuiltinSoftmax;
  policy.parameters.assign(dim, 0.0);
  return policy;
}

PolicyHandle PolicyHandle::remote_policy(
    AgentId agent, std::shared_ptr<const RemotePolicyClient> client) {
  PolicyHandle policy;
  policy.agent_id = std::move(agent);
  policy.backend = PolicyBackend::kRemote;
  policy.remote = std::move(client);
  return policy;
}

std::vector<std::string> observation_features(const Observation& obs) {
  // Query words are conjoined with the decision context so that learning a
  // later decision (answer vs. call again) leaves the routing decision alone.
  const std::string context = decision_context(obs);
  std::vector<std::string> features;
  std::vector<std::string> seen;
  for (auto token : feature_tokens(obs.query)) {
    if (is_number_token(token)) token = "#";
    if (std::find(seen.begin(), seen.end(), token) != seen.end()) continue;
    seen.push_back(token);
    features.push_back(context + "&q:" + token);
  }
  return features;
}

std::size_t feature_slot(std::string_view feature, std::string_view key,
                         std::size_t dim) {
  std::string joined;
  joined.reserve(feature.size() + key.size() + 1);
  joined.append(feature);
  joined.push_back('\x1f');
  joined.append(key);
  return static_cast<std::size_t>(fnv1a(joined) % dim);
}

std::vector<std::size_t> candidate_features(const Observation& obs,
                                            const Candidate& candidate,
                                            std::size_t dim) {
  return slots_for(observation_features(obs), obs, candidate, dim);
}

std::vector<double> ActionDistribution::log_probabilities() const {
  std::vector<double> scaled(logits.size());
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logits.size(); ++i) {
    scaled[i] = logits[i] / temperature;
    peak = std::max(peak, scaled[i]);
  }
  double total = 0.0;
  for (double z : scaled) total += std::exp(z - peak);
  const double normaliser = peak + std::log(total);
  for (double& z : scaled) z -= normaliser;
  return scaled;
}

std::vector<double> ActionDistribution::probabilities() const {
  auto out = log_probabilities();
  for (double& p : out) p = std::exp(p);
  return out;
}

ActionDistribution action_distribution(const PolicyHandle& policy,
                                       const Observation& obs,
                                       double temperature) {
  require_builtin(policy, "action_distribution");
  if (!(temperature > 0.0)) throw PolicyError("temperature must be positive");
  if (obs.candidates.empty()) {
    throw PolicyError("agent '" + obs.agent + "' has an empty action support");
  }
  const auto features = observation_features(obs);
  const auto dim = policy.parameters.size();
  ActionDistribution dist;
  dist.support = obs.candidates;
  dist.temperature = temperature;
  dist.logits.reserve(obs.candidates.size());
  for (const auto& candidate : obs.candidates) {
    double logit = 0.0;
    for (auto slot : slots_for(features, obs, candidate, dim)) {
      logit += policy.parameters[slot];
    }
    dist.logits.push_back(logit);
  }
  return dist;
}

std::vector<SampledAction> sample_actions(const PolicyHandle& policy,
                                          const Observation& obs, int n,
                                          double temperature,
                                          std::uint64_t seed) {
  if (n < 1) throw PolicyError("sample_actions needs n >= 1");
  std::vector<SampledAction> out;
  out.reserve(static_cast<std::size_t>(n));

  if (!policy.is_builtin()) {
    for (auto& candidate : remote_request(policy, obs, n, temperature, seed)) {
      SampledAction sample;
      sample.action = parse_structured_output(candidate.text);
      sample.text = std::move(candidate.text);
      sample.logprob = candidate.logprob;
      out.push_back(std::move(sample));
    }
    return out;
  }

  const auto dist = action_distribution(policy, obs, temperature);
  const auto logps = dist.log_probabilities();
  std::mt19937_64 rng(seed);
  for (int draw = 0; draw < n; ++draw) {
    const double u = unit_interval(rng());
    double cumulative = 0.0;
    std::size_t chosen = logps.size() - 1;
    for (std::size_t i = 0; i < logps.size(); ++i) {
      cumulative += std::exp(logps[i]);
      if (u < cumulative) {
        chosen = i;
        break;
      }
    }
    const auto& candidate = dist.support[chosen];
    out.push_back({candidate.action, serialize_structured_output(candidate.action),
                   candidate.key, logps[chosen]});
  }
  return out;
}

SampledAction greedy_action(const PolicyHandle& policy, const Observation& obs) {
  if (!policy.is_builtin()) {
    auto samples = sample_actions(policy, obs, 1, 0.0, 0);
    return samples.front();
  }
  const auto dist = action_distribution(policy, obs, 1.0);
  const auto best = static_cast<std::size_t>(
      std::max_element(dist.logits.begin(), dist.logits.end()) -
      dist.logits.begin());
  const auto& candidate = dist.support[best];
  return {candidate.action, serialize_structured_output(candidate.action),
          candidate.key, 0.0};
}

double log_prob(const PolicyHandle& policy, const Observation& obs,
                const StructuredOutput& action, double temperature) {
  require_builtin(policy, "log_prob");
  const auto index = find_candidate(obs, action);
  return action_distribution(policy, obs, temperature).log_probabilities()[index];
}

void accumulate_log_prob_gradient(const PolicyHandle& policy,
                                  const Observation& obs,
                                  const StructuredOutput& action,
                                  double temperature, double scale,
                                  std::span<double> gradient) {
  require_builtin(policy, "gradient");
  if (gradient.size() != policy.parameters.size()) {
    throw PolicyError("gradient dimension mismatch");
  }
  const auto index = find_candidate(obs, action);
  const auto dist = action_distribution(policy, obs, temperature);
  const auto probs = dist.probabilities();
  const auto features = observation_features(obs);
  const auto dim = policy.parameters.size();
  // d log p_a / d theta = (phi_a - sum_b p_b phi_b) / T
  const double factor = scale / temperature;
  for (std::size_t b = 0; b < dist.support.size(); ++b) {
    const double weight = ((b == index) ? 1.0 : 0.0) - probs[b];
    if (weight == 0.0) continue;
    for (auto slot : slots_for(features, obs, dist.support[b], dim)) {
      gradient[slot] += factor * weight;
    }
  }
}

UpdateStats apply_update(PolicyHandle& policy, std::span<const double> gradient,
                         double learning_rate, double max_grad_norm) {
  if (!policy.is_builtin()) {
    throw PolicyError("remote policies update via emitted batches");
  }
  if (gradient.size() != policy.parameters.size()) {
    throw PolicyError("gradient dimension " + std::to_string(gradient.size()) +
                      " does not match parameters " +
                      std::to_string(policy.parameters.size()));
  }
  if (!(learning_rate > 0.0)) throw PolicyError("learning rate must be positive");
  double squares = 0.0;
  for (double g : gradient) squares += g * g;
  UpdateStats stats;
  stats.raw_norm = std::sqrt(squares);
  if (!std::isfinite(stats.raw_norm)) throw PolicyError("non-finite gradient");
  double scale = 1.0;
  if (max_grad_norm > 0.0 && stats.raw_norm > max_grad_norm) {
    scale = max_grad_norm / stats.raw_norm;
  }
  stats.applied_norm = stats.raw_norm * scale;
  const double step = learning_rate * scale;
  for (std::size_t i = 0; i < gradient.size(); ++i) {
    policy.parameters[i] += step * gradient[i];
  }
  ++policy.version;
  return stats;
}

void set_weight(PolicyHandle& policy, std::string_view feature,
                std::string_view key, double value) {
  require_builtin(policy, "set_weight");
  policy.parameters[feature_slot(feature, key, policy.parameters.size())] = value;
}

std::vector<RemoteCandidate> remote_request(const PolicyHandle& policy,
                                            const Observation& obs, int n,
                                            double temperature,
                                            std::optional<std::uint64_t> seed) {
  if (policy.is_builtin() || policy.remote == nullptr) {
    throw PolicyError("agent '" + policy.agent_id + "' has no remote endpoint");
  }
  RemoteRequest request{policy.agent_id, obs.render(), n, temperature, seed};
  return policy.remote->request(request);
}

nlohmann::json to_json(const PolicyHandle& policy) {
  nlohmann::json indices = nlohmann::json::array();
  nlohmann::json values = nlohmann::json::array();
  for (std::size_t i = 0; i < policy.parameters.size(); ++i) {
    if (policy.parameters[i] != 0.0) {
      indices.push_back(i);
      values.push_back(policy.parameters[i]);
    }
  }
  return {{"agent_id", policy.agent_id},
          {"backend", policy.is_builtin() ? "builtin_softmax" : "remote"},
          {"version", policy.version},
          {"dim", policy.parameters.size()},
          {"indices", indices},
          {"values", values}};
}

void load_parameters(PolicyHandle& policy, const nlohmann::json& record) {
  require_builtin(policy, "load_parameters");
  try {
    const auto dim = record.at("dim").get<std::size_t>();
    if (dim == 0) throw DataError("policy checkpoint has zero dimension");
    policy.parameters.assign(dim, 0.0);
    const auto& indices = record.at("indices");
    const auto& values = record.at("values");
    if (indices.size() != values.size()) {
      throw DataError("policy checkpoint index/value length mismatch");
    }
    for (std::size_t i = 0; i < indices.size(); ++i) {
      const auto slot = indices[i].get<std::size_t>();
      if (slot >= dim) throw DataError("policy checkpoint slot out of range");
      policy.parameters[slot] = values[i].get<double>();
    }
    policy.version = record.at("version").get<std::int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed policy checkpoint: ") + e.what());
  }
}

}  // namespace jointrl
