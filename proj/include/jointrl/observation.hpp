// SPDX-License-Identifier: Apache-2.0
#ifndef JOINTRL_OBSERVATION_HPP_
#define JOINTRL_OBSERVATION_HPP_

#include <string>
#include <vector>

#include "jointrl/core_model.hpp"
#include "jointrl/memory.hpp"

namespace jointrl {

// One entry of an agent's action support. `key` identifies the action for the
// builtin policy's features; `target` is the logical choice (agent, tool or
// "answer") that memory hints are compared against.
struct Candidate {
  std::string key;
  std::string target;
  StructuredOutput action;
  // Free-text keywords describing the target; empty for answers.
  std::string description;

  bool operator==(const Candidate&) const = default;
};

struct Observation {
  AgentId agent;
  std::string query;
  // Text handed over by the master when this agent is a sub-agent.
  std::string intention;
  // Prior node actions and tool responses, oldest first.
  std::vector<std::string> history;
  std::vector<MemoryEntry> recalled;
  // Next-step suggestions derived from the recalled plans.
  std::vector<std::string> memory_hints;
  std::vector<Candidate> candidates;
  std::vector<std::string> tools;
  int stage = 0;  // sub-agent invocations completed so far
  std::string last_agent;

  // Plain concatenation handed to remote policies and stored on the node:
  //   query: <query>
  //   intention: <intention>          (sub-agents only)
  //   tools: a, b, c
  //   memory: <json record>           (one line per recalled entry)
  //   history: <line>                 (one line per history entry)
  std::string render() const;
};

}  // namespace jointrl

#endif  // JOINTRL_OBSERVATION_HPP_
