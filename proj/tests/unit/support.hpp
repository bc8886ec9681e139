// SPDX-License-Identifier: Apache-2.0
// Shared fixtures for the unit tests.
#ifndef JOINTRL_TESTS_SUPPORT_HPP_
#define JOINTRL_TESTS_SUPPORT_HPP_

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "jointrl/orchestrator.hpp"
#include "jointrl/policy.hpp"
#include "jointrl/trainer.hpp"

namespace testing_support {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("jointrl_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

// Feature active for the toy observation below.
inline constexpr const char* kToyFeature = "stage:0|last:none&q:x";

// n answer candidates k0..k(n-1) under the single feature kToyFeature.
inline jointrl::Observation toy_observation(int n) {
  jointrl::Observation obs;
  obs.agent = "toy";
  obs.query = "x";
  for (int i = 0; i < n; ++i) {
    const auto id = std::to_string(i);
    obs.candidates.push_back(
        {"k" + id, "t" + id,
         jointrl::StructuredOutput{{{jointrl::SegmentTag::kAnswer, "o" + id}}, true},
         {}});
  }
  return obs;
}

inline void set_logits(jointrl::PolicyHandle& policy, const std::vector<double>& logits) {
  for (std::size_t i = 0; i < logits.size(); ++i) {
    jointrl::set_weight(policy, kToyFeature, "k" + std::to_string(i), logits[i]);
  }
}

inline std::string call_text(const std::string& name) {
  return "<think>use " + name + "</think><tool_call>{\"name\":\"" + name + "\"}</tool_call>";
}

// Config whose sub-agents all run their scripted oracles.
inline jointrl::RunConfig scripted_config(const std::string& env = "routing") {
  jointrl::RunConfig config;
  config.environment = env;
  config.scripted_agents = env == "cooperative"
                               ? "domain_agent,general_agent,math_agent"
                               : "qa_agent,domain_agent,general_agent,math_agent";
  config.learning_rate = 0.01;
  return config;
}

// Master whose greedy choice routes `query` to `agent` and then answers.
inline void route_then_answer(jointrl::PolicyHandle& master, const std::string& first_word,
                              const std::string& agent) {
  jointrl::set_weight(master, "stage:0|last:none&q:" + first_word, "call:" + agent, 10.0);
  jointrl::set_weight(master, "stage:1|last:" + agent + "&q:" + first_word, "answer", 10.0);
}

// Policy client that answers every request through `handler` in-process.
inline std::shared_ptr<const jointrl::RemotePolicyClient> loopback_client(
    jointrl::RequestHandler handler) {
  auto transport = std::make_shared<jointrl::LoopbackTransport>(
      [handler = std::move(handler)](const std::string& body) {
        return jointrl::handle_request(handler, body);
      });
  return std::make_shared<const jointrl::RemotePolicyClient>(transport);
}

// Master-only system whose master is served by `client`.
inline jointrl::AgentSystem remote_master_system(
    std::shared_ptr<const jointrl::RemotePolicyClient> client) {
  jointrl::AgentSystem agents;
  agents.add({jointrl::kMasterId, jointrl::AgentRole::kMaster,
              std::make_shared<jointrl::PolicyHandle>(
                  jointrl::PolicyHandle::remote_policy(jointrl::kMasterId, std::move(client))),
              {}});
  return agents;
}

inline std::shared_ptr<const jointrl::TaskInstance> shared_task(jointrl::TaskInstance task) {
  return std::make_shared<const jointrl::TaskInstance>(std::move(task));
}

}  // namespace testing_support

#endif  // JOINTRL_TESTS_SUPPORT_HPP_
