// SPDX-License-Identifier: Apache-2.0
#ifndef JOINTRL_CORE_MODEL_HPP_
#define JOINTRL_CORE_MODEL_HPP_

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace jointrl {

using AgentId = std::string;

// Error categories surfaced by the CLI as distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

enum class TaskKind { kMath, kQa, kFunctionCall, kCooperative };

std::string_view to_string(TaskKind kind);
TaskKind task_kind_from_string(std::string_view text);

struct TaskInstance {
  std::string id;
  TaskKind kind = TaskKind::kMath;
  std::string query;
  std::string answer;
  std::map<std::string, std::string> metadata;

  bool operator==(const TaskInstance&) const = default;
};

enum class SegmentTag { kThink, kToolCall, kAnswer };

std::string_view to_string(SegmentTag tag);
SegmentTag segment_tag_from_string(std::string_view text);

struct Segment {
  SegmentTag tag = SegmentTag::kAnswer;
  std::string body;

  bool operator==(const Segment&) const = default;
};

struct StructuredOutput {
  std::vector<Segment> segments;
  bool well_formed = true;

  bool has(SegmentTag tag) const;
  // Body of the last segment with `tag`, or nullptr.
  const Segment* last(SegmentTag tag) const;

  bool operator==(const StructuredOutput&) const = default;
};

// Total: never throws, malformed tagging yields well_formed == false.
StructuredOutput parse_structured_output(std::string_view text);

// Inverse of parse_structured_output for well-formed outputs.
std::string serialize_structured_output(const StructuredOutput& output);

// Name field of a tool_call body ({"name": ..., "arguments": ...}); empty when
// the body carries no recognisable name.
std::string tool_call_name(std::string_view body);

struct TrajectoryNode {
  int index = 1;
  AgentId agent;
  std::string observation;
  StructuredOutput action;
  double action_logprob = 0.0;
  std::int64_t timestamp = 0;
  // Text returned to the master after this node (tool or sub-agent output).
  std::string response;

  bool operator==(const TrajectoryNode&) const = default;
};

enum class Termination { kAnswered, kMaxSteps, kError };

std::string_view to_string(Termination termination);
Termination termination_from_string(std::string_view text);

struct Trajectory {
  std::shared_ptr<const TaskInstance> task;
  std::vector<TrajectoryNode> nodes;
  std::string final_answer;
  Termination terminated = Termination::kError;

  int length() const { return static_cast<int>(nodes.size()); }
};

bool same_nodes(const Trajectory& a, const Trajectory& b);

std::vector<std::string> validate_trajectory(const Trajectory& trajectory);

enum class AgentRole {
  kMaster,
  kQa,
  kFunctionCallDomain,
  kFunctionCallGeneral,
  kMath
};

std::string_view to_string(AgentRole role);

// Serialization used by the trace, dataset and batch formats.
nlohmann::json to_json(const TaskInstance& task);
TaskInstance task_from_json(const nlohmann::json& record);
nlohmann::json to_json(const Trajectory& trajectory);
// Trace records carry no observation or response text; those come back empty.
// Without `task` a stub holding only the task id is attached.
Trajectory trajectory_from_json(const nlohmann::json& record,
                                std::shared_ptr<const TaskInstance> task = nullptr);
void save_traces(const std::string& path, const std::vector<Trajectory>& trajectories);
std::vector<Trajectory> load_traces(const std::string& path);

std::vector<TaskInstance> load_dataset(const std::string& path);
void save_dataset(const std::string& path,
                  const std::vector<TaskInstance>& tasks);

}  // namespace jointrl

#endif  // JOINTRL_CORE_MODEL_HPP_
