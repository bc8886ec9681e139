// SPDX-License-Identifier: Apache-2.0
#include "jointrl/core_model.hpp"

#include <array>
#include <fstream>
#include <optional>
#include <regex>

#include "jointrl/text.hpp"

namespace jointrl {

namespace {

struct TagToken {
  std::string_view text;
  SegmentTag tag;
  bool closing;
};

constexpr std::array<TagToken, 6> kTagTokens{{
    {"<think>", SegmentTag::kThink, false},
    {"</think>", SegmentTag::kThink, true},
    {"<tool_call>", SegmentTag::kToolCall, false},
    {"</tool_call>", SegmentTag::kToolCall, true},
    {"<answer>", SegmentTag::kAnswer, false},
    {"</answer>", SegmentTag::kAnswer, true},
}};

std::optional<TagToken> match_tag(std::string_view text, std::size_t pos) {
  for (const auto& token : kTagTokens) {
    if (text.substr(pos, token.text.size()) == token.text) return token;
  }
  return std::nullopt;
}

bool contains_tag(std::string_view text) {
  for (const auto& token : kTagTokens) {
    if (text.find(token.text) != std::string_view::npos) return true;
  }
  return false;
}

}  // namespace

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::kMath:
      return "math";
    case TaskKind::kQa:
      return "qa";
    case TaskKind::kFunctionCall:
      return "function-call";
    case TaskKind::kCooperative:
      return "cooperative";
  }
  return "math";
}

TaskKind task_kind_from_string(std::string_view text) {
  if (text == "math") return TaskKind::kMath;
  if (text == "qa") return TaskKind::kQa;
  if (text == "function-call") return TaskKind::kFunctionCall;
  if (text == "cooperative") return TaskKind::kCooperative;
  throw DataError("unknown task kind '" + std::string(text) + "'");
}

std::string_view to_string(SegmentTag tag) {
  switch (tag) {
    case SegmentTag::kThink:
      return "think";
    case SegmentTag::kToolCall:
      return "tool_call";
    case SegmentTag::kAnswer:
      return "answer";
  }
  return "answer";
}

SegmentTag segment_tag_from_string(std::string_view text) {
  if (text == "think") return SegmentTag::kThink;
  if (text == "tool_call") return SegmentTag::kToolCall;
  if (text == "answer") return SegmentTag::kAnswer;
  throw DataError("unknown segment tag '" + std::string(text) + "'");
}

bool StructuredOutput::has(SegmentTag tag) const {
  return last(tag) != nullptr;
}

const Segment* StructuredOutput::last(SegmentTag tag) const {
  for (auto it = segments.rbegin(); it != segments.rend(); ++it) {
    if (it->tag == tag) return &*it;
  }
  return nullptr;
}

StructuredOutput parse_structured_output(std::string_view text) {
  StructuredOutput out;
  bool open = false;
  SegmentTag open_tag = SegmentTag::kAnswer;
  std::string body;
  std::string loose;

  auto flush_loose = [&] {
    auto trimmed = trim(loose);
    if (!trimmed.empty()) {
      out.segments.push_back({SegmentTag::kAnswer, std::string(trimmed)});
    }
    loose.clear();
  };

  std::size_t pos = 0;
  while (pos < text.size()) {
    auto token = text[pos] == '<' ? match_tag(text, pos) : std::nullopt;
    if (!token) {
      (open ? body : loose).push_back(text[pos]);
      ++pos;
      continue;
    }
    pos += token->text.size();
    if (!token->closing) {
      if (open) {
        // nested open tag: close the current segment best-effort
        out.well_formed = false;
        out.segments.push_back({open_tag, body});
      } else {
        flush_loose();
      }
      open = true;
      open_tag = token->tag;
      body.clear();
    } else if (open && open_tag == token->tag) {
      out.segments.push_back({open_tag, body});
      open = false;
      body.clear();
    } else {
      out.well_formed = false;
    }
  }
  if (open) {
    out.well_formed = false;
    out.segments.push_back({open_tag, body});
  }
  flush_loose();

  int answers = 0;
  for (const auto& segment : out.segments) {
    if (segment.tag == SegmentTag::kAnswer) ++answers;
  }
  if (answers > 1 ||
      (answers == 1 && out.segments.back().tag != SegmentTag::kAnswer)) {
    out.well_formed = false;
  }
  return out;
}

std::string serialize_structured_output(const StructuredOutput& output) {
  std::string text;
  for (const auto& segment : output.segments) {
    const bool bare = segment.tag == SegmentTag::kAnswer &&
                      !segment.body.empty() &&
                      trim(segment.body) == segment.body &&
                      !contains_tag(segment.body);
    if (bare) {
      text += segment.body;
      continue;
    }
    const auto name = to_string(segment.tag);
    text += "<";
    text += name;
    text += ">";
    text += segment.body;
    text += "</";
    text += name;
    text += ">";
  }
  return text;
}

std::string tool_call_name(std::string_view body) {
  auto parsed = nlohmann::json::parse(body, nullptr, false);
  if (!parsed.is_discarded() && parsed.is_object() && parsed.contains("name") &&
      parsed["name"].is_string()) {
    return parsed["name"].get<std::string>();
  }
  static const std::regex name_field(R"re("name"\s*:\s*"([^"]*)")re");
  std::match_results<std::string_view::const_iterator> match;
  if (std::regex_search(body.begin(), body.end(), match, name_field)) {
    return match[1].str();
  }
  static const std::regex identifier(R"(\s*([A-Za-z_][A-Za-z0-9_]*)\s*)");
  if (std::regex_match(body.begin(), body.end(), match, identifier)) {
    return match[1].str();
  }
  return {};
}

std::string_view to_string(Termination termination) {
  switch (termination) {
    case Termination::kAnswered:
      return "answered";
    case Termination::kMaxSteps:
      return "max_steps";
    case Termination::kError:
      return "error";
  }
  return "error";
}

Termination termination_from_string(std::string_view text) {
  if (text == "answered") return Termination::kAnswered;
  if (text == "max_steps") return Termination::kMaxSteps;
  if (text == "error") return Termination::kError;
  throw DataError("unknown termination '" + std::string(text) + "'");
}

bool same_nodes(const Trajectory& a, const Trajectory& b) {
  return a.nodes == b.nodes && a.final_answer == b.final_answer &&
         a.terminated == b.terminated;
}

std::vector<std::string> validate_trajectory(const Trajectory& trajectory) {
  std::vector<std::string> violations;
  if (trajectory.nodes.empty()) violations.emplace_back("empty trajectory");
  for (std::size_t n = 0; n < trajectory.nodes.size(); ++n) {
    const auto& node = trajectory.nodes[n];
    if (node.index != static_cast<int>(n) + 1) {
      violations.emplace_back("non-consecutive node index");
      break;
    }
  }
  for (const auto& node : trajectory.nodes) {
    if (!(node.action_logprob <= 0.0)) {
      violations.emplace_back("positive action logprob");
      break;
    }
  }
  const bool answered = trajectory.terminated == Termination::kAnswered;
  if (answered && trajectory.final_answer.empty()) {
    violations.emplace_back("missing final answer");
  }
  if (!answered && !trajectory.final_answer.empty()) {
    violations.emplace_back("final answer without answered termination");
  }
  if (trajectory.task == nullptr) violations.emplace_back("missing task");
  return violations;
}

std::string_view to_string(AgentRole role) {
  switch (role) {
    case AgentRole::kMaster:
      return "master";
    case AgentRole::kQa:
      return "qa";
    case AgentRole::kFunctionCallDomain:
      return "function_call_domain";
    case AgentRole::kFunctionCallGeneral:
      return "function_call_general";
    case AgentRole::kMath:
      return "math";
  }
  return "master";
}

nlohmann::json to_json(const TaskInstance& task) {
  nlohmann::json record{{"id", task.id},
                        {"kind", std::string(to_string(task.kind))},
                        {"query", task.query},
                        {"answer", task.answer}};
  if (!task.metadata.empty()) record["metadata"] = task.metadata;
  return record;
}

TaskInstance task_from_json(const nlohmann::json& record) {
  TaskInstance task;
  try {
    task.id = record.at("id").is_string()
                  ? record.at("id").get<std::string>()
                  : record.at("id").dump();
    task.kind = task_kind_from_string(record.at("kind").get<std::string>());
    task.query = record.at("query").get<std::string>();
    task.answer = record.at("answer").get<std::string>();
    if (record.contains("metadata")) {
      for (const auto& [key, value] : record["metadata"].items()) {
        task.metadata[key] =
            value.is_string() ? value.get<std::string>() : value.dump();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed task record: ") + e.what());
  }
  if (task.query.empty() || task.answer.empty()) {
    throw DataError("task '" + task.id + "' has an empty query or answer");
  }
  return task;
}

nlohmann::json to_json(const Trajectory& trajectory) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& node : trajectory.nodes) {
    nlohmann::json segments = nlohmann::json::array();
    for (const auto& segment : node.action.segments) {
      segments.push_back(
          {{"tag", std::string(to_string(segment.tag))}, {"body", segment.body}});
    }
    nodes.push_back({{"j", node.index},
                     {"agent", node.agent},
                     {"action_segments", segments},
                     {"logprob", node.action_logprob},
                     {"timestamp", node.timestamp}});
  }
  return {{"task_id", trajectory.task ? trajectory.task->id : std::string()},
          {"nodes", nodes},
          {"final_answer", trajectory.final_answer},
          {"terminated", std::string(to_string(trajectory.terminated))}};
}

Trajectory trajectory_from_json(const nlohmann::json& record,
                                std::shared_ptr<const TaskInstance> task) {
  try {
    Trajectory trajectory;
    if (!task) {
      auto stub = std::make_shared<TaskInstance>();
      stub->id = record.at("task_id").get<std::string>();
      task = std::move(stub);
    }
    trajectory.task = std::move(task);
    for (const auto& item : record.at("nodes")) {
      TrajectoryNode node;
      node.index = item.at("j").get<int>();
      node.agent = item.at("agent").get<std::string>();
      for (const auto& segment : item.at("action_segments")) {
        node.action.segments.push_back(
            {segment_tag_from_string(segment.at("tag").get<std::string>()),
             segment.at("body").get<std::string>()});
      }
      node.action_logprob = item.at("logprob").get<double>();
      node.timestamp = item.at("timestamp").get<std::int64_t>();
      trajectory.nodes.push_back(std::move(node));
    }
    trajectory.final_answer = record.at("final_answer").get<std::string>();
    trajectory.terminated = termination_from_string(record.at("terminated").get<std::string>());
    return trajectory;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed trace record: ") + e.what());
  }
}

void save_traces(const std::string& path, const std::vector<Trajectory>& trajectories) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write traces '" + path + "'");
  for (const auto& trajectory : trajectories) out << to_json(trajectory).dump() << '\n';
}

std::vector<Trajectory> load_traces(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open traces '" + path + "'");
  std::vector<Trajectory> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto record = nlohmann::json::parse(line, nullptr, false);
    if (record.is_discarded()) throw DataError("invalid JSON in traces '" + path + "'");
    out.push_back(trajectory_from_json(record));
  }
  return out;
}

std::vector<TaskInstance> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset '" + path + "'");
  std::vector<TaskInstance> tasks;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    auto record = nlohmann::json::parse(line, nullptr, false);
    if (record.is_discarded()) {
      throw DataError(path + ":" + std::to_string(line_number) +
                      ": invalid JSON record");
    }
    tasks.push_back(task_from_json(record));
  }
  return tasks;
}

void save_dataset(const std::string& path,
                  const std::vector<TaskInstance>& tasks) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write dataset '" + path + "'");
  for (const auto& task : tasks) out << to_json(task).dump() << '\n';
}

}  // namespace jointrl
