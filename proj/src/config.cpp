// SPDX-License-Identifier: Apache-2.0
#include "jointrl/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <variant>

#include "jointrl/orchestrator.hpp"
#include "jointrl/text.hpp"

namespace jointrl {

namespace {

using Member = std::variant<double RunConfig::*, std::int64_t RunConfig::*,
                            bool RunConfig::*, std::string RunConfig::*>;

struct Field {
  const char* name;
  Member member;
};

const std::vector<Field>& fields() {
  static const std::vector<Field> table{
      {"learning_rate", &RunConfig::learning_rate},
      {"max_grad_norm", &RunConfig::max_grad_norm},
      {"num_groups", &RunConfig::num_groups},
      {"topk_groups", &RunConfig::topk_groups},
      {"kl_coef", &RunConfig::kl_coef},
      {"grpo_epoch", &RunConfig::grpo_epoch},
      {"policy_clip_eps", &RunConfig::policy_clip_eps},
      {"temperature", &RunConfig::temperature},
      {"num_train_epochs", &RunConfig::num_train_epochs},
      {"iterations", &RunConfig::iterations},
      {"max_steps", &RunConfig::max_steps},
      {"seed", &RunConfig::seed},
      {"environment", &RunConfig::environment},
      {"std_floor", &RunConfig::std_floor},
      {"update_all_nodes", &RunConfig::update_all_nodes},
      {"efficiency_reward", &RunConfig::efficiency_reward},
      {"deletion_threshold", &RunConfig::deletion_threshold},
      {"memory_capacity", &RunConfig::memory_capacity},
      {"recall_n", &RunConfig::recall_n},
      {"alpha", &RunConfig::alpha},
      {"beta", &RunConfig::beta},
      {"eval_temperature", &RunConfig::eval_temperature},
      {"eval_tasks", &RunConfig::eval_tasks},
      {"eval_every", &RunConfig::eval_every},
      {"train_tasks", &RunConfig::train_tasks},
      {"parallel", &RunConfig::parallel},
      {"feature_dim", &RunConfig::feature_dim},
      {"remote_agents", &RunConfig::remote_agents},
      {"remote_endpoint", &RunConfig::remote_endpoint},
      {"scripted_agents", &RunConfig::scripted_agents},
  };
  return table;
}

const Field& field(const std::string& key) {
  for (const auto& f : fields()) {
    if (key == f.name) return f;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

[[noreturn]] void type_error(const std::string& key, const char* type,
                             const std::string& value) {
  throw ConfigError("config key '" + key + "' expects " + type + ", got '" + value + "'");
}

double parse_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end || !std::isfinite(out)) {
    type_error(key, "a real number", value);
  }
  return out;
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
  std::int64_t out = 0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) type_error(key, "an integer", value);
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  const auto lower = to_lower(value);
  if (lower == "true" || lower == "1" || lower == "yes") return true;
  if (lower == "false" || lower == "0" || lower == "no") return false;
  type_error(key, "a boolean", value);
}

std::string format_double(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

}  // namespace

GrpoConfig RunConfig::grpo() const {
  GrpoConfig out;
  out.clip_eps = policy_clip_eps;
  out.topk = static_cast<int>(topk_groups);
  out.update_all = update_all_nodes;
  out.grpo_epochs = static_cast<int>(grpo_epoch);
  out.kl_coef = kl_coef;
  out.learning_rate = learning_rate;
  out.max_grad_norm = max_grad_norm;
  out.std_floor = std_floor;
  out.temperature = temperature;
  out.parallel = parallel;
  return out;
}

MemoryConfig RunConfig::memory() const {
  MemoryConfig out;
  out.deletion_threshold = deletion_threshold;
  out.capacity = static_cast<std::size_t>(memory_capacity);
  out.recall_n = static_cast<std::size_t>(recall_n);
  out.alpha = alpha;
  out.beta = beta;
  return out;
}

EpisodeConfig RunConfig::episode() const {
  EpisodeConfig out;
  out.max_steps = static_cast<int>(max_steps);
  out.temperature = temperature;
  return out;
}

void RunConfig::validate() const {
  if (kl_coef != 0.0) throw ConfigError("kl_coef must be 0 in this engine");
  if (num_groups < 2) throw ConfigError("num_groups must be >= 2");
  if (num_train_epochs < 1) throw ConfigError("num_train_epochs must be >= 1");
  if (iterations < 1) throw ConfigError("iterations must be >= 1");
  if (max_steps < 1) throw ConfigError("max_steps must be >= 1");
  if (memory_capacity < 0) throw ConfigError("memory_capacity must be >= 0");
  if (recall_n < 0) throw ConfigError("recall_n must be >= 0");
  if (eval_temperature < 0.0) throw ConfigError("eval_temperature must be >= 0");
  if (eval_tasks < 0) throw ConfigError("eval_tasks must be >= 0");
  if (eval_every < 0) throw ConfigError("eval_every must be >= 0");
  if (train_tasks < 1) throw ConfigError("train_tasks must be >= 1");
  if (feature_dim < 1) throw ConfigError("feature_dim must be >= 1");
  const auto known = environment_names();
  if (std::find(known.begin(), known.end(), environment) == known.end()) {
    throw ConfigError("unknown environment '" + environment + "'");
  }
  if (!remote_agents.empty() && remote_endpoint.empty()) {
    throw ConfigError("remote_agents needs remote_endpoint");
  }
  grpo().validate();
  memory().validate();
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& f : fields()) out.emplace_back(f.name);
  return out;
}

void set_config_value(RunConfig& config, const std::string& key,
                      const std::string& raw) {
  const auto value = std::string(trim(raw));
  std::visit(
      [&](auto member) {
        using T = std::decay_t<decltype(config.*member)>;
        if constexpr (std::is_same_v<T, double>) {
          config.*member = parse_double(key, value);
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          config.*member = parse_int(key, value);
        } else if constexpr (std::is_same_v<T, bool>) {
          config.*member = parse_bool(key, value);
        } else {
          config.*member = value;
        }
      },
      field(key).member);
}

std::string get_config_value(const RunConfig& config, const std::string& key) {
  return std::visit(
      [&](auto member) -> std::string {
        using T = std::decay_t<decltype(config.*member)>;
        if constexpr (std::is_same_v<T, double>) {
          return format_double(config.*member);
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(config.*member);
        } else if constexpr (std::is_same_v<T, bool>) {
          return config.*member ? "true" : "false";
        } else {
          return config.*member;
        }
      },
      field(key).member);
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  RunConfig config;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(origin + ":" + std::to_string(number) +
                        ": expected 'key = value'");
    }
    set_config_value(config, std::string(trim(body.substr(0, eq))),
                     std::string(body.substr(eq + 1)));
  }
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path);
}

std::string serialize_config(const RunConfig& config) {
  std::string out;
  for (const auto& f : fields()) {
    out += std::string(f.name) + " = " + get_config_value(config, f.name) + "\n";
  }
  return out;
}

void apply_env_overrides(RunConfig& config,
                         const std::function<const char*(const char*)>& getenv_fn) {
  for (const auto& f : fields()) {
    std::string name = "JOINTRL_";
    for (const char* c = f.name; *c; ++c) {
      name.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(*c))));
    }
    if (const char* value = getenv_fn(name.c_str())) set_config_value(config, f.name, value);
  }
}

nlohmann::json to_json(const RunConfig& config) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& f : fields()) {
    std::visit([&](auto member) { out[f.name] = config.*member; }, f.member);
  }
  return out;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string current;
  for (char c : text + ",") {
    if (c == ',') {
      auto item = std::string(trim(current));
      if (!item.empty()) out.push_back(std::move(item));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  return out;
}

}  // namespace jointrl
