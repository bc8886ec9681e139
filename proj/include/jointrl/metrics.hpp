// SPDX-License-Identifier: Apache-2.0
#ifndef JOINTRL_METRICS_HPP_
#define JOINTRL_METRICS_HPP_

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace jointrl {

// Append-only JSONL stream. Every record carries a "type" field:
// config, step, group, reward, memory, eval, iteration, run_end.
class MetricsStream {
 public:
  MetricsStream() = default;
  explicit MetricsStream(const std::string& path);

  void write(nlohmann::json record);
  const std::vector<nlohmann::json>& records() const { return records_; }

 private:
  std::ofstream out_;
  std::vector<nlohmann::json> records_;
};

std::vector<nlohmann::json> read_metrics(const std::string& path);

// {per_kind_accuracy, accuracy, avg_reasoning_rounds, steps, wall_time, config}
// derived only from stream records, so a replay reproduces it exactly.
nlohmann::json summarize(const std::vector<nlohmann::json>& records);

}  // namespace jointrl

#endif  // JOINTRL_METRICS_HPP_
