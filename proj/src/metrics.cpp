// SPDX-License-Identifier: Apache-2.0
#include "jointrl/metrics.hpp"

#include "jointrl/core_model.hpp"
#include "jointrl/text.hpp"

namespace jointrl {

MetricsStream::MetricsStream(const std::string& path) : out_(path, std::ios::app) {
  if (!out_) throw Error("cannot open metrics stream '" + path + "'");
}

void MetricsStream::write(nlohmann::json record) {
  if (!record.contains("type")) throw Error("metrics record without a type");
  if (out_.is_open()) {
    out_ << record.dump() << '\n';
    out_.flush();
    if (!out_) throw Error("failed writing metrics record");
  }
  records_.push_back(std::move(record));
}

std::vector<nlohmann::json> read_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open metrics stream '" + path + "'");
  std::vector<nlohmann::json> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    auto record = nlohmann::json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object() || !record.contains("type")) {
      throw DataError(path + ":" + std::to_string(number) + ": invalid metrics record");
    }
    out.push_back(std::move(record));
  }
  return out;
}

nlohmann::json summarize(const std::vector<nlohmann::json>& records) {
  nlohmann::json summary{{"per_kind_accuracy", nlohmann::json::object()},
                         {"accuracy", nullptr},
                         {"avg_reasoning_rounds", nullptr},
                         {"steps", 0},
                         {"wall_time", nullptr},
                         {"config", nullptr}};
  std::int64_t steps = 0;
  const nlohmann::json* final_eval = nullptr;
  for (const auto& record : records) {
    const auto& type = record.at("type");
    if (type == "config") {
      summary["config"] = record.at("config");
    } else if (type == "step") {
      ++steps;
    } else if (type == "eval") {
      if (final_eval == nullptr || record.value("final", false) ||
          !final_eval->value("final", false)) {
        final_eval = &record;
      }
    } else if (type == "run_end") {
      summary["wall_time"] = record.at("wall_time");
    }
  }
  summary["steps"] = steps;
  if (final_eval != nullptr) {
    summary["per_kind_accuracy"] = final_eval->at("per_kind_accuracy");
    summary["accuracy"] = final_eval->at("accuracy");
    summary["avg_reasoning_rounds"] = final_eval->at("avg_reasoning_rounds");
  }
  return summary;
}

}  // namespace jointrl
