// SPDX-License-Identifier: Apache-2.0
#ifndef JOINTRL_MEMORY_HPP_
#define JOINTRL_MEMORY_HPP_

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jointrl/core_model.hpp"

namespace jointrl {

using MemoryId = std::int64_t;

// One long-term memory record: (q, t, P, O, R_M).
struct MemoryEntry {
  MemoryId id = 0;
  std::string query;
  std::int64_t time = 0;
  std::vector<std::string> plan;
  std::string output;
  double score = 0.0;

  bool operator==(const MemoryEntry&) const = default;
};

struct RewardBounds {
  double mean = 0.0;
  double stddev = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct MemoryConfig {
  double deletion_threshold = 0.0;  // D
  std::size_t capacity = 1024;
  std::size_t recall_n = 3;
  double alpha = 1.0;  // time-decay weight
  double beta = 1.0;   // reward-difference weight

  void validate() const;
};

// Per-agent store. Entries are kept in insertion (id) order.
class MemoryStore {
 public:
  MemoryStore() = default;
  explicit MemoryStore(AgentId agent) : agent_(std::move(agent)) {}

  const AgentId& agent() const { return agent_; }
  const std::vector<MemoryEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  MemoryId insert(std::string query, std::int64_t time,
                  std::vector<std::string> plan, std::string output,
                  double score);
  // Restores an entry verbatim (used by load and tests).
  void restore(MemoryEntry entry);
  MemoryId next_id() const { return next_id_; }
  // Never moves the counter backwards, so ids of evicted entries stay retired.
  void reserve_ids_below(MemoryId next) { next_id_ = std::max(next_id_, next); }

  MemoryEntry* find(MemoryId id);
  const MemoryEntry* find(MemoryId id) const;

  template <typename Predicate>
  std::size_t remove_if(Predicate predicate) {
    const auto before = entries_.size();
    std::erase_if(entries_, predicate);
    return before - entries_.size();
  }

  std::optional<double> min_score() const;

  bool operator==(const MemoryStore&) const = default;

 private:
  AgentId agent_;
  std::vector<MemoryEntry> entries_;
  MemoryId next_id_ = 1;
};

std::vector<MemoryEntry> recall(const MemoryStore& store,
                                std::string_view query, std::size_t n);

RewardBounds compute_bounds(std::span<const double> rewards);

// Outputs are compared in direct-answer mode, plans in tool-call mode.
enum class SimilarityMode { kDirectAnswer, kToolCall };

struct MemoryUpdate {
  std::string query;
  std::vector<std::string> plan;
  std::string output;
  double reward = 0.0;  // R_M
  SimilarityMode mode = SimilarityMode::kDirectAnswer;
};

struct UpdateReport {
  std::optional<MemoryId> inserted;
  std::vector<MemoryId> updated;
  std::vector<MemoryId> skipped;
  std::vector<double> weights;  // softmax-normalised similarities s_i
};

double plan_similarity(std::span<const std::string> a,
                       std::span<const std::string> b);

// Inserts when R_M > U and moves recalled scores by s_i * |R_M - bound|.
// On reinforcement t_i is reset to `now` before the age term is taken, so the
// age term is zero there; taking it first would subtract |now - t_i| instead.
UpdateReport update_memory(MemoryStore& store, const MemoryUpdate& update,
                           std::span<const MemoryEntry> recalled,
                           std::int64_t now, const RewardBounds& bounds,
                           const MemoryConfig& config);

struct DecayReport {
  std::size_t decayed = 0;
};

DecayReport decay_others(MemoryStore& store,
                         std::span<const MemoryId> recalled_ids,
                         std::int64_t now, double alpha);

struct EvictReport {
  std::size_t below_threshold = 0;
  std::size_t over_capacity = 0;
};

EvictReport evict(MemoryStore& store, double deletion_threshold,
                  std::size_t capacity);

nlohmann::json to_json(const MemoryEntry& entry);
MemoryEntry memory_entry_from_json(const nlohmann::json& record);

void save_memory(const MemoryStore& store, const std::string& path);
MemoryStore load_memory(const std::string& path, AgentId agent = {});

}  // namespace jointrl

#endif  // JOINTRL_MEMORY_HPP_
