// SPDX-License-Identifier: Apache-2.0
#include "jointrl/memory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "jointrl/text.hpp"

namespace jointrl {

void MemoryConfig::validate() const {
  if (capacity == 0) throw ConfigError("memory_capacity must be positive");
  if (capacity < recall_n) {
    throw ConfigError("memory_capacity must be >= recall_n");
  }
  if (!std::isfinite(deletion_threshold) || !std::isfinite(alpha) ||
      !std::isfinite(beta)) {
    throw ConfigError("memory weights must be finite");
  }
}

MemoryId MemoryStore::insert(std::string query, std::int64_t time,
                             std::vector<std::string> plan, std::string output,
                             double score) {
  MemoryEntry entry{next_id_++, std::move(query), time, std::move(plan),
                    std::move(output), score};
  entries_.push_back(std::move(entry));
  return entries_.back().id;
}

void MemoryStore::restore(MemoryEntry entry) {
  next_id_ = std::max(next_id_, entry.id + 1);
  entries_.push_back(std::move(entry));
}

MemoryEntry* MemoryStore::find(MemoryId id) {
  auto it = std::find_if(entries_.begin(), entries_.end(),
                         [id](const MemoryEntry& e) { return e.id == id; });
  return it == entries_.end() ? nullptr : &*it;
}

const MemoryEntry* MemoryStore::find(MemoryId id) const {
  return const_cast<MemoryStore*>(this)->find(id);
}

std::optional<double> MemoryStore::min_score() const {
  if (entries_.empty()) return std::nullopt;
  return std::min_element(entries_.begin(), entries_.end(),
                          [](const MemoryEntry& a, const MemoryEntry& b) {
                            return a.score < b.score;
                          })
      ->score;
}

std::vector<MemoryEntry> recall(const MemoryStore& store,
                                std::string_view query, std::size_t n) {
  if (n == 0 || store.empty()) return {};
  struct Ranked {
    double sim;
    const MemoryEntry* entry;
  };
  std::vector<Ranked> ranked;
  ranked.reserve(store.size());
  for (const auto& entry : store.entries()) {
    ranked.push_back({token_f1(query, entry.query), &entry});
  }
  const auto take = std::min(n, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<long>(take),
                    ranked.end(), [](const Ranked& a, const Ranked& b) {
                      if (a.sim != b.sim) return a.sim > b.sim;
                      if (a.entry->score != b.entry->score) {
                        return a.entry->score > b.entry->score;
                      }
                      if (a.entry->time != b.entry->time) {
                        return a.entry->time > b.entry->time;
                      }
                      return a.entry->id < b.entry->id;
                    });
  std::vector<MemoryEntry> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(*ranked[i].entry);
  return out;
}

RewardBounds compute_bounds(std::span<const double> rewards) {
  if (rewards.empty()) throw Error("compute_bounds needs at least one reward");
  const auto n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double squares = 0.0;
  for (double r : rewards) squares += (r - mean) * (r - mean);
  const double stddev = std::sqrt(squares / n);
  return {mean, stddev, mean - 1.96 * stddev, mean + 1.96 * stddev};
}

double plan_similarity(std::span<const std::string> a,
                       std::span<const std::string> b) {
  if (a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin())) {
    return 1.0;
  }
  const std::set<std::string> left(a.begin(), a.end());
  const std::set<std::string> right(b.begin(), b.end());
  std::size_t common = 0;
  for (const auto& id : left) common += right.count(id);
  const auto total = left.size() + right.size() - common;
  return total == 0 ? 1.0
                    : static_cast<double>(common) / static_cast<double>(total);
}

UpdateReport update_memory(MemoryStore& store, const MemoryUpdate& update,
                           std::span<const MemoryEntry> recalled,
                           std::int64_t now, const RewardBounds& bounds,
                           const MemoryConfig& config) {
  UpdateReport report;
  const double reward = update.reward;
  const bool reinforce = reward > bounds.upper;
  const bool penalise = reward < bounds.lower;

  if (reinforce) {
    report.inserted =
        store.insert(update.query, now, update.plan, update.output, reward);
  }

  std::vector<MemoryId> present;
  std::vector<double> sims;
  for (const auto& snapshot : recalled) {
    const MemoryEntry* entry = store.find(snapshot.id);
    if (entry == nullptr) {
      report.skipped.push_back(snapshot.id);
      continue;
    }
    present.push_back(snapshot.id);
    sims.push_back(update.mode == SimilarityMode::kDirectAnswer
                       ? token_f1(update.output, entry->output)
                       : plan_similarity(update.plan, entry->plan));
  }
  if (present.empty()) return report;

  double total = 0.0;
  for (double& sim : sims) {
    sim = std::exp(sim);
    total += sim;
  }
  for (double& sim : sims) sim /= total;
  report.weights = sims;

  if (!reinforce && !penalise) return report;

  for (std::size_t i = 0; i < present.size(); ++i) {
    MemoryEntry* entry = store.find(present[i]);
    double dt = 0.0;
    double ds = 0.0;
    if (reinforce) {
      // timestamp refresh precedes the time difference, so dt is zero here
      entry->time = now;
      dt = -static_cast<double>(std::llabs(now - entry->time));
      ds = sims[i] * std::fabs(reward - bounds.upper);
    } else {
      dt = -static_cast<double>(std::llabs(now - entry->time));
      ds = -sims[i] * std::fabs(reward - bounds.lower);
    }
    entry->score = entry->score + config.alpha * dt + config.beta * ds;
    report.updated.push_back(entry->id);
  }
  return report;
}

DecayReport decay_others(MemoryStore& store,
                         std::span<const MemoryId> recalled_ids,
                         std::int64_t now, double alpha) {
  DecayReport report;
  if (alpha == 0.0) return report;
  const std::set<MemoryId> skip(recalled_ids.begin(), recalled_ids.end());
  for (const auto& entry : store.entries()) {
    if (skip.count(entry.id)) continue;
    MemoryEntry* mutable_entry = store.find(entry.id);
    const double dt = -static_cast<double>(std::llabs(now - entry.time));
    mutable_entry->score = mutable_entry->score + alpha * dt;
    ++report.decayed;
  }
  return report;
}

EvictReport evict(MemoryStore& store, double deletion_threshold,
                  std::size_t capacity) {
  EvictReport report;
  report.below_threshold = store.remove_if([deletion_threshold](
                                               const MemoryEntry& entry) {
    return entry.score < deletion_threshold;
  });
  if (store.size() <= capacity) return report;

  std::vector<const MemoryEntry*> order;
  for (const auto& entry : store.entries()) order.push_back(&entry);
  std::sort(order.begin(), order.end(),
            [](const MemoryEntry* a, const MemoryEntry* b) {
              if (a->score != b->score) return a->score < b->score;
              if (a->time != b->time) return a->time < b->time;
              return a->id < b->id;
            });
  std::set<MemoryId> doomed;
  for (std::size_t i = 0; i < store.size() - capacity; ++i) {
    doomed.insert(order[i]->id);
  }
  report.over_capacity = store.remove_if(
      [&doomed](const MemoryEntry& entry) { return doomed.count(entry.id); });
  return report;
}

nlohmann::json to_json(const MemoryEntry& entry) {
  return {{"id", entry.id},     {"query", entry.query},
          {"time", entry.time}, {"plan", entry.plan},
          {"answer", entry.output}, {"score", entry.score}};
}

MemoryEntry memory_entry_from_json(const nlohmann::json& record) {
  try {
    MemoryEntry entry;
    entry.id = record.at("id").get<MemoryId>();
    entry.query = record.at("query").get<std::string>();
    entry.time = record.at("time").get<std::int64_t>();
    entry.plan = record.at("plan").get<std::vector<std::string>>();
    entry.output = record.at("answer").get<std::string>();
    entry.score = record.at("score").get<double>();
    return entry;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed memory record: ") + e.what());
  }
}

void save_memory(const MemoryStore& store, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write memory store '" + path + "'");
  for (const auto& entry : store.entries()) out << to_json(entry).dump() << '\n';
}

MemoryStore load_memory(const std::string& path, AgentId agent) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open memory store '" + path + "'");
  MemoryStore store(std::move(agent));
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto record = nlohmann::json::parse(line, nullptr, false);
    if (record.is_discarded()) throw DataError("invalid memory record in " + path);
    store.restore(memory_entry_from_json(record));
  }
  return store;
}

}  // namespace jointrl
