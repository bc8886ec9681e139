// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "jointrl/trainer.hpp"
#include "oracles/derived_values.hpp"
#include "support.hpp"

using namespace jointrl;
using namespace testing_support;

namespace {

RunConfig small_config() {
  auto c = scripted_config();
  c.max_steps = 4;
  c.train_tasks = 6;
  c.eval_tasks = 8;
  c.num_train_epochs = 1;
  c.iterations = 1;
  c.seed = 5;
  return c;
}

std::vector<nlohmann::json> without_wall_time(std::vector<nlohmann::json> records) {
  for (auto& r : records) r.erase("wall_time");
  return records;
}

}  // namespace

TEST_SUITE("trainer") {
  TEST_CASE("build_agents leaves scripted sub-agents to the environment") {
    auto env = make_environment("routing");
    CHECK(build_agents(scripted_config(), *env).agents().size() == 1);
    CHECK(build_agents(RunConfig{}, *env).agents().size() == 5);
    CHECK(build_agents(RunConfig{}, *env).master().id == kMasterId);
  }

  TEST_CASE("one immediate-answer task with G=2 samples two rollouts") {
    auto config = small_config();
    config.num_groups = 2;
    auto env = make_environment("routing");
    Trainer trainer(config, env,
                    remote_master_system(loopback_client(uniform_choice_handler(
                        {"<think>t</think><answer>lima</answer>"}))));
    const auto outcome = trainer.train_step(env->generate_task(TaskKind::kQa, 1));
    CHECK(outcome.initial.length() == 1);
    REQUIRE(outcome.groups.size() == 1);
    CHECK(outcome.groups[0].size() == 2);
    CHECK(outcome.episodes == 2);
    CHECK(outcome.update.updates.size() <= 1);
  }

  TEST_CASE("each task runs one memory pass and one GRPO step") {
    auto env = make_environment("routing");
    Trainer trainer(small_config(), env);
    MetricsStream metrics;
    const auto tasks = env->generate_dataset(6, 1);
    for (const auto& task : tasks) {
      const auto outcome = trainer.train_step(task, &metrics);
      CHECK(outcome.episodes == outcome.stats.fresh_rollouts + 1);
      CHECK(outcome.stats.memberships == outcome.stats.fresh_rollouts + outcome.initial.length());
    }
    CHECK(trainer.step() == 6);
    CHECK(trainer.grpo_steps() == 6);
    CHECK(trainer.memory_passes() == 6);
  }

  TEST_CASE("memory audits hold after every step") {
    auto config = small_config();
    config.memory_capacity = 4;
    config.recall_n = 2;
    auto env = make_environment("routing");
    Trainer trainer(config, env);
    for (const auto& task : env->generate_dataset(30, 2)) {
      const auto outcome = trainer.train_step(task);
      for (const auto& audit : outcome.audits) {
        CHECK(audit.size <= 4);
        if (audit.min_score) CHECK(*audit.min_score >= config.deletion_threshold);
        CHECK(audit.inserted == audit.expected_inserted);
      }
    }
  }

  TEST_CASE("recall_n = 0 empties recall but keeps insertion") {
    auto config = small_config();
    config.recall_n = 0;
    auto env = make_environment("routing");
    Trainer trainer(config, env);
    std::size_t inserted = 0;
    for (const auto& task : env->generate_dataset(20, 3)) {
      for (const auto& audit : trainer.train_step(task).audits) inserted += audit.inserted;
      for (const auto& [agent, recalled] : trainer.snapshot(task.query)) CHECK(recalled.empty());
    }
    CHECK(inserted > 0);
    CHECK_FALSE(trainer.memory().at(kMasterId).empty());
  }

  TEST_CASE("fixed seeds give identical metrics streams") {
    auto run = [] {
      auto config = small_config();
      config.scripted_agents.clear();
      config.eval_every = 3;
      auto env = make_environment("routing");
      Trainer trainer(config, env);
      MetricsStream metrics;
      trainer.train(env->generate_dataset(6, 7), env->generate_dataset(8, 8), metrics);
      return without_wall_time(metrics.records());
    };
    const auto a = run();
    const auto b = run();
    CHECK(a.size() > 10);
    CHECK(a == b);
  }

  TEST_CASE("parallel and serial training agree") {
    auto run = [](bool parallel) {
      auto config = small_config();
      config.scripted_agents.clear();
      config.parallel = parallel;
      auto env = make_environment("routing");
      Trainer trainer(config, env);
      MetricsStream metrics;
      trainer.train(env->generate_dataset(4, 7), env->generate_dataset(8, 8), metrics);
      auto records = without_wall_time(metrics.records());
      for (auto& r : records) {
        if (r.contains("config")) r["config"].erase("parallel");
      }
      return records;
    };
    CHECK(run(true) == run(false));
  }

  TEST_CASE("evaluation never writes policies or memory") {
    auto env = make_environment("routing");
    Trainer trainer(small_config(), env);
    for (const auto& task : env->generate_dataset(8, 4)) trainer.train_step(task);
    const auto memory = trainer.memory();
    const auto version = trainer.agents().master().policy->version;
    const auto params = trainer.agents().master().policy->parameters;
    trainer.evaluate(env->generate_dataset(20, 9));
    CHECK(trainer.memory() == memory);
    CHECK(trainer.agents().master().policy->version == version);
    CHECK(trainer.agents().master().policy->parameters == params);
  }

  TEST_CASE("exact scripted routing scores full accuracy") {
    auto env = make_environment("routing");
    auto agents = build_agents(scripted_config(), *env);
    route_then_answer(*agents.find(kMasterId)->policy, "compute", "math_agent");
    Trainer trainer(small_config(), env, std::move(agents));
    std::vector<TaskInstance> tasks;
    for (std::uint64_t s = 0; s < 40; ++s) tasks.push_back(env->generate_task(TaskKind::kMath, s));
    const auto result = trainer.evaluate(tasks);
    CHECK(result.accuracy == 1.0);
    CHECK(result.avg_reasoning_rounds == 2.0);
    CHECK(result.per_kind_accuracy.at("math") == 1.0);
    CHECK(result.trajectories.size() == 40);
  }

  TEST_CASE("episodes capped at eight steps average eight rounds") {
    auto config = small_config();
    config.max_steps = 8;
    auto env = make_environment("routing");
    Trainer trainer(config, env,
                    remote_master_system(loopback_client(uniform_choice_handler(
                        {call_text("math_agent"), call_text("general_agent")}))));
    const auto result = trainer.evaluate(env->generate_dataset(12, 1));
    CHECK(result.avg_reasoning_rounds == 8.0);
    CHECK(result.accuracy == 0.0);
  }

  TEST_CASE("uniform routing scores the one-in-four baseline") {
    auto config = scripted_config();
    config.eval_temperature = 1.0;
    config.seed = 11;
    auto env = make_environment("routing");
    auto agents = build_agents(config, *env);
    auto& master = *agents.find(kMasterId)->policy;
    const auto tasks = env->generate_dataset(1000, 21);
    // after one call the master always answers; the first route stays uniform
    for (const auto& task : tasks) {
      for (const auto& info : env->sub_agents()) {
        Observation obs;
        obs.query = task.query;
        obs.stage = 1;
        obs.last_agent = info.id;
        for (const auto& f : observation_features(obs)) set_weight(master, f, "answer", 20.0);
      }
    }
    // hashed slots are shared; clear anything the first routing decision reads
    for (const auto& task : tasks) {
      Observation obs;
      obs.query = task.query;
      for (const auto& info : env->sub_agents()) {
        Candidate candidate{"call:" + info.id, info.id, {}, info.description};
        for (const auto slot : candidate_features(obs, candidate, master.parameters.size())) {
          master.parameters[slot] = 0.0;
        }
      }
    }
    Trainer trainer(config, env, std::move(agents));
    const auto result = trainer.evaluate(tasks);
    CHECK(result.avg_reasoning_rounds == doctest::Approx(2.0).epsilon(0.01));
    CHECK(std::fabs(result.accuracy - derived::kBaselineP) <= derived::kBaselineThreeSe1000);
  }

  TEST_CASE("checkpoints restore policies, memory and the step cursor") {
    TempDir dir;
    auto env = make_environment("routing");
    auto config = small_config();
    config.scripted_agents.clear();
    Trainer trainer(config, env);
    for (const auto& task : env->generate_dataset(5, 4)) trainer.train_step(task);
    trainer.save_checkpoint(dir.file("ckpt"), 1, 1);
    Trainer restored(config, env);
    restored.load_checkpoint(dir.file("ckpt"));
    CHECK(restored.step() == trainer.step());
    CHECK(restored.memory() == trainer.memory());
    for (const auto& spec : trainer.agents().agents()) {
      CHECK(restored.agents().find(spec.id)->policy->parameters == spec.policy->parameters);
    }
    const auto eval_set = env->generate_dataset(10, 5);
    CHECK(to_json(restored.evaluate(eval_set)) == to_json(trainer.evaluate(eval_set)));
    CHECK_THROWS_AS(restored.load_checkpoint(dir.file("absent")), DataError);
  }

  TEST_CASE("train emits evaluations at the requested interval") {
    auto config = small_config();
    config.eval_every = 2;
    auto env = make_environment("routing");
    Trainer trainer(config, env);
    MetricsStream metrics;
    const auto result = trainer.train(env->generate_dataset(6, 1), env->generate_dataset(8, 2), metrics);
    CHECK(result.eval_tasks_seen == std::vector<std::int64_t>{2, 4, 6, 6});
    CHECK(result.summary == summarize(metrics.records()));
    CHECK(result.summary.at("steps") == 6);
  }
}
