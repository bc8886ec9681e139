// SPDX-License-Identifier: Apache-2.0
#include "jointrl/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "jointrl/config.hpp"
#include "jointrl/metrics.hpp"
#include "jointrl/text.hpp"
#include "jointrl/trainer.hpp"

namespace jointrl {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kEvalSetSalt = 0xe7a1;

struct CommonOptions {
  std::string config_path;
  std::string dataset_path;
  std::string out_dir;
  std::optional<std::int64_t> seed;
  bool force = false;
};

RunConfig resolve_config(const CommonOptions& options, const GetEnv& getenv_fn) {
  RunConfig config =
      options.config_path.empty() ? RunConfig{} : load_config(options.config_path);
  apply_env_overrides(config, getenv_fn);
  if (options.seed) config.seed = *options.seed;
  config.validate();
  return config;
}

void prepare_out_dir(const std::string& dir, bool force) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw ConfigError("--out '" + dir + "' is not a directory");
    if (!fs::is_empty(dir)) {
      if (!force) {
        throw ConfigError("output directory '" + dir +
                          "' is not empty; pass --force to overwrite");
      }
      for (const auto& entry : fs::directory_iterator(dir)) fs::remove_all(entry.path());
    }
  }
  fs::create_directories(dir);
}

std::vector<TaskInstance> training_set(const CommonOptions& options,
                                       const RunConfig& config, const Environment& env) {
  if (!options.dataset_path.empty()) return load_dataset(options.dataset_path);
  return env.generate_dataset(static_cast<std::size_t>(config.train_tasks),
                              static_cast<std::uint64_t>(config.seed));
}

std::vector<TaskInstance> evaluation_set(const RunConfig& config, const Environment& env) {
  return env.generate_dataset(
      static_cast<std::size_t>(config.eval_tasks),
      mix_seed(static_cast<std::uint64_t>(config.seed), kEvalSetSalt));
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

int train_command(const CommonOptions& options, std::ostream& out, const GetEnv& getenv_fn) {
  if (options.out_dir.empty()) throw ConfigError("train needs --out");
  const auto config = resolve_config(options, getenv_fn);
  auto env = make_environment(config.environment);
  const auto dataset = training_set(options, config, *env);
  const auto eval_set = evaluation_set(config, *env);
  prepare_out_dir(options.out_dir, options.force);
  const fs::path root(options.out_dir);
  write_text(root / "config.cfg", serialize_config(config));

  Trainer trainer(config, env);
  trainer.set_batch_dir((root / "batches").string());
  MetricsStream metrics((root / "metrics.jsonl").string());
  const auto result = trainer.train(dataset, eval_set, metrics, options.out_dir);
  write_text(root / "summary.json", result.summary.dump(2) + "\n");
  out << result.summary.dump(2) << "\n";
  return kExitOk;
}

int eval_command(const CommonOptions& options, const std::string& checkpoint,
                 std::ostream& out, const GetEnv& getenv_fn) {
  const auto config = resolve_config(options, getenv_fn);
  auto env = make_environment(config.environment);
  Trainer trainer(config, env);
  if (!checkpoint.empty()) trainer.load_checkpoint(checkpoint);
  const auto tasks = options.dataset_path.empty() ? evaluation_set(config, *env)
                                                  : load_dataset(options.dataset_path);
  const auto evaluation = trainer.evaluate(tasks);
  const auto result = to_json(evaluation);
  if (!options.out_dir.empty()) {
    prepare_out_dir(options.out_dir, options.force);
    write_text(fs::path(options.out_dir) / "eval.json", result.dump(2) + "\n");
    save_traces((fs::path(options.out_dir) / "traces.jsonl").string(),
                evaluation.trajectories);
  }
  out << result.dump(2) << "\n";
  return kExitOk;
}

int memory_inspect_command(const std::string& path, std::size_t top, std::ostream& out) {
  auto store = load_memory(path);
  auto entries = store.entries();
  std::stable_sort(entries.begin(), entries.end(),
                   [](const MemoryEntry& a, const MemoryEntry& b) { return a.score > b.score; });
  if (top > 0 && entries.size() > top) entries.resize(top);
  out << "entries: " << store.size() << "\n";
  for (const auto& entry : entries) {
    std::string plan;
    for (const auto& step : entry.plan) plan += (plan.empty() ? "" : " -> ") + step;
    out << "#" << entry.id << "  score=" << entry.score << "  time=" << entry.time << "\n"
        << "  query:  " << entry.query << "\n"
        << "  plan:   " << (plan.empty() ? "(direct answer)" : plan) << "\n"
        << "  answer: " << entry.output << "\n";
  }
  return kExitOk;
}

int replay_command(const std::string& path, std::ostream& out) {
  out << summarize(read_metrics(path)).dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const GetEnv& getenv_fn) {
  CLI::App app{"Joint multi-agent GRPO training engine", "jointrl"};
  app.require_subcommand(1);

  CommonOptions train_options;
  auto* train = app.add_subcommand("train", "train agents and memory on a dataset");
  train->add_option("--config", train_options.config_path, "key = value config file");
  train->add_option("--dataset", train_options.dataset_path,
                    "task JSONL; generated from the environment when absent");
  train->add_option("--out", train_options.out_dir, "output directory")->required();
  train->add_option("--seed", train_options.seed, "seed override");
  train->add_flag("--force", train_options.force, "overwrite a non-empty output directory");

  CommonOptions eval_options;
  std::string checkpoint;
  auto* eval = app.add_subcommand("eval", "greedy evaluation");
  eval->add_option("--config", eval_options.config_path, "key = value config file");
  eval->add_option("--dataset", eval_options.dataset_path, "task JSONL");
  eval->add_option("--checkpoint", checkpoint, "checkpoint directory");
  eval->add_option("--out", eval_options.out_dir, "directory for eval.json and traces.jsonl");
  eval->add_option("--seed", eval_options.seed, "seed override");
  eval->add_flag("--force", eval_options.force, "overwrite a non-empty output directory");

  std::string store_path;
  std::size_t top = 0;
  auto* inspect = app.add_subcommand("memory-inspect", "print a memory store by score");
  inspect->add_option("store", store_path, "memory store JSONL")->required();
  inspect->add_option("--top", top, "print only the best N entries");

  std::string metrics_path;
  auto* replay = app.add_subcommand("replay-metrics", "rebuild the run summary");
  replay->add_option("metrics", metrics_path, "metrics JSONL")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (train->parsed()) return train_command(train_options, out, getenv_fn);
    if (eval->parsed()) return eval_command(eval_options, checkpoint, out, getenv_fn);
    if (inspect->parsed()) return memory_inspect_command(store_path, top, out);
    if (replay->parsed()) return replay_command(metrics_path, out);
  } catch (const ConfigError& e) {
    err << "error[config]: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    err << "error[data]: " << e.what() << "\n";
    return kExitData;
  } catch (const PolicyError& e) {
    err << "error[policy]: " << e.what() << "\n";
    return kExitPolicy;
  } catch (const TransportError& e) {
    err << "error[transport]: " << e.what() << "\n";
    return kExitPolicy;
  } catch (const ProtocolError& e) {
    err << "error[protocol]: " << e.what() << "\n";
    return kExitPolicy;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

int run_cli(int argc, char** argv) {
  return run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr,
                 [](const char* name) { return std::getenv(name); });
}

}  // namespace jointrl
