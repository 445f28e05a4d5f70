#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sagin/baselines.hpp"

namespace sagin {

struct TaskRecord {
  int id = -1;
  ModeId mode = ModeId::M1;
  double delay_s = 0.0;
  double quality = 0.0;
  double score = 0.0;
  bool failed = false;
  bool resolved = false;  // false when the horizon cut the episode short
};

struct EpisodeStats {
  std::uint64_t seed = 0;
  double reward_sum = 0.0;
  double avg_sce = 0.0;  // sum of task scores over G
  int completed = 0;
  int failed = 0;
  int slots = 0;
  std::array<int, kNumModes> mode_counts{};
  std::vector<TaskRecord> tasks;
};

// Runs one full episode; optionally appends one JSON line per slot to trace.
EpisodeStats run_episode(const ScenarioConfig& cfg, Policy& policy, std::uint64_t seed,
                         std::ostream* trace);

struct EvalSummary {
  double mean_avg_sce = 0.0;
  double std_avg_sce = 0.0;
  double mean_reward = 0.0;
  double completion_rate = 0.0;
  std::array<int, kNumModes> mode_counts{};
  std::vector<EpisodeStats> episodes;
};

EvalSummary run_eval(const ScenarioConfig& cfg, Policy& policy, int episodes,
                     std::uint64_t base_seed, std::ostream* trace);

struct SweepRow {
  std::string value;
  double mean_sce = 0.0;
  double stddev_sce = 0.0;
};

// One row per value: set_key(cfg, key, value), run `episodes` per seed, and
// aggregate avg-SCE mean/stddev across all runs, in the given value order.
std::vector<SweepRow> run_sweep(const ScenarioConfig& base, const std::string& key,
                                const std::vector<std::string>& values,
                                const std::vector<std::uint64_t>& seeds, int episodes,
                                const std::string& policy_spec);

struct TrainOptions {
  std::string scenario_path;  // empty = defaults
  std::string out_dir;
  long steps = 50000;
  std::uint64_t seed = 1;
  int log_interval = 500;
};

struct TrainArtifacts {
  std::string checkpoint_path;
  std::string metrics_path;
  double mean_recent_episode_reward = 0.0;
  int episodes = 0;
};

// Trains a fresh agent on the scenario; writes metrics.csv and
// checkpoint.bin under out_dir.
TrainArtifacts train(const ScenarioConfig& cfg, const TrainOptions& opt);

// Trace validation: recomputes every slot reward from its completion list
// and penalty flag; returns the number of mismatching slots.
struct ReplayReport {
  long records = 0;
  long mismatches = 0;
};
ReplayReport replay_trace(std::istream& trace);

// CLI-facing wrappers with documented exit codes: 0 ok, 2 config error,
// 3 runtime error.
int cmd_train(const TrainOptions& opt);
int cmd_eval(const std::string& scenario_path, const std::string& policy_spec, int episodes,
             std::uint64_t seed, const std::string& out_dir, const std::string& trace_path);
int cmd_sweep(const std::string& scenario_path, const std::string& key,
              const std::vector<std::string>& values, const std::string& seeds_csv,
              int episodes, const std::string& policy_spec, const std::string& out_csv);
int cmd_replay(const std::string& trace_path);

// Shared helpers.
ScenarioConfig load_scenario_or_default(const std::string& path);
std::vector<std::uint64_t> parse_seed_list(const std::string& csv);
void write_eval_csvs(const EvalSummary& summary, const std::string& out_dir);

}  // namespace sagin
