#pragma once

#include <deque>
#include <vector>

#include "sagin/channel.hpp"
#include "sagin/geometry.hpp"
#include "sagin/traffic.hpp"

namespace sagin {

// Hybrid per-slot action. Pairing vectors use -1 for "none"; mode holds one
// choice per observation-window slot and binds the pending task sitting at
// that position.
struct Action {
  std::vector<int> uav_leo;    // N entries in {-1, 0..K-1}
  std::vector<int> user_uav;   // M entries in {-1, 0..N-1}
  std::vector<int> isl;        // K entries in {-1, 0..K-1} \ {self}
  std::vector<Vec3> uav_vel;   // N velocity commands, m/s
  std::vector<ModeId> mode;    // task_window entries

  bool operator==(const Action&) const = default;
};

Action empty_action(const ScenarioConfig& cfg);

// Per-link FIFO queues of task ids.
struct ServiceQueues {
  std::vector<std::deque<int>> isl;       // per source LEO
  std::vector<std::deque<int>> sat_uav;   // K*N, index k*N + n
  std::vector<std::deque<int>> uav_user;  // N*M, index n*M + m
  std::vector<std::deque<int>> decode;    // per user
};

struct EnvState {
  int t = 0;
  GeoState geo;
  std::vector<Complex> gains;      // N*M air-ground coefficients, index n*M + m
  std::vector<double> los_phase;   // N*M per-episode LoS phases
  std::vector<double> isl_dist_m;  // K*K symmetric distance matrix
  std::vector<Task> tasks;
  ServiceQueues queues;
  int admitted = 0;
  bool done = false;
  std::uint64_t episode_seed = 0;

  double sim_time(const ScenarioConfig& cfg) const { return t * cfg.slot_dt; }
};

struct StepResult {
  EnvState next;
  double reward = 0.0;
  bool done = false;
  std::vector<std::pair<int, double>> completed;  // (task id, task score)
  std::vector<int> failed;
  bool violated = false;   // the unit penalty flag for this slot
  bool projected = false;  // the raw action needed repair
};

// Cardinalities of the hybrid action interface exposed to a learner.
struct ActionSpec {
  int n_uav_heads = 0;
  int uav_head_size = 0;   // K + 1 (none + each LEO)
  int n_user_heads = 0;
  int user_head_size = 0;  // N + 1
  int n_isl_heads = 0;
  int isl_head_size = 0;   // K (none + the K-1 other LEOs)
  int n_mode_heads = 0;
  int mode_head_size = kNumModes;
  int n_cont = 0;          // 3 per UAV, squashed to [-1, 1], scaled by v_max

  std::vector<int> head_sizes() const;
  int flat_action_dim() const;  // n_cont + sum of head sizes (one-hot)
};

ActionSpec action_spec(const ScenarioConfig& cfg);

// Deterministic, fully seeded initial state: geometry placement, randomized
// pass phases, ISL distances, initial channel draws; no tasks.
EnvState reset(const ScenarioConfig& cfg, std::uint64_t seed);

// Repairs infeasible choices: pairings toward invisible LEOs become none,
// ISL self-loops and out-of-range ids become none, velocities rescale to
// v_max. Idempotent on feasible actions.
Action project_action(const ScenarioConfig& cfg, const EnvState& state, const Action& raw);

// One slot of dynamics. Order: project, bind pending modes from the mode
// heads, move UAVs, advance passes, resample channels, admit arrivals,
// route/bind hops, serve every queue head for slot_dt, collect completions
// and failures, score the slot. The rng argument is a root stream: all
// per-slot draws derive from (stream id, slot), so the caller's generator is
// never advanced and replays are exact.
StepResult step(const ScenarioConfig& cfg, const EnvState& state, const Action& raw,
                const Rng& rng);

// Flat observation; layout (all entries finite, most in [0, 1]):
//   [ t / horizon,
//     per UAV: x / (N * area_spacing), y / area_spacing, (z - z_min) / (z_max - z_min),
//     per (uav, user): |h|^2 in dB mapped from [-100, 0] onto [0, 1],
//     per window slot (oldest live tasks first, zeros when empty):
//       normalized q_min, d_max / d_scale, elapsed / d_max,
//       bits fraction (1 until transmission, remaining/payload during, 0 when
//       unbound or post-transmission), stage one-hot (8) ]
std::vector<double> observe(const ScenarioConfig& cfg, const EnvState& state);

int observation_dim(const ScenarioConfig& cfg);

// Ids of the live tasks currently exposed in the observation window.
std::vector<int> window_task_ids(const ScenarioConfig& cfg, const EnvState& state);

// Convenience owner for (config, state, rng) with step-in-place semantics.
class Environment {
 public:
  explicit Environment(ScenarioConfig cfg);

  void reset(std::uint64_t seed);
  StepResult step(const Action& action);

  const ScenarioConfig& config() const { return cfg_; }
  const EnvState& state() const { return state_; }
  std::vector<double> observe() const { return sagin::observe(cfg_, state_); }

  // Places a ready-to-encode task directly at a LEO, bypassing arrival and
  // mode binding. Scripted-episode and test affordance.
  int inject_task(int src_leo, int dst_user, ModeId mode, double d_max, double q_min);

 private:
  ScenarioConfig cfg_;
  EnvState state_;
  Rng rng_;
};

}  // namespace sagin
