#pragma once

#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "sagin/modes.hpp"
#include "sagin/rng.hpp"
#include "sagin/scenario.hpp"

namespace sagin {

// Lifecycle of a delivery job. Stages advance strictly forward; the ISL
// stages only appear for forwarded tasks.
enum class TaskStage {
  QueuedAtLeo = 0,  // encoding or waiting at the source LEO
  IslInFlight = 1,
  AtRelayLeo = 2,
  SatToUav = 3,
  UavToUser = 4,
  Decoding = 5,
  Done = 6,
  Failed = 7,
};

constexpr int kNumStages = 8;

const char* stage_name(TaskStage s);

struct Task {
  int id = -1;
  int src_leo = -1;
  int dst_user = -1;
  double payload_bits_original = 0.0;  // full image size
  int arrival_slot = 0;
  double d_max = 0.0;  // s
  double q_min = 0.0;  // active-metric units

  bool mode_bound = false;  // modes bind one slot after admission, then never change
  ModeId mode = ModeId::M1;
  double payload_bits = 0.0;  // per-hop payload once the mode is bound

  TaskStage stage = TaskStage::QueuedAtLeo;
  double bits_remaining = 0.0;     // current transmission hop
  double elapsed = 0.0;            // s since admission
  double compute_remaining = 0.0;  // encode at the LEO, then decode at the user
  double achieved_q = std::nan("");

  // routing state
  int at_leo = -1;      // current LEO (source, then relay after forwarding)
  int relay_leo = -1;   // bound ISL destination, -1 when routed direct
  int bound_uav = -1;   // sat->UAV link binding
  bool forwarded = false;
  double source_wait = 0.0;  // s spent ready-but-untransmitted at the source LEO

  bool terminal() const { return stage == TaskStage::Done || stage == TaskStage::Failed; }

  // Task delay as scored and checked against d_max; optionally excludes the
  // queueing wait at the source LEO.
  double effective_delay(const ScenarioConfig& cfg) const {
    return elapsed - (cfg.task.exclude_source_queue_delay ? source_wait : 0.0);
  }
};

// Poisson task count for one LEO and one slot.
int ftp3_arrivals(double rate, Rng& rng);

// (D_max, Q_min) drawn uniformly from the configured ranges.
std::pair<double, double> sample_constraints(Rng& rng, const ScenarioConfig& cfg);

// Sets the immutable mode, the per-hop payload, and the encode timer.
void bind_mode(Task& task, ModeId mode, const ScenarioConfig& cfg);

// Advances one task by dt: encode/decode timers count down, transmission
// stages drain bits_remaining at hop_rate (floored at zero; the stage
// advances on exact drain), and the deadline check runs last. At most one
// stage transition happens per tick. Throws on negative dt or terminal input.
Task tick(Task task, double dt, double hop_rate, const ScenarioConfig& cfg);

// Wrapper matching the mode-selection contract: modes with enough quality
// for the task whose estimated delay fits its deadline.
std::vector<ModeId> feasible_modes(const Task& task, std::span<const double> est_hop_rates,
                                   const ScenarioConfig& cfg);

}  // namespace sagin
