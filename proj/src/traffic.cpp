#include "sagin/traffic.hpp"

#include <stdexcept>

namespace sagin {

const char* stage_name(TaskStage s) {
  switch (s) {
    case TaskStage::QueuedAtLeo: return "queued-at-leo";
    case TaskStage::IslInFlight: return "isl-in-flight";
    case TaskStage::AtRelayLeo: return "at-relay-leo";
    case TaskStage::SatToUav: return "sat-to-uav";
    case TaskStage::UavToUser: return "uav-to-user";
    case TaskStage::Decoding: return "decoding";
    case TaskStage::Done: return "done";
    case TaskStage::Failed: return "failed";
  }
  return "?";
}

int ftp3_arrivals(double rate, Rng& rng) {
  if (rate < 0) throw std::invalid_argument("ftp3_arrivals: rate must be >= 0");
  return static_cast<int>(rng.poisson(rate));
}

std::pair<double, double> sample_constraints(Rng& rng, const ScenarioConfig& cfg) {
  const double d_max = rng.uniform(cfg.task.d_max_lo, cfg.task.d_max_hi);
  const double q_min = rng.uniform(cfg.task.q_min_lo, cfg.task.q_min_hi);
  return {d_max, q_min};
}

void bind_mode(Task& task, ModeId mode, const ScenarioConfig& cfg) {
  task.mode_bound = true;
  task.mode = mode;
  task.payload_bits = mode_payload(mode, cfg);
  task.compute_remaining = cfg.task.encode_split * mode_compute_delay(mode, cfg);
}

Task tick(Task task, double dt, double hop_rate, const ScenarioConfig& cfg) {
  if (dt < 0) throw std::invalid_argument("tick: dt must be >= 0");
  if (task.terminal()) throw std::logic_error("tick: task already terminal");

  task.elapsed += dt;

  switch (task.stage) {
    case TaskStage::QueuedAtLeo:
    case TaskStage::AtRelayLeo:
      if (task.mode_bound && task.compute_remaining > 0.0) {
        task.compute_remaining = std::max(0.0, task.compute_remaining - dt);
      } else if (task.stage == TaskStage::QueuedAtLeo) {
        task.source_wait += dt;  // unbound or ready-but-untransmitted at the source
      }
      break;
    case TaskStage::IslInFlight:
    case TaskStage::SatToUav:
    case TaskStage::UavToUser:
      task.bits_remaining = std::max(0.0, task.bits_remaining - hop_rate * dt);
      if (task.bits_remaining == 0.0) {
        if (task.stage == TaskStage::IslInFlight) {
          task.stage = TaskStage::AtRelayLeo;
          task.at_leo = task.relay_leo;
          task.forwarded = true;
        } else if (task.stage == TaskStage::SatToUav) {
          // bits for the air hop load when the task joins that queue
          task.stage = TaskStage::UavToUser;
        } else {
          task.stage = TaskStage::Decoding;
          task.compute_remaining =
              (1.0 - cfg.task.encode_split) * mode_compute_delay(task.mode, cfg);
        }
      }
      break;
    case TaskStage::Decoding:
      // hop_rate doubles as the service flag: only the decode-queue head runs.
      if (hop_rate > 0.0) {
        task.compute_remaining = std::max(0.0, task.compute_remaining - dt);
        if (task.compute_remaining == 0.0) {
          task.stage = TaskStage::Done;
          task.achieved_q = mode_quality(task.mode, cfg);
        }
      }
      break;
    default:
      break;
  }

  if (!task.terminal() && task.effective_delay(cfg) > task.d_max)
    task.stage = TaskStage::Failed;
  return task;
}

std::vector<ModeId> feasible_modes(const Task& task, std::span<const double> est_hop_rates,
                                   const ScenarioConfig& cfg) {
  return feasible_modes(task.q_min, task.d_max, est_hop_rates, cfg);
}

}  // namespace sagin
