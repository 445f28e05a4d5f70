#include "sagin/env.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sagin {

namespace {

constexpr std::uint64_t kStreamLosPhase = 0x4c4f53;
constexpr std::uint64_t kStreamChannel = 0x4348414e;
constexpr std::uint64_t kStreamArrivals = 0x41525256;

bool leo_visible_at(const LeoPass& pass, double time) {
  return pass_visible(pass_advanced_to(pass, time), time);
}

// Removes one id from a queue wherever it sits (used for failed tasks).
void erase_id(std::deque<int>& q, int id) {
  const auto it = std::find(q.begin(), q.end(), id);
  if (it != q.end()) q.erase(it);
}

void remove_from_queue(ServiceQueues& queues, const ScenarioConfig& cfg, int id,
                       TaskStage pre_stage, int pre_leo, int pre_uav, int dst_user) {
  switch (pre_stage) {
    case TaskStage::IslInFlight:
      erase_id(queues.isl[pre_leo], id);
      break;
    case TaskStage::SatToUav:
      erase_id(queues.sat_uav[pre_leo * cfg.N + pre_uav], id);
      break;
    case TaskStage::UavToUser:
      erase_id(queues.uav_user[pre_uav * cfg.M + dst_user], id);
      break;
    case TaskStage::Decoding:
      erase_id(queues.decode[dst_user], id);
      break;
    default:
      break;  // not in any queue
  }
}

}  // namespace

Action empty_action(const ScenarioConfig& cfg) {
  Action a;
  a.uav_leo.assign(cfg.N, -1);
  a.user_uav.assign(cfg.M, -1);
  a.isl.assign(cfg.K, -1);
  a.uav_vel.assign(cfg.N, Vec3{});
  a.mode.assign(cfg.task_window, ModeId::M1);
  return a;
}

std::vector<int> ActionSpec::head_sizes() const {
  std::vector<int> sizes;
  for (int i = 0; i < n_uav_heads; ++i) sizes.push_back(uav_head_size);
  for (int i = 0; i < n_user_heads; ++i) sizes.push_back(user_head_size);
  for (int i = 0; i < n_isl_heads; ++i) sizes.push_back(isl_head_size);
  for (int i = 0; i < n_mode_heads; ++i) sizes.push_back(mode_head_size);
  return sizes;
}

int ActionSpec::flat_action_dim() const {
  const auto sizes = head_sizes();
  return n_cont + std::accumulate(sizes.begin(), sizes.end(), 0);
}

ActionSpec action_spec(const ScenarioConfig& cfg) {
  ActionSpec spec;
  spec.n_uav_heads = cfg.N;
  spec.uav_head_size = cfg.K + 1;
  spec.n_user_heads = cfg.M;
  spec.user_head_size = cfg.N + 1;
  spec.n_isl_heads = cfg.K;
  spec.isl_head_size = cfg.K;  // none plus the K-1 other satellites
  spec.n_mode_heads = cfg.task_window;
  spec.mode_head_size = kNumModes;
  spec.n_cont = 3 * cfg.N;
  return spec;
}

EnvState reset(const ScenarioConfig& cfg, std::uint64_t seed) {
  EnvState s;
  s.episode_seed = seed;
  const Rng root(seed);

  s.geo = initial_geometry(cfg, root);

  s.isl_dist_m.assign(static_cast<std::size_t>(cfg.K) * cfg.K, 0.0);
  for (int i = 0; i < cfg.K; ++i)
    for (int j = i + 1; j < cfg.K; ++j) {
      const double d = isl_distance(i, j, root, cfg);
      s.isl_dist_m[i * cfg.K + j] = d;
      s.isl_dist_m[j * cfg.K + i] = d;
    }

  Rng los = root.derive(kStreamLosPhase);
  s.los_phase.resize(static_cast<std::size_t>(cfg.N) * cfg.M);
  for (auto& p : s.los_phase) p = los.uniform(0.0, 2.0 * M_PI);

  Rng ch = root.derive(mix_seed(kStreamChannel, ~0ULL));
  s.gains.resize(static_cast<std::size_t>(cfg.N) * cfg.M);
  for (int n = 0; n < cfg.N; ++n)
    for (int m = 0; m < cfg.M; ++m) {
      const double d = distance(s.geo.uav_pos[n], s.geo.user_pos[m]);
      s.gains[n * cfg.M + m] =
          uav_ground_coeff(cfg.mu, d, cfg.kappa_L, cfg.kappa_N, s.los_phase[n * cfg.M + m], ch);
    }

  s.queues.isl.resize(cfg.K);
  s.queues.sat_uav.resize(static_cast<std::size_t>(cfg.K) * cfg.N);
  s.queues.uav_user.resize(static_cast<std::size_t>(cfg.N) * cfg.M);
  s.queues.decode.resize(cfg.M);
  return s;
}

Action project_action(const ScenarioConfig& cfg, const EnvState& state, const Action& raw) {
  if (static_cast<int>(raw.uav_leo.size()) != cfg.N ||
      static_cast<int>(raw.user_uav.size()) != cfg.M ||
      static_cast<int>(raw.isl.size()) != cfg.K ||
      static_cast<int>(raw.uav_vel.size()) != cfg.N ||
      static_cast<int>(raw.mode.size()) != cfg.task_window)
    throw std::invalid_argument("project_action: action shape does not match scenario");

  Action a = raw;
  const double time = state.sim_time(cfg);
  for (int n = 0; n < cfg.N; ++n) {
    int& k = a.uav_leo[n];
    if (k < -1 || k >= cfg.K) k = -1;
    if (k >= 0 && !leo_visible_at(state.geo.passes[k], time)) k = -1;
  }
  for (int m = 0; m < cfg.M; ++m) {
    int& n = a.user_uav[m];
    if (n < -1 || n >= cfg.N) n = -1;
  }
  for (int i = 0; i < cfg.K; ++i) {
    int& j = a.isl[i];
    if (j < -1 || j >= cfg.K || j == i) j = -1;
  }
  for (int n = 0; n < cfg.N; ++n) {
    const double speed = a.uav_vel[n].norm();
    if (speed > cfg.v_max) a.uav_vel[n] = a.uav_vel[n] * (cfg.v_max / speed);
  }
  return a;
}

StepResult step(const ScenarioConfig& cfg, const EnvState& state, const Action& raw,
                const Rng& rng) {
  if (state.done) throw std::logic_error("step: environment episode already finished");

  const Action proj = project_action(cfg, state, raw);

  StepResult result;
  result.projected = !(proj == raw);
  EnvState& next = result.next;
  next = state;

  const double dt = cfg.slot_dt;
  const double time = state.sim_time(cfg);
  const std::uint64_t slot = static_cast<std::uint64_t>(state.t);
  std::vector<int> failed_now;

  // 1. Bind modes for pending tasks in the observation window the caller saw.
  {
    const auto window = window_task_ids(cfg, state);
    for (int idx = 0; idx < static_cast<int>(window.size()); ++idx) {
      Task& tk = next.tasks[window[idx]];
      if (tk.mode_bound) continue;
      bind_mode(tk, proj.mode[idx], cfg);
      if (mode_quality(tk.mode, cfg) < tk.q_min) {
        // No amount of transmission can meet the quality floor: the task is
        // unservable under this binding and fails on the spot.
        tk.stage = TaskStage::Failed;
        failed_now.push_back(tk.id);
      }
    }
  }

  // 2. UAV motion.
  for (int n = 0; n < cfg.N; ++n)
    next.geo.uav_pos[n] = advance_uav(next.geo.uav_pos[n], proj.uav_vel[n], dt, cfg);

  // 3. Pass timers.
  for (auto& pass : next.geo.passes) pass = pass_advanced_to(pass, time);
  next.geo.t = state.t;

  // 4. Per-slot channel draws (fixed order: air-ground first, then satellites).
  Rng ch = rng.derive(mix_seed(kStreamChannel, slot));
  for (int n = 0; n < cfg.N; ++n)
    for (int m = 0; m < cfg.M; ++m) {
      const double d = distance(next.geo.uav_pos[n], next.geo.user_pos[m]);
      next.gains[n * cfg.M + m] =
          uav_ground_coeff(cfg.mu, d, cfg.kappa_L, cfg.kappa_N, next.los_phase[n * cfg.M + m], ch);
    }
  std::vector<double> sat_rate(static_cast<std::size_t>(cfg.K) * cfg.N, 0.0);
  const double lambda = cfg.wavelength();
  for (int k = 0; k < cfg.K; ++k) {
    const LeoPass& pass = next.geo.passes[k];
    if (!pass_visible(pass, time)) continue;
    const double elev = elevation_at(pass, time, cfg.tau_min_elev);
    const double d = slant_range(elev, cfg.d_E, cfg.d_k);
    const double nu = ch.uniform(0.0, 2.0 * M_PI);
    const double delta = correlation_delta(cfg.doppler_hz, d / cfg.v_c);
    for (int n = 0; n < cfg.N; ++n) {
      const Complex h_hat = sat_uav_coeff(cfg.sigma_gain, lambda, d, nu);
      const Complex h = outdate_csi(h_hat, delta, ch);
      sat_rate[k * cfg.N + n] = shannon_rate(cfg.B_su, cfg.P_S, std::norm(h), cfg.noise_W);
    }
  }

  // 5. Arrivals; modes stay pending until the task shows up in the window.
  if (next.admitted < cfg.G) {
    Rng arr = rng.derive(mix_seed(kStreamArrivals, slot));
    for (int k = 0; k < cfg.K && next.admitted < cfg.G; ++k) {
      const int count = ftp3_arrivals(cfg.arrival_rate, arr);
      for (int c = 0; c < count && next.admitted < cfg.G; ++c) {
        Task tk;
        tk.id = next.admitted;
        tk.src_leo = k;
        tk.at_leo = k;
        tk.dst_user = static_cast<int>(arr.uniform_int(static_cast<std::uint64_t>(cfg.M)));
        const auto [d_max, q_min] = sample_constraints(arr, cfg);
        tk.d_max = d_max;
        tk.q_min = q_min;
        tk.arrival_slot = state.t;
        tk.payload_bits_original = cfg.image_bits;
        if (proj.isl[k] >= 0) tk.relay_leo = proj.isl[k];
        next.tasks.push_back(tk);
        ++next.admitted;
      }
    }
  }

  // 6a. ISL routing of one waiting task per satellite that selected a relay.
  for (int i = 0; i < cfg.K; ++i) {
    const int j = proj.isl[i];
    if (j < 0) continue;
    for (Task& tk : next.tasks) {
      if (tk.terminal() || tk.stage != TaskStage::QueuedAtLeo) continue;
      if (tk.at_leo != i || tk.relay_leo >= 0 || tk.forwarded || !tk.mode_bound) continue;
      tk.relay_leo = j;
      break;
    }
  }

  // 6b. Hop binding for ready tasks, admission order.
  for (Task& tk : next.tasks) {
    if (tk.terminal() || !tk.mode_bound || tk.compute_remaining > 0.0) continue;
    if (tk.stage == TaskStage::QueuedAtLeo && tk.relay_leo >= 0 && !tk.forwarded) {
      tk.stage = TaskStage::IslInFlight;
      tk.bits_remaining = tk.payload_bits;
      next.queues.isl[tk.at_leo].push_back(tk.id);
      continue;
    }
    if (tk.stage != TaskStage::QueuedAtLeo && tk.stage != TaskStage::AtRelayLeo) continue;
    if (!pass_visible(next.geo.passes[tk.at_leo], time)) continue;
    int pick = -1;
    const int serving = proj.user_uav[tk.dst_user];
    if (serving >= 0 && proj.uav_leo[serving] == tk.at_leo) {
      pick = serving;
    } else {
      for (int n = 0; n < cfg.N; ++n)
        if (proj.uav_leo[n] == tk.at_leo) {
          pick = n;
          break;
        }
    }
    if (pick < 0) continue;
    tk.bound_uav = pick;
    tk.stage = TaskStage::SatToUav;
    tk.bits_remaining = tk.payload_bits;
    next.queues.sat_uav[tk.at_leo * cfg.N + pick].push_back(tk.id);
  }

  // 7. Serve queue heads: per-task rates, zero for everyone else.
  std::vector<double> rate(next.tasks.size(), 0.0);
  for (int i = 0; i < cfg.K; ++i) {
    if (next.queues.isl[i].empty()) continue;
    const int head = next.queues.isl[i].front();
    const Task& tk = next.tasks[head];
    rate[head] = isl_rate(cfg.B_isl, cfg.P_S, cfg.eta_max, next.isl_dist_m[i * cfg.K + tk.relay_leo],
                          cfg.f_I, cfg);
  }
  for (int k = 0; k < cfg.K; ++k)
    for (int n = 0; n < cfg.N; ++n) {
      const auto& q = next.queues.sat_uav[k * cfg.N + n];
      if (q.empty() || proj.uav_leo[n] != k) continue;
      rate[q.front()] = sat_rate[k * cfg.N + n];
    }
  std::vector<bool> uav_active(cfg.N, false);
  for (int n = 0; n < cfg.N; ++n)
    for (int m = 0; m < cfg.M; ++m)
      if (proj.user_uav[m] == n && !next.queues.uav_user[n * cfg.M + m].empty())
        uav_active[n] = true;
  std::vector<Complex> toward_user(cfg.N);
  for (int n = 0; n < cfg.N; ++n)
    for (int m = 0; m < cfg.M; ++m) {
      const auto& q = next.queues.uav_user[n * cfg.M + m];
      if (q.empty() || proj.user_uav[m] != n) continue;
      for (int i = 0; i < cfg.N; ++i) toward_user[i] = next.gains[i * cfg.M + m];
      rate[q.front()] = uav_ground_rate(m, n, toward_user, uav_active, cfg);
    }
  // Decode heads: hop_rate doubles as a service flag for compute stages.
  std::vector<double> decode_flag(next.tasks.size(), 0.0);
  for (int m = 0; m < cfg.M; ++m)
    if (!next.queues.decode[m].empty()) decode_flag[next.queues.decode[m].front()] = 1.0;

  // 8. Advance every live task once; snapshot pre-tick routing for queue upkeep.
  struct Pre {
    TaskStage stage;
    int at_leo;
    int bound_uav;
  };
  std::vector<Pre> pre(next.tasks.size());
  for (const Task& tk : next.tasks)
    if (tk.id >= 0 && static_cast<std::size_t>(tk.id) < pre.size())
      pre[tk.id] = {tk.stage, tk.at_leo, tk.bound_uav};
  for (Task& tk : next.tasks) {
    if (tk.terminal()) continue;
    const double r = tk.stage == TaskStage::Decoding ? decode_flag[tk.id] : rate[tk.id];
    tk = tick(tk, dt, r, cfg);
  }

  // 9. Queue transitions, completions, failures.
  for (Task& tk : next.tasks) {
    const Pre& p = pre[tk.id];
    if (tk.stage == TaskStage::Failed && p.stage != TaskStage::Failed) {
      remove_from_queue(next.queues, cfg, tk.id, p.stage, p.at_leo, p.bound_uav, tk.dst_user);
      if (std::find(failed_now.begin(), failed_now.end(), tk.id) == failed_now.end())
        failed_now.push_back(tk.id);
      continue;
    }
    if (tk.stage == p.stage) continue;
    switch (p.stage) {
      case TaskStage::IslInFlight:
        assert(next.queues.isl[p.at_leo].front() == tk.id);
        next.queues.isl[p.at_leo].pop_front();
        break;
      case TaskStage::SatToUav:
        assert(next.queues.sat_uav[p.at_leo * cfg.N + p.bound_uav].front() == tk.id);
        next.queues.sat_uav[p.at_leo * cfg.N + p.bound_uav].pop_front();
        tk.bits_remaining = tk.payload_bits;  // air hop loads on enqueue
        next.queues.uav_user[p.bound_uav * cfg.M + tk.dst_user].push_back(tk.id);
        break;
      case TaskStage::UavToUser:
        assert(next.queues.uav_user[p.bound_uav * cfg.M + tk.dst_user].front() == tk.id);
        next.queues.uav_user[p.bound_uav * cfg.M + tk.dst_user].pop_front();
        next.queues.decode[tk.dst_user].push_back(tk.id);
        break;
      case TaskStage::Decoding: {
        assert(next.queues.decode[tk.dst_user].front() == tk.id);
        next.queues.decode[tk.dst_user].pop_front();
        const double score = sce(tk.achieved_q, tk.q_min, tk.effective_delay(cfg), tk.d_max,
                                 sce_weights(cfg));
        result.completed.emplace_back(tk.id, score);
        break;
      }
      default:
        break;  // QueuedAtLeo / AtRelayLeo transitions were queue pushes above
    }
  }

  // 10. Slot score: completed task values minus the unit constraint penalty.
  // Projection repairs feasibility before execution, so the penalty covers
  // the violations that manifest dynamically: deadline breaches and
  // unservable quality floors.
  result.failed = failed_now;
  result.violated = !failed_now.empty();
  double reward = 0.0;
  for (const auto& [id, score] : result.completed) reward += score;
  if (result.violated) reward -= 1.0;
  result.reward = reward;

  // 11. Episode bookkeeping.
  next.t = state.t + 1;
  next.geo.t = next.t;
  bool all_terminal = next.admitted >= cfg.G;
  if (all_terminal)
    for (const Task& tk : next.tasks)
      if (!tk.terminal()) {
        all_terminal = false;
        break;
      }
  next.done = all_terminal || next.t >= cfg.horizon;
  result.done = next.done;
  return result;
}

std::vector<int> window_task_ids(const ScenarioConfig& cfg, const EnvState& state) {
  std::vector<int> ids;
  for (const Task& tk : state.tasks) {
    if (tk.terminal()) continue;
    ids.push_back(tk.id);
    if (static_cast<int>(ids.size()) >= cfg.task_window) break;
  }
  return ids;
}

int observation_dim(const ScenarioConfig& cfg) {
  return 1 + 3 * cfg.N + cfg.N * cfg.M + cfg.task_window * (4 + kNumStages);
}

std::vector<double> observe(const ScenarioConfig& cfg, const EnvState& state) {
  std::vector<double> obs;
  obs.reserve(observation_dim(cfg));
  obs.push_back(static_cast<double>(state.t) / cfg.horizon);

  const double world_x = cfg.N * cfg.area_spacing;
  for (int n = 0; n < cfg.N; ++n) {
    const Vec3& p = state.geo.uav_pos[n];
    obs.push_back(p.x / world_x);
    obs.push_back(p.y / cfg.area_spacing);
    obs.push_back((p.z - cfg.z_min) / (cfg.z_max - cfg.z_min));
  }

  for (int n = 0; n < cfg.N; ++n)
    for (int m = 0; m < cfg.M; ++m) {
      const double g = std::max(std::norm(state.gains[n * cfg.M + m]), 1e-30);
      const double db = 10.0 * std::log10(g);
      obs.push_back(std::clamp((db + 100.0) / 100.0, 0.0, 1.0));
    }

  const SceWeights w = sce_weights(cfg);
  const auto window = window_task_ids(cfg, state);
  for (int idx = 0; idx < cfg.task_window; ++idx) {
    if (idx < static_cast<int>(window.size())) {
      const Task& tk = state.tasks[window[idx]];
      obs.push_back(normalize_q(tk.q_min, w));
      obs.push_back(std::clamp(tk.d_max / cfg.d_scale, 0.0, 1.0));
      obs.push_back(std::clamp(tk.elapsed / tk.d_max, 0.0, 1.0));
      double bits_frac = 0.0;
      if (tk.mode_bound) {
        switch (tk.stage) {
          case TaskStage::QueuedAtLeo:
          case TaskStage::AtRelayLeo:
            bits_frac = 1.0;
            break;
          case TaskStage::IslInFlight:
          case TaskStage::SatToUav:
          case TaskStage::UavToUser:
            bits_frac = tk.bits_remaining / tk.payload_bits;
            break;
          default:
            break;
        }
      }
      obs.push_back(bits_frac);
      for (int s = 0; s < kNumStages; ++s)
        obs.push_back(s == static_cast<int>(tk.stage) ? 1.0 : 0.0);
    } else {
      for (int j = 0; j < 4 + kNumStages; ++j) obs.push_back(0.0);
    }
  }
  return obs;
}

Environment::Environment(ScenarioConfig cfg) : cfg_(std::move(cfg)), rng_(cfg_.seed) {
  state_ = sagin::reset(cfg_, cfg_.seed);
}

void Environment::reset(std::uint64_t seed) {
  state_ = sagin::reset(cfg_, seed);
  rng_ = Rng(seed);
}

StepResult Environment::step(const Action& action) {
  StepResult r = sagin::step(cfg_, state_, action, rng_);
  state_ = r.next;
  return r;
}

int Environment::inject_task(int src_leo, int dst_user, ModeId mode, double d_max,
                             double q_min) {
  if (src_leo < 0 || src_leo >= cfg_.K || dst_user < 0 || dst_user >= cfg_.M)
    throw std::invalid_argument("inject_task: ids out of range");
  Task tk;
  tk.id = state_.admitted;
  tk.src_leo = src_leo;
  tk.at_leo = src_leo;
  tk.dst_user = dst_user;
  tk.d_max = d_max;
  tk.q_min = q_min;
  tk.arrival_slot = state_.t;
  tk.payload_bits_original = cfg_.image_bits;
  bind_mode(tk, mode, cfg_);
  state_.tasks.push_back(tk);
  ++state_.admitted;
  return tk.id;
}

}  // namespace sagin
