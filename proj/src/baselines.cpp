#include "sagin/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>

namespace sagin {

namespace {

class RandomPolicy final : public Policy {
 public:
  Action act(const Environment& env, Rng& rng) override {
    const ScenarioConfig& cfg = env.config();
    const EnvState& st = env.state();
    const double time = st.sim_time(cfg);
    Action a = empty_action(cfg);

    std::vector<int> visible;
    for (int k = 0; k < cfg.K; ++k)
      if (pass_visible(pass_advanced_to(st.geo.passes[k], time), time)) visible.push_back(k);

    for (int n = 0; n < cfg.N; ++n) {
      const std::uint64_t pick = rng.uniform_int(visible.size() + 1);
      a.uav_leo[n] = pick == 0 ? -1 : visible[pick - 1];
    }
    for (int m = 0; m < cfg.M; ++m)
      a.user_uav[m] = static_cast<int>(rng.uniform_int(cfg.N + 1)) - 1;
    for (int i = 0; i < cfg.K; ++i) {
      const int c = static_cast<int>(rng.uniform_int(cfg.K));  // 0 none, else other sats
      a.isl[i] = c == 0 ? -1 : (c - 1 < i ? c - 1 : c);
    }
    for (int n = 0; n < cfg.N; ++n)
      a.uav_vel[n] = {rng.uniform(-cfg.v_max, cfg.v_max), rng.uniform(-cfg.v_max, cfg.v_max),
                      rng.uniform(-cfg.v_max, cfg.v_max)};
    for (int w = 0; w < cfg.task_window; ++w)
      a.mode[w] = static_cast<ModeId>(rng.uniform_int(kNumModes));
    return a;
  }

  std::string name() const override { return "random"; }
};

class GreedyPolicy final : public Policy {
 public:
  explicit GreedyPolicy(std::optional<ModeId> forced) : forced_(forced) {}

  Action act(const Environment& env, Rng& rng) override {
    (void)rng;
    const ScenarioConfig& cfg = env.config();
    const EnvState& st = env.state();
    const double time = st.sim_time(cfg);
    Action a = empty_action(cfg);

    // Users pair with the nearest UAV.
    for (int m = 0; m < cfg.M; ++m) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int n = 0; n < cfg.N; ++n) {
        const double d = distance(st.geo.uav_pos[n], st.geo.user_pos[m]);
        if (d < best_d) {
          best_d = d;
          best = n;
        }
      }
      a.user_uav[m] = best;
    }

    // Visible satellite with the highest elevation; ties to the lowest id.
    std::vector<double> elev(cfg.K, -1.0);
    int best_leo = -1;
    for (int k = 0; k < cfg.K; ++k) {
      const LeoPass p = pass_advanced_to(st.geo.passes[k], time);
      if (!pass_visible(p, time)) continue;
      elev[k] = elevation_at(p, time, cfg.tau_min_elev);
      if (best_leo < 0 || elev[k] > elev[best_leo]) best_leo = k;
    }
    for (int n = 0; n < cfg.N; ++n) a.uav_leo[n] = best_leo;

    // Gather all traffic at the serving satellite: every other LEO forwards
    // there, so new arrivals route at admission and stragglers get rescued.
    if (best_leo >= 0)
      for (int i = 0; i < cfg.K; ++i)
        if (i != best_leo) a.isl[i] = best_leo;

    // Fly toward the centroid of the users this UAV currently serves.
    for (int n = 0; n < cfg.N; ++n) {
      Vec3 centroid{};
      int count = 0;
      for (int m = 0; m < cfg.M; ++m)
        if (a.user_uav[m] == n) {
          centroid = centroid + st.geo.user_pos[m];
          ++count;
        }
      if (count == 0) continue;
      centroid = centroid * (1.0 / count);
      Vec3 delta = centroid - st.geo.uav_pos[n];
      delta.z = 0.0;  // hold altitude
      const double d = delta.norm();
      if (d > 1e-9) a.uav_vel[n] = delta * (std::min(cfg.v_max, d / cfg.slot_dt) / d);
    }

    // Mode per pending window task: feasible mode with the best estimated
    // score under current-rate estimates.
    const auto window = window_task_ids(cfg, st);
    for (int idx = 0; idx < static_cast<int>(window.size()); ++idx) {
      const Task& tk = st.tasks[window[idx]];
      if (tk.mode_bound) continue;
      if (forced_) {
        a.mode[idx] = *forced_;
        continue;
      }
      a.mode[idx] = pick_mode(cfg, st, a, tk, best_leo, time);
    }
    return a;
  }

  std::string name() const override {
    return forced_ ? std::string("mode:") + mode_name(*forced_) : "greedy";
  }

 private:
  static double sat_rate_estimate(const ScenarioConfig& cfg, double elev) {
    const double d = slant_range(elev, cfg.d_E, cfg.d_k);
    const Complex h = sat_uav_coeff(cfg.sigma_gain, cfg.wavelength(), d, 0.0);
    return shannon_rate(cfg.B_su, cfg.P_S, std::norm(h), cfg.noise_W);
  }

  ModeId pick_mode(const ScenarioConfig& cfg, const EnvState& st, const Action& a,
                   const Task& tk, int best_leo, double time) const {
    // Hop-rate estimates for this task's would-be chain.
    std::vector<double> hops;
    const int leo = tk.at_leo;
    if (best_leo >= 0 && leo != best_leo && a.isl[leo] >= 0)
      hops.push_back(isl_rate(cfg.B_isl, cfg.P_S, cfg.eta_max,
                              st.isl_dist_m[leo * cfg.K + a.isl[leo]], cfg.f_I, cfg));
    const double elev_used = best_leo >= 0
                                 ? elevation_at(pass_advanced_to(st.geo.passes[best_leo], time),
                                                time, cfg.tau_min_elev)
                                 : cfg.tau_min_elev;
    hops.push_back(sat_rate_estimate(cfg, elev_used));
    const int uav = a.user_uav[tk.dst_user];
    std::vector<bool> only(cfg.N, false);
    only[uav] = true;
    std::vector<Complex> toward(cfg.N);
    for (int i = 0; i < cfg.N; ++i) toward[i] = st.gains[i * cfg.M + tk.dst_user];
    hops.push_back(uav_ground_rate(tk.dst_user, uav, toward, only, cfg));

    const double budget = tk.d_max - tk.elapsed;
    const auto feasible = feasible_modes(tk.q_min, std::max(budget, 0.0), hops, cfg);
    const SceWeights w = sce_weights(cfg);
    if (!feasible.empty()) {
      ModeId best = feasible.front();
      double best_score = -std::numeric_limits<double>::infinity();
      for (const ModeId m : feasible) {
        double est = mode_compute_delay(m, cfg);
        for (const double r : hops) est += mode_payload(m, cfg) / r;
        const double score = sce(mode_quality(m, cfg), tk.q_min, tk.elapsed + est, tk.d_max, w);
        if (score > best_score) {
          best_score = score;
          best = m;
        }
      }
      return best;
    }
    // Nothing fits: take the highest-quality mode that at least meets the
    // quality floor, otherwise fall back to full bitstream.
    for (const ModeId m : {ModeId::M1, ModeId::M3_3, ModeId::M3_2, ModeId::M3_1, ModeId::M2})
      if (mode_quality(m, cfg) >= tk.q_min) return m;
    return ModeId::M1;
  }

  std::optional<ModeId> forced_;
};

}  // namespace

std::unique_ptr<Policy> make_random_policy() { return std::make_unique<RandomPolicy>(); }

std::unique_ptr<Policy> make_greedy_policy() {
  return std::make_unique<GreedyPolicy>(std::nullopt);
}

std::unique_ptr<Policy> make_fixed_mode_policy(ModeId mode) {
  return std::make_unique<GreedyPolicy>(mode);
}

Action DsacPolicy::act(const Environment& env, Rng& rng) {
  const auto obs = env.observe();
  const SampledAction s = agent_.act(obs, stochastic_, rng);
  return action_from_sample(action_spec(env.config()), env.config(), s);
}

std::unique_ptr<Policy> make_policy(const std::string& spec, const ScenarioConfig& cfg) {
  if (spec == "random") return make_random_policy();
  if (spec == "greedy") return make_greedy_policy();
  if (spec.rfind("mode:", 0) == 0)
    return make_fixed_mode_policy(mode_from_name(spec.substr(5)));
  if (!std::filesystem::exists(spec))
    throw ScenarioError("policy '" + spec + "' is not a baseline name or checkpoint file");
  DsacAgent agent = DsacAgent::load(spec, cfg.learner);
  if (agent.obs_dim() != observation_dim(cfg))
    throw ScenarioError("checkpoint '" + spec + "' does not match this scenario's dimensions");
  return std::make_unique<DsacPolicy>(std::move(agent), false);
}

}  // namespace sagin
