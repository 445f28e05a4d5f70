#include "sagin/agent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sagin {

namespace {

constexpr double kLogStdMin = -20.0;
constexpr double kLogStdMax = 2.0;
constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2 pi)

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

// log(1 - tanh(pre)^2), evaluated without cancellation.
double log_one_minus_tanh_sq(double pre) {
  return 2.0 * (std::log(2.0) - pre - softplus(-2.0 * pre));
}

std::vector<double> softmax(const std::vector<double>& logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (auto& v : p) v /= sum;
  return p;
}

std::vector<double> log_softmax(const std::vector<double>& logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (const double l : logits) sum += std::exp(l - mx);
  const double lse = mx + std::log(sum);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

int argmax_first(const std::vector<double>& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

int sample_categorical(const std::vector<double>& probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (int i = 0; i < static_cast<int>(probs.size()); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return static_cast<int>(probs.size()) - 1;
}

}  // namespace

int ActionLayout::flat_dim() const {
  return n_cont + std::accumulate(head_sizes.begin(), head_sizes.end(), 0);
}

int ActionLayout::policy_out_dim() const {
  return 2 * n_cont + std::accumulate(head_sizes.begin(), head_sizes.end(), 0);
}

ActionLayout layout_from_spec(const ActionSpec& spec) {
  ActionLayout lay;
  lay.n_cont = spec.n_cont;
  lay.head_sizes = spec.head_sizes();
  return lay;
}

NllGrads gaussian_nll_grads(double target, double j, double sigma_raw, double floor) {
  NllGrads out;
  const double sigma = std::max(sigma_raw, floor);
  const double r = target - j;
  out.loss = 0.5 * (r / sigma) * (r / sigma) + std::log(sigma) + kHalfLog2Pi;
  out.d_j = -r / (sigma * sigma);
  const double d_sigma = 1.0 / sigma - r * r / (sigma * sigma * sigma);
  out.d_sigma_raw = sigma_raw > floor ? d_sigma : 0.0;
  return out;
}

double clip_target(double y, double j, double bound) {
  if (bound <= 0) throw std::invalid_argument("clip_target: bound must be positive");
  return std::clamp(y, j - bound, j + bound);
}

DsacAgent::DsacAgent(int obs_dim, ActionLayout layout, LearnerConfig cfg, std::uint64_t seed)
    : obs_dim_(obs_dim), layout_(std::move(layout)), lc_(cfg) {
  Rng root(seed);
  Rng rp = root.derive(1);
  Rng rc1 = root.derive(2);
  Rng rc2 = root.derive(3);
  policy_ = make_mlp(obs_dim_, lc_.hidden_width, lc_.hidden_layers, layout_.policy_out_dim(), rp);
  const int critic_in = obs_dim_ + layout_.flat_dim();
  critic1_ = make_mlp(critic_in, lc_.hidden_width, lc_.hidden_layers, 2, rc1);
  critic2_ = make_mlp(critic_in, lc_.hidden_width, lc_.hidden_layers, 2, rc2);
  // Start the std channel above the floor, otherwise the max() clamp zeroes
  // its gradient and the spread can never be learned.
  critic1_.layers.back().b[1] = lc_.std_floor + 1.0;
  critic2_.layers.back().b[1] = lc_.std_floor + 1.0;
  target_policy_ = policy_;
  target_critic1_ = critic1_;
  target_critic2_ = critic2_;
  opt_policy_ = make_adam(policy_);
  opt_critic1_ = make_adam(critic1_);
  opt_critic2_ = make_adam(critic2_);
}

void DsacAgent::sync_targets() {
  target_policy_ = policy_;
  target_critic1_ = critic1_;
  target_critic2_ = critic2_;
}

DsacAgent::PolicyOut DsacAgent::split_policy(const std::vector<double>& raw) const {
  PolicyOut out;
  out.mean.assign(raw.begin(), raw.begin() + layout_.n_cont);
  out.log_std.resize(layout_.n_cont);
  for (int i = 0; i < layout_.n_cont; ++i)
    out.log_std[i] = std::clamp(raw[layout_.n_cont + i], kLogStdMin, kLogStdMax);
  int off = 2 * layout_.n_cont;
  out.logits.resize(layout_.head_sizes.size());
  for (std::size_t h = 0; h < layout_.head_sizes.size(); ++h) {
    out.logits[h].assign(raw.begin() + off, raw.begin() + off + layout_.head_sizes[h]);
    off += layout_.head_sizes[h];
  }
  return out;
}

namespace {

// Shared draw path; `net` is the online or the target policy.
SampledAction act_with(const DenseNet& net, const ActionLayout& layout,
                       std::span<const double> obs, bool stochastic, Rng& rng) {
  const auto raw = forward(net, obs);
  SampledAction s;
  s.cont.resize(layout.n_cont);
  s.cont_pre.resize(layout.n_cont);
  double lp = 0.0;
  for (int i = 0; i < layout.n_cont; ++i) {
    const double mean = raw[i];
    const double ls = std::clamp(raw[layout.n_cont + i], kLogStdMin, kLogStdMax);
    const double std_i = std::exp(ls);
    const double pre = stochastic ? mean + std_i * rng.normal() : mean;
    const double z = (pre - mean) / std_i;
    s.cont_pre[i] = pre;
    s.cont[i] = std::tanh(pre);
    lp += -0.5 * z * z - ls - kHalfLog2Pi - log_one_minus_tanh_sq(pre);
  }
  int off = 2 * layout.n_cont;
  s.choices.resize(layout.head_sizes.size());
  for (std::size_t h = 0; h < layout.head_sizes.size(); ++h) {
    std::vector<double> logits(raw.begin() + off, raw.begin() + off + layout.head_sizes[h]);
    const int c =
        stochastic ? sample_categorical(softmax(logits), rng) : argmax_first(logits);
    s.choices[h] = c;
    lp += log_softmax(logits)[c];
    off += layout.head_sizes[h];
  }
  s.log_prob = lp;
  s.flat.assign(layout.flat_dim(), 0.0);
  for (int i = 0; i < layout.n_cont; ++i) s.flat[i] = s.cont[i];
  int foff = layout.n_cont;
  for (std::size_t h = 0; h < layout.head_sizes.size(); ++h) {
    s.flat[foff + s.choices[h]] = 1.0;
    foff += layout.head_sizes[h];
  }
  return s;
}

}  // namespace

SampledAction DsacAgent::act(std::span<const double> obs, bool stochastic, Rng& rng) const {
  return act_with(policy_, layout_, obs, stochastic, rng);
}

double DsacAgent::log_prob(std::span<const double> obs,
                           std::span<const double> action_flat) const {
  if (static_cast<int>(action_flat.size()) != layout_.flat_dim())
    throw std::invalid_argument("log_prob: flat action size mismatch");
  const PolicyOut po = split_policy(forward(policy_, obs));
  double lp = 0.0;
  for (int i = 0; i < layout_.n_cont; ++i) {
    const double a = std::clamp(action_flat[i], -1.0 + 1e-12, 1.0 - 1e-12);
    const double pre = std::atanh(a);
    const double std_i = std::exp(po.log_std[i]);
    const double z = (pre - po.mean[i]) / std_i;
    lp += -0.5 * z * z - po.log_std[i] - kHalfLog2Pi - log_one_minus_tanh_sq(pre);
  }
  int off = layout_.n_cont;
  for (std::size_t h = 0; h < layout_.head_sizes.size(); ++h) {
    int choice = 0;
    for (int c = 1; c < layout_.head_sizes[h]; ++c)
      if (action_flat[off + c] > action_flat[off + choice]) choice = c;
    lp += log_softmax(po.logits[h])[choice];
    off += layout_.head_sizes[h];
  }
  return lp;
}

std::pair<double, double> DsacAgent::critic_eval(std::span<const double> obs,
                                                 std::span<const double> action_flat) const {
  std::vector<double> x(obs.begin(), obs.end());
  x.insert(x.end(), action_flat.begin(), action_flat.end());
  const auto out = forward(critic1_, x);
  return {out[0], std::max(out[1], lc_.std_floor)};
}

namespace {

std::pair<double, double> eval_net(const DenseNet& critic, std::span<const double> obs,
                                   std::span<const double> flat, double floor) {
  std::vector<double> x(obs.begin(), obs.end());
  x.insert(x.end(), flat.begin(), flat.end());
  const auto out = forward(critic, x);
  return {out[0], std::max(out[1], floor)};
}

}  // namespace

double DsacAgent::critic_target(const Transition& tr, Rng& rng) const {
  if (tr.done) return tr.reward;
  const SampledAction a = act_with(target_policy_, layout_, tr.next_obs, true, rng);
  auto [j1, s1] = eval_net(target_critic1_, tr.next_obs, a.flat, lc_.std_floor);
  double j = j1, sigma = s1;
  if (lc_.twin_critics) {
    auto [j2, s2] = eval_net(target_critic2_, tr.next_obs, a.flat, lc_.std_floor);
    if (j2 < j1) {
      j = j2;
      sigma = s2;
    }
  }
  const double sample = j + sigma * rng.normal();
  return tr.reward + lc_.discount * (sample - lc_.temperature * a.log_prob);
}

DsacAgent::CriticUpdate DsacAgent::critic_loss_and_grads(std::span<const Transition> batch,
                                                         Rng& rng) const {
  if (batch.empty()) throw std::invalid_argument("critic_loss_and_grads: empty batch");
  CriticUpdate up;
  up.grads1 = zero_gradients(critic1_);
  up.grads2 = zero_gradients(critic2_);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  double loss_sum = 0.0, j_sum = 0.0, sigma_sum = 0.0;
  int twins = lc_.twin_critics ? 2 : 1;
  for (const Transition& tr : batch) {
    const double y_raw = critic_target(tr, rng);
    std::vector<double> x(tr.obs.begin(), tr.obs.end());
    x.insert(x.end(), tr.action_flat.begin(), tr.action_flat.end());
    for (int c = 0; c < twins; ++c) {
      const DenseNet& critic = c == 0 ? critic1_ : critic2_;
      GradientRecord& sink = c == 0 ? up.grads1 : up.grads2;
      const ForwardCache cache = forward_cached(critic, x);
      const double j = cache.output[0];
      const double sigma_raw = cache.output[1];
      const double y = clip_target(y_raw, j, lc_.clip_bound);
      const NllGrads g = gaussian_nll_grads(y, j, sigma_raw, lc_.std_floor);
      const std::vector<double> upstream = {g.d_j * inv_b, g.d_sigma_raw * inv_b};
      backward(critic, cache, upstream, sink);
      loss_sum += g.loss * inv_b / twins;
      if (c == 0) {
        j_sum += j * inv_b;
        sigma_sum += std::max(sigma_raw, lc_.std_floor) * inv_b;
      }
    }
  }
  up.loss = loss_sum;
  up.mean_j = j_sum;
  up.mean_sigma = sigma_sum;
  return up;
}

DsacAgent::PolicyUpdate DsacAgent::policy_loss_and_grads(std::span<const Transition> batch,
                                                         Rng& rng) const {
  if (batch.empty()) throw std::invalid_argument("policy_loss_and_grads: empty batch");
  PolicyUpdate up;
  up.grads = zero_gradients(policy_);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  const double iota = lc_.temperature;

  for (const Transition& tr : batch) {
    const ForwardCache pcache = forward_cached(policy_, tr.obs);
    const PolicyOut po = split_policy(pcache.output);

    // Reparameterized continuous sample, categorical samples for the heads.
    std::vector<double> pre(layout_.n_cont), a(layout_.n_cont);
    double lp_cont = 0.0;
    for (int i = 0; i < layout_.n_cont; ++i) {
      const double std_i = std::exp(po.log_std[i]);
      const double rho = rng.normal();
      pre[i] = po.mean[i] + std_i * rho;
      a[i] = std::tanh(pre[i]);
      lp_cont += -0.5 * rho * rho - po.log_std[i] - kHalfLog2Pi - log_one_minus_tanh_sq(pre[i]);
    }
    std::vector<std::vector<double>> probs(layout_.head_sizes.size());
    std::vector<std::vector<double>> logp(layout_.head_sizes.size());
    std::vector<int> choices(layout_.head_sizes.size());
    for (std::size_t h = 0; h < layout_.head_sizes.size(); ++h) {
      probs[h] = softmax(po.logits[h]);
      logp[h] = log_softmax(po.logits[h]);
      choices[h] = sample_categorical(probs[h], rng);
    }

    // Critic input at the sampled action.
    std::vector<double> x(tr.obs.begin(), tr.obs.end());
    const int cont_off = static_cast<int>(tr.obs.size());
    for (int i = 0; i < layout_.n_cont; ++i) x.push_back(a[i]);
    const int heads_off = static_cast<int>(x.size());
    for (std::size_t h = 0; h < layout_.head_sizes.size(); ++h)
      for (int c = 0; c < layout_.head_sizes[h]; ++c)
        x.push_back(c == choices[h] ? 1.0 : 0.0);

    // Value and input gradient through the smaller twin.
    auto value_min = [&](const std::vector<double>& input, const DenseNet** which) {
      const auto o1 = forward(critic1_, input);
      if (!lc_.twin_critics) {
        if (which) *which = &critic1_;
        return o1[0];
      }
      const auto o2 = forward(critic2_, input);
      if (o1[0] <= o2[0]) {
        if (which) *which = &critic1_;
        return o1[0];
      }
      if (which) *which = &critic2_;
      return o2[0];
    };
    const DenseNet* jnet = nullptr;
    const double j_sample = value_min(x, &jnet);
    GradientRecord scratch = zero_gradients(*jnet);
    const ForwardCache ccache = forward_cached(*jnet, x);
    const std::vector<double> dj_dx =
        backward(*jnet, ccache, std::vector<double>{1.0, 0.0}, scratch);

    // Per-head exact expectation values (sampled choice reuses j_sample).
    double lp_disc_sampled = 0.0;
    std::vector<std::vector<double>> head_values(layout_.head_sizes.size());
    {
      int off = heads_off;
      for (std::size_t h = 0; h < layout_.head_sizes.size(); ++h) {
        head_values[h].resize(layout_.head_sizes[h]);
        for (int c = 0; c < layout_.head_sizes[h]; ++c) {
          if (c == choices[h]) {
            head_values[h][c] = j_sample;
            continue;
          }
          std::vector<double> xc = x;
          xc[off + choices[h]] = 0.0;
          xc[off + c] = 1.0;
          head_values[h][c] = value_min(xc, nullptr);
        }
        lp_disc_sampled += logp[h][choices[h]];
        off += layout_.head_sizes[h];
      }
    }

    // Scalar loss report: negative soft objective at the sampled action.
    up.loss += -(j_sample - iota * (lp_cont + lp_disc_sampled)) * inv_b;

    // Entropy metric: Gaussian entropy pre-squash plus categorical entropies.
    const double kGaussEnt = 0.5 * std::log(2.0 * M_PI) + 0.5;
    for (int i = 0; i < layout_.n_cont; ++i)
      up.entropy += (kGaussEnt + po.log_std[i]) * inv_b;
    for (std::size_t h = 0; h < layout_.head_sizes.size(); ++h)
      for (int c = 0; c < layout_.head_sizes[h]; ++c)
        up.entropy += -probs[h][c] * logp[h][c] * inv_b;

    // Assemble gradients on the policy outputs (negated: we minimize).
    std::vector<double> pup(layout_.policy_out_dim(), 0.0);
    for (int i = 0; i < layout_.n_cont; ++i) {
      const double dj_da = dj_dx[cont_off + i];
      const double th = std::tanh(pre[i]);
      const double path = dj_da * (1.0 - th * th) - 2.0 * iota * th;
      const double g_mean = path;
      double g_ls = path * (pre[i] - po.mean[i]) + iota;
      const double raw_ls = pcache.output[layout_.n_cont + i];
      if (raw_ls <= kLogStdMin || raw_ls >= kLogStdMax) g_ls = 0.0;
      pup[i] = -g_mean * inv_b;
      pup[layout_.n_cont + i] = -g_ls * inv_b;
    }
    {
      int off = 2 * layout_.n_cont;
      for (std::size_t h = 0; h < layout_.head_sizes.size(); ++h) {
        double mean_adv = 0.0;
        for (int c = 0; c < layout_.head_sizes[h]; ++c)
          mean_adv += probs[h][c] * (head_values[h][c] - iota * logp[h][c]);
        for (int c = 0; c < layout_.head_sizes[h]; ++c) {
          const double g =
              probs[h][c] * ((head_values[h][c] - iota * logp[h][c]) - mean_adv);
          pup[off + c] = -g * inv_b;
        }
        off += layout_.head_sizes[h];
      }
    }
    backward(policy_, pcache, pup, up.grads);
  }
  return up;
}

TrainMetrics DsacAgent::train_step(std::span<const Transition> batch, Rng& rng) {
  const CriticUpdate cu = critic_loss_and_grads(batch, rng);
  optimizer_step(critic1_, cu.grads1, opt_critic1_, lc_.critic_lr);
  if (lc_.twin_critics) optimizer_step(critic2_, cu.grads2, opt_critic2_, lc_.critic_lr);
  const PolicyUpdate pu = policy_loss_and_grads(batch, rng);
  optimizer_step(policy_, pu.grads, opt_policy_, lc_.actor_lr);
  polyak_update(target_policy_, policy_, lc_.polyak);
  polyak_update(target_critic1_, critic1_, lc_.polyak);
  if (lc_.twin_critics) polyak_update(target_critic2_, critic2_, lc_.polyak);

  TrainMetrics m;
  m.critic_loss = cu.loss;
  m.policy_loss = pu.loss;
  m.mean_j = cu.mean_j;
  m.mean_sigma = cu.mean_sigma;
  m.entropy = pu.entropy;
  return m;
}

void DsacAgent::save(const std::string& path) const {
  Checkpoint ckpt;
  std::vector<double> meta;
  meta.push_back(obs_dim_);
  meta.push_back(layout_.n_cont);
  meta.push_back(static_cast<double>(layout_.head_sizes.size()));
  for (const int s : layout_.head_sizes) meta.push_back(s);
  ckpt.add("layout", {meta.size()}, meta);
  put_net(ckpt, "policy", policy_);
  put_net(ckpt, "critic1", critic1_);
  put_net(ckpt, "critic2", critic2_);
  put_net(ckpt, "target_policy", target_policy_);
  put_net(ckpt, "target_critic1", target_critic1_);
  put_net(ckpt, "target_critic2", target_critic2_);
  save_checkpoint(path, ckpt);
}

DsacAgent DsacAgent::load(const std::string& path, LearnerConfig cfg) {
  const Checkpoint ckpt = load_checkpoint(path);
  const int mi = ckpt.find("layout");
  if (mi < 0) throw std::runtime_error("checkpoint: missing layout");
  const auto& meta = ckpt.data[mi];
  const int obs_dim = static_cast<int>(meta.at(0));
  ActionLayout layout;
  layout.n_cont = static_cast<int>(meta.at(1));
  const int n_heads = static_cast<int>(meta.at(2));
  for (int h = 0; h < n_heads; ++h) layout.head_sizes.push_back(static_cast<int>(meta.at(3 + h)));
  DsacAgent agent(obs_dim, layout, cfg, 0);
  agent.policy_ = get_net(ckpt, "policy");
  agent.critic1_ = get_net(ckpt, "critic1");
  agent.critic2_ = get_net(ckpt, "critic2");
  agent.target_policy_ = get_net(ckpt, "target_policy");
  agent.target_critic1_ = get_net(ckpt, "target_critic1");
  agent.target_critic2_ = get_net(ckpt, "target_critic2");
  agent.opt_policy_ = make_adam(agent.policy_);
  agent.opt_critic1_ = make_adam(agent.critic1_);
  agent.opt_critic2_ = make_adam(agent.critic2_);
  return agent;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  data_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::add(Transition tr) {
  if (data_.size() < capacity_) {
    data_.push_back(std::move(tr));
  } else {
    data_[write_] = std::move(tr);
  }
  write_ = (write_ + 1) % capacity_;
}

std::vector<Transition> ReplayBuffer::sample(int batch, Rng& rng) const {
  if (data_.empty()) throw std::logic_error("ReplayBuffer::sample: buffer empty");
  std::vector<Transition> out;
  out.reserve(batch);
  for (int i = 0; i < batch; ++i)
    out.push_back(data_[rng.uniform_int(data_.size())]);
  return out;
}

std::vector<double> flatten_action(const ActionSpec& spec, const ScenarioConfig& cfg,
                                   const Action& a) {
  std::vector<double> flat(spec.flat_action_dim(), 0.0);
  for (int n = 0; n < cfg.N; ++n) {
    flat[3 * n + 0] = std::clamp(a.uav_vel[n].x / cfg.v_max, -1.0, 1.0);
    flat[3 * n + 1] = std::clamp(a.uav_vel[n].y / cfg.v_max, -1.0, 1.0);
    flat[3 * n + 2] = std::clamp(a.uav_vel[n].z / cfg.v_max, -1.0, 1.0);
  }
  int off = spec.n_cont;
  for (int n = 0; n < cfg.N; ++n) {
    flat[off + (a.uav_leo[n] < 0 ? 0 : 1 + a.uav_leo[n])] = 1.0;
    off += spec.uav_head_size;
  }
  for (int m = 0; m < cfg.M; ++m) {
    flat[off + (a.user_uav[m] < 0 ? 0 : 1 + a.user_uav[m])] = 1.0;
    off += spec.user_head_size;
  }
  for (int i = 0; i < cfg.K; ++i) {
    const int j = a.isl[i];
    if (j < 0) {
      flat[off] = 1.0;
    } else {
      const int c = j < i ? j + 1 : j;
      flat[off + c] = 1.0;
    }
    off += spec.isl_head_size;
  }
  for (int w = 0; w < cfg.task_window; ++w) {
    flat[off + static_cast<int>(a.mode[w])] = 1.0;
    off += spec.mode_head_size;
  }
  return flat;
}

Action action_from_sample(const ActionSpec& spec, const ScenarioConfig& cfg,
                          const SampledAction& s) {
  Action a = empty_action(cfg);
  for (int n = 0; n < cfg.N; ++n) {
    a.uav_vel[n] = {s.cont[3 * n + 0] * cfg.v_max, s.cont[3 * n + 1] * cfg.v_max,
                    s.cont[3 * n + 2] * cfg.v_max};
  }
  int h = 0;
  for (int n = 0; n < cfg.N; ++n, ++h) a.uav_leo[n] = s.choices[h] - 1;
  for (int m = 0; m < cfg.M; ++m, ++h) a.user_uav[m] = s.choices[h] - 1;
  for (int i = 0; i < cfg.K; ++i, ++h) {
    const int c = s.choices[h];
    a.isl[i] = c == 0 ? -1 : (c - 1 < i ? c - 1 : c);
  }
  for (int w = 0; w < cfg.task_window; ++w, ++h) a.mode[w] = static_cast<ModeId>(s.choices[h]);
  (void)spec;
  return a;
}

}  // namespace sagin
