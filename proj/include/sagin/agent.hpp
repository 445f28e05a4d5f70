#pragma once

#include <optional>
#include <vector>

#include "sagin/env.hpp"
#include "sagin/net.hpp"
#include "sagin/scenario.hpp"

namespace sagin {

// Action interface of the learner: some continuous dimensions (tanh-squashed
// to [-1, 1]) plus a list of small categorical heads.
struct ActionLayout {
  int n_cont = 0;
  std::vector<int> head_sizes;

  int flat_dim() const;      // n_cont + sum of one-hot widths
  int policy_out_dim() const;  // 2 * n_cont (mean, log-std) + logits
};

ActionLayout layout_from_spec(const ActionSpec& spec);

struct Transition {
  std::vector<double> obs;
  std::vector<double> action_flat;  // squashed cont dims then one-hots
  double reward = 0.0;
  std::vector<double> next_obs;
  bool done = false;
};

// One drawn action with everything needed to score and encode it.
struct SampledAction {
  std::vector<double> cont;      // squashed values in [-1, 1]
  std::vector<double> cont_pre;  // pre-squash Gaussian values
  std::vector<int> choices;      // per discrete head
  std::vector<double> flat;      // critic encoding
  double log_prob = 0.0;
};

struct TrainMetrics {
  double critic_loss = 0.0;
  double policy_loss = 0.0;
  double mean_j = 0.0;
  double mean_sigma = 0.0;
  double entropy = 0.0;
};

// Gaussian negative log-likelihood of a clipped target under N(j, sigma),
// with sigma = max(sigma_raw, floor). Returned gradients are w.r.t. j and
// sigma_raw (zero when the floor is active).
struct NllGrads {
  double loss = 0.0;
  double d_j = 0.0;
  double d_sigma_raw = 0.0;
};
NllGrads gaussian_nll_grads(double target, double j, double sigma_raw, double floor);

double clip_target(double y, double j, double bound);

// Soft actor-critic with a distributional critic: the critic outputs the
// mean and standard deviation of the return distribution, targets are
// sampled from the target critic's distribution, the std is floored, and
// targets are clipped to a band around the online mean. Twin critics take
// the smaller mean when forming targets.
class DsacAgent {
 public:
  DsacAgent(int obs_dim, ActionLayout layout, LearnerConfig cfg, std::uint64_t seed);

  SampledAction act(std::span<const double> obs, bool stochastic, Rng& rng) const;

  // Density of an arbitrary flat action under the current policy (squash
  // correction included for the continuous dims).
  double log_prob(std::span<const double> obs, std::span<const double> action_flat) const;

  // One sampled soft target: r + (1 - done) * discount * (sample - temp * logpi).
  double critic_target(const Transition& tr, Rng& rng) const;

  struct CriticUpdate {
    double loss = 0.0;
    double mean_j = 0.0;
    double mean_sigma = 0.0;
    GradientRecord grads1;
    GradientRecord grads2;
  };
  CriticUpdate critic_loss_and_grads(std::span<const Transition> batch, Rng& rng) const;

  struct PolicyUpdate {
    double loss = 0.0;
    double entropy = 0.0;
    GradientRecord grads;
  };
  PolicyUpdate policy_loss_and_grads(std::span<const Transition> batch, Rng& rng) const;

  // Critic update (both twins), policy update, Polyak target refresh.
  TrainMetrics train_step(std::span<const Transition> batch, Rng& rng);

  const DenseNet& policy() const { return policy_; }
  const DenseNet& critic1() const { return critic1_; }
  const ActionLayout& layout() const { return layout_; }
  const LearnerConfig& learner() const { return lc_; }
  int obs_dim() const { return obs_dim_; }

  // Direct net access for tests and handcrafted fixtures.
  DenseNet& mutable_policy() { return policy_; }
  DenseNet& mutable_critic1() { return critic1_; }
  DenseNet& mutable_critic2() { return critic2_; }
  void sync_targets();

  void save(const std::string& path) const;
  static DsacAgent load(const std::string& path, LearnerConfig cfg);

  // Critic mean/std at (obs, action), std floored. Exposed for tests.
  std::pair<double, double> critic_eval(std::span<const double> obs,
                                        std::span<const double> action_flat) const;

 private:
  struct PolicyOut {
    std::vector<double> mean;
    std::vector<double> log_std;  // clamped to [-20, 2]
    std::vector<std::vector<double>> logits;  // per head
  };
  PolicyOut split_policy(const std::vector<double>& raw) const;

  int obs_dim_;
  ActionLayout layout_;
  LearnerConfig lc_;
  DenseNet policy_, critic1_, critic2_;
  DenseNet target_policy_, target_critic1_, target_critic2_;
  AdamState opt_policy_, opt_critic1_, opt_critic2_;
};

// Uniform-sampling ring replay buffer.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);
  void add(Transition tr);
  std::size_t size() const { return data_.size(); }
  std::vector<Transition> sample(int batch, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t write_ = 0;
  std::vector<Transition> data_;
};

// Flat-vector encoding of an env Action per the action spec, and back.
std::vector<double> flatten_action(const ActionSpec& spec, const ScenarioConfig& cfg,
                                   const Action& a);
Action action_from_sample(const ActionSpec& spec, const ScenarioConfig& cfg,
                          const SampledAction& s);

}  // namespace sagin
