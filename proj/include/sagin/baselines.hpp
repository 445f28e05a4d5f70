#pragma once

#include <memory>
#include <string>

#include "sagin/agent.hpp"
#include "sagin/env.hpp"

namespace sagin {

// A policy maps the environment to one slot action. Heuristic baselines may
// read the full simulator state; the learned policy goes through observe().
class Policy {
 public:
  virtual ~Policy() = default;
  virtual Action act(const Environment& env, Rng& rng) = 0;
  virtual std::string name() const = 0;
};

// Uniformly random feasible choices: visible satellites or none per UAV,
// any UAV or none per user, any relay or none per satellite, velocities
// uniform in the box, one of the five modes per window head.
std::unique_ptr<Policy> make_random_policy();

// Myopic heuristic: users pair to the nearest UAV, UAVs to the highest
// visible satellite, stranded satellites forward to the best visible one,
// UAVs fly toward their users' centroid, and each pending task takes the
// feasible mode with the best estimated score under current rates. An
// optional forced mode overrides the per-task choice.
std::unique_ptr<Policy> make_greedy_policy();
std::unique_ptr<Policy> make_fixed_mode_policy(ModeId mode);

class DsacPolicy : public Policy {
 public:
  DsacPolicy(DsacAgent agent, bool stochastic)
      : agent_(std::move(agent)), stochastic_(stochastic) {}

  Action act(const Environment& env, Rng& rng) override;
  std::string name() const override { return "dsac"; }
  DsacAgent& agent() { return agent_; }

 private:
  DsacAgent agent_;
  bool stochastic_;
};

// Parses a policy spec: "random", "greedy", "mode:<id>", or a checkpoint
// path (anything else). Throws ScenarioError on an unusable spec.
std::unique_ptr<Policy> make_policy(const std::string& spec, const ScenarioConfig& cfg);

}  // namespace sagin
