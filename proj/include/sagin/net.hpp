#pragma once

#include <span>
#include <string>
#include <vector>

#include "sagin/rng.hpp"

namespace sagin {

enum class Activation { Relu, Tanh, Identity };

// Fully-connected network, 64-bit floats throughout. Weights are row-major
// (out x in). Value type: copy freely, mutate one owner.
struct DenseNet {
  struct Layer {
    int in = 0;
    int out = 0;
    Activation act = Activation::Identity;
    std::vector<double> w;  // out * in
    std::vector<double> b;  // out
  };
  std::vector<Layer> layers;

  int input_dim() const { return layers.empty() ? 0 : layers.front().in; }
  int output_dim() const { return layers.empty() ? 0 : layers.back().out; }
  std::size_t parameter_count() const;
};

// widths = {in, h1, ..., out}; acts has widths.size()-1 entries.
// Fan-scaled uniform init: +-sqrt(6 / (fan_in + fan_out)).
DenseNet make_net(std::span<const int> widths, std::span<const Activation> acts, Rng& rng);

// Hidden layers of `hidden` width x `depth` with rectifier units, identity head.
DenseNet make_mlp(int in, int hidden, int depth, int out, Rng& rng);

std::vector<double> forward(const DenseNet& net, std::span<const double> input);

// Layer-by-layer activations kept for the backward pass.
struct ForwardCache {
  std::vector<std::vector<double>> inputs;  // per layer, the layer's input
  std::vector<std::vector<double>> pre;     // pre-activation values
  std::vector<double> output;
};

ForwardCache forward_cached(const DenseNet& net, std::span<const double> input);

struct GradientRecord {
  struct LayerGrad {
    std::vector<double> w;
    std::vector<double> b;
  };
  std::vector<LayerGrad> layers;

  void scale(double s);
  void add(const GradientRecord& other);
};

GradientRecord zero_gradients(const DenseNet& net);

// Exact reverse-mode gradients of (output . upstream) w.r.t. parameters,
// accumulated into `grads`; returns the gradient w.r.t. the input.
std::vector<double> backward(const DenseNet& net, const ForwardCache& cache,
                             std::span<const double> upstream, GradientRecord& grads);

// One-shot variant: runs its own forward pass.
GradientRecord backward(const DenseNet& net, std::span<const double> input,
                        std::span<const double> upstream);

// Bias-corrected first/second-moment update state.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  GradientRecord m;
  GradientRecord v;
};

AdamState make_adam(const DenseNet& net);

// Descends along grads. Throws std::invalid_argument on non-finite gradients.
void optimizer_step(DenseNet& net, const GradientRecord& grads, AdamState& state, double lr);

// target <- rho * target + (1 - rho) * online, elementwise.
void polyak_update(DenseNet& target, const DenseNet& online, double rho);

// Checkpoint container: named tensors, flat little-endian binary.
// Layout: magic "SGNCKPT1", u32 tensor count, then per tensor:
//   u32 name length, name bytes, u32 rank, u64 dims[rank], f64 data.
struct Checkpoint {
  std::vector<std::string> names;
  std::vector<std::vector<std::uint64_t>> dims;
  std::vector<std::vector<double>> data;

  void add(const std::string& name, std::vector<std::uint64_t> shape, std::vector<double> values);
  int find(const std::string& name) const;  // -1 when absent
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// Net <-> checkpoint helpers; tensors are named <prefix>.L<i>.{w,b} plus a
// <prefix>.meta tensor carrying widths and activation codes.
void put_net(Checkpoint& ckpt, const std::string& prefix, const DenseNet& net);
DenseNet get_net(const Checkpoint& ckpt, const std::string& prefix);

}  // namespace sagin
