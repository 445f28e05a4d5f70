#include "sagin/net.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace sagin {

namespace {

double activate(Activation act, double x) {
  switch (act) {
    case Activation::Relu: return x > 0.0 ? x : 0.0;
    case Activation::Tanh: return std::tanh(x);
    case Activation::Identity: return x;
  }
  return x;
}

double activate_grad(Activation act, double pre) {
  switch (act) {
    case Activation::Relu: return pre > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh: {
      const double t = std::tanh(pre);
      return 1.0 - t * t;
    }
    case Activation::Identity: return 1.0;
  }
  return 1.0;
}

}  // namespace

std::size_t DenseNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.w.size() + l.b.size();
  return n;
}

DenseNet make_net(std::span<const int> widths, std::span<const Activation> acts, Rng& rng) {
  if (widths.size() < 2 || acts.size() != widths.size() - 1)
    throw std::invalid_argument("make_net: need >= 2 widths and one activation per layer");
  DenseNet net;
  net.layers.resize(widths.size() - 1);
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    auto& l = net.layers[i];
    l.in = widths[i];
    l.out = widths[i + 1];
    l.act = acts[i];
    const double bound = std::sqrt(6.0 / (l.in + l.out));
    l.w.resize(static_cast<std::size_t>(l.out) * l.in);
    for (auto& w : l.w) w = rng.uniform(-bound, bound);
    l.b.assign(l.out, 0.0);
  }
  return net;
}

DenseNet make_mlp(int in, int hidden, int depth, int out, Rng& rng) {
  std::vector<int> widths{in};
  std::vector<Activation> acts;
  for (int i = 0; i < depth; ++i) {
    widths.push_back(hidden);
    acts.push_back(Activation::Relu);
  }
  widths.push_back(out);
  acts.push_back(Activation::Identity);
  return make_net(widths, acts, rng);
}

ForwardCache forward_cached(const DenseNet& net, std::span<const double> input) {
  if (static_cast<int>(input.size()) != net.input_dim())
    throw std::invalid_argument("forward: input size mismatch");
  ForwardCache cache;
  cache.inputs.resize(net.layers.size());
  cache.pre.resize(net.layers.size());
  std::vector<double> x(input.begin(), input.end());
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    const auto& l = net.layers[li];
    cache.inputs[li] = x;
    std::vector<double> pre(l.out);
    for (int o = 0; o < l.out; ++o) {
      double acc = l.b[o];
      const double* wrow = &l.w[static_cast<std::size_t>(o) * l.in];
      for (int i = 0; i < l.in; ++i) acc += wrow[i] * x[i];
      pre[o] = acc;
    }
    cache.pre[li] = pre;
    x.resize(l.out);
    for (int o = 0; o < l.out; ++o) x[o] = activate(l.act, pre[o]);
  }
  cache.output = x;
  return cache;
}

std::vector<double> forward(const DenseNet& net, std::span<const double> input) {
  if (static_cast<int>(input.size()) != net.input_dim())
    throw std::invalid_argument("forward: input size mismatch");
  std::vector<double> x(input.begin(), input.end());
  std::vector<double> y;
  for (const auto& l : net.layers) {
    y.assign(l.out, 0.0);
    for (int o = 0; o < l.out; ++o) {
      double acc = l.b[o];
      const double* wrow = &l.w[static_cast<std::size_t>(o) * l.in];
      for (int i = 0; i < l.in; ++i) acc += wrow[i] * x[i];
      y[o] = activate(l.act, acc);
    }
    x = y;
  }
  return x;
}

void GradientRecord::scale(double s) {
  for (auto& l : layers) {
    for (auto& g : l.w) g *= s;
    for (auto& g : l.b) g *= s;
  }
}

void GradientRecord::add(const GradientRecord& other) {
  for (std::size_t li = 0; li < layers.size(); ++li) {
    for (std::size_t i = 0; i < layers[li].w.size(); ++i) layers[li].w[i] += other.layers[li].w[i];
    for (std::size_t i = 0; i < layers[li].b.size(); ++i) layers[li].b[i] += other.layers[li].b[i];
  }
}

GradientRecord zero_gradients(const DenseNet& net) {
  GradientRecord g;
  g.layers.resize(net.layers.size());
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    g.layers[li].w.assign(net.layers[li].w.size(), 0.0);
    g.layers[li].b.assign(net.layers[li].b.size(), 0.0);
  }
  return g;
}

std::vector<double> backward(const DenseNet& net, const ForwardCache& cache,
                             std::span<const double> upstream, GradientRecord& grads) {
  if (static_cast<int>(upstream.size()) != net.output_dim())
    throw std::invalid_argument("backward: upstream size mismatch");
  std::vector<double> delta(upstream.begin(), upstream.end());
  for (int li = static_cast<int>(net.layers.size()) - 1; li >= 0; --li) {
    const auto& l = net.layers[li];
    const auto& pre = cache.pre[li];
    const auto& in = cache.inputs[li];
    // delta through the activation
    for (int o = 0; o < l.out; ++o) delta[o] *= activate_grad(l.act, pre[o]);
    auto& lw = grads.layers[li].w;
    auto& lb = grads.layers[li].b;
    std::vector<double> down(l.in, 0.0);
    for (int o = 0; o < l.out; ++o) {
      const double d = delta[o];
      lb[o] += d;
      double* grow = &lw[static_cast<std::size_t>(o) * l.in];
      const double* wrow = &l.w[static_cast<std::size_t>(o) * l.in];
      for (int i = 0; i < l.in; ++i) {
        grow[i] += d * in[i];
        down[i] += d * wrow[i];
      }
    }
    delta = down;
  }
  return delta;
}

GradientRecord backward(const DenseNet& net, std::span<const double> input,
                        std::span<const double> upstream) {
  GradientRecord grads = zero_gradients(net);
  const ForwardCache cache = forward_cached(net, input);
  backward(net, cache, upstream, grads);
  return grads;
}

AdamState make_adam(const DenseNet& net) {
  AdamState s;
  s.m = zero_gradients(net);
  s.v = zero_gradients(net);
  return s;
}

void optimizer_step(DenseNet& net, const GradientRecord& grads, AdamState& state, double lr) {
  for (const auto& l : grads.layers) {
    for (const double g : l.w)
      if (!std::isfinite(g)) throw std::invalid_argument("optimizer_step: non-finite gradient");
    for (const double g : l.b)
      if (!std::isfinite(g)) throw std::invalid_argument("optimizer_step: non-finite gradient");
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, state.step);
  const double bc2 = 1.0 - std::pow(state.beta2, state.step);
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    auto update = [&](std::vector<double>& p, const std::vector<double>& g,
                      std::vector<double>& m, std::vector<double>& v) {
      for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
        v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
      }
    };
    update(net.layers[li].w, grads.layers[li].w, state.m.layers[li].w, state.v.layers[li].w);
    update(net.layers[li].b, grads.layers[li].b, state.m.layers[li].b, state.v.layers[li].b);
  }
}

void polyak_update(DenseNet& target, const DenseNet& online, double rho) {
  if (target.layers.size() != online.layers.size())
    throw std::invalid_argument("polyak_update: shape mismatch");
  for (std::size_t li = 0; li < target.layers.size(); ++li) {
    auto& t = target.layers[li];
    const auto& o = online.layers[li];
    if (t.w.size() != o.w.size() || t.b.size() != o.b.size())
      throw std::invalid_argument("polyak_update: shape mismatch");
    for (std::size_t i = 0; i < t.w.size(); ++i) t.w[i] = rho * t.w[i] + (1.0 - rho) * o.w[i];
    for (std::size_t i = 0; i < t.b.size(); ++i) t.b[i] = rho * t.b[i] + (1.0 - rho) * o.b[i];
  }
}

namespace {

constexpr char kMagic[8] = {'S', 'G', 'N', 'C', 'K', 'P', 'T', '1'};

template <typename T>
void write_raw(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

}  // namespace

void Checkpoint::add(const std::string& name, std::vector<std::uint64_t> shape,
                     std::vector<double> values) {
  names.push_back(name);
  dims.push_back(std::move(shape));
  data.push_back(std::move(values));
}

int Checkpoint::find(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  return -1;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open for write: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.names.size()));
  for (std::size_t i = 0; i < ckpt.names.size(); ++i) {
    write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.names[i].size()));
    out.write(ckpt.names[i].data(), static_cast<std::streamsize>(ckpt.names[i].size()));
    write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.dims[i].size()));
    for (const std::uint64_t d : ckpt.dims[i]) write_raw<std::uint64_t>(out, d);
    out.write(reinterpret_cast<const char*>(ckpt.data[i].data()),
              static_cast<std::streamsize>(ckpt.data[i].size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("checkpoint: write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  Checkpoint ckpt;
  const auto count = read_raw<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = read_raw<std::uint32_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto rank = read_raw<std::uint32_t>(in);
    std::vector<std::uint64_t> shape(rank);
    std::uint64_t total = 1;
    for (auto& d : shape) {
      d = read_raw<std::uint64_t>(in);
      total *= d;
    }
    std::vector<double> values(total);
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(total * sizeof(double)));
    if (!in) throw std::runtime_error("checkpoint: truncated tensor in " + path);
    ckpt.add(name, std::move(shape), std::move(values));
  }
  return ckpt;
}

void put_net(Checkpoint& ckpt, const std::string& prefix, const DenseNet& net) {
  std::vector<double> meta;
  meta.push_back(static_cast<double>(net.layers.size()));
  for (const auto& l : net.layers) {
    meta.push_back(l.in);
    meta.push_back(l.out);
    meta.push_back(static_cast<double>(l.act));
  }
  ckpt.add(prefix + ".meta", {meta.size()}, meta);
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    const auto& l = net.layers[li];
    ckpt.add(prefix + ".L" + std::to_string(li) + ".w",
             {static_cast<std::uint64_t>(l.out), static_cast<std::uint64_t>(l.in)}, l.w);
    ckpt.add(prefix + ".L" + std::to_string(li) + ".b", {static_cast<std::uint64_t>(l.out)}, l.b);
  }
}

DenseNet get_net(const Checkpoint& ckpt, const std::string& prefix) {
  const int mi = ckpt.find(prefix + ".meta");
  if (mi < 0) throw std::runtime_error("checkpoint: missing net '" + prefix + "'");
  const auto& meta = ckpt.data[mi];
  DenseNet net;
  const int n_layers = static_cast<int>(meta.at(0));
  net.layers.resize(n_layers);
  for (int li = 0; li < n_layers; ++li) {
    auto& l = net.layers[li];
    l.in = static_cast<int>(meta.at(1 + 3 * li));
    l.out = static_cast<int>(meta.at(2 + 3 * li));
    l.act = static_cast<Activation>(static_cast<int>(meta.at(3 + 3 * li)));
    const int wi = ckpt.find(prefix + ".L" + std::to_string(li) + ".w");
    const int bi = ckpt.find(prefix + ".L" + std::to_string(li) + ".b");
    if (wi < 0 || bi < 0) throw std::runtime_error("checkpoint: missing layer tensors");
    l.w = ckpt.data[wi];
    l.b = ckpt.data[bi];
  }
  return net;
}

}  // namespace sagin
