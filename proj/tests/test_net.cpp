#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "sagin/net.hpp"

using namespace sagin;

namespace {

// Central finite differences of (output . upstream) w.r.t. one parameter.
double fd_param(DenseNet net, int layer, bool is_w, std::size_t idx,
                const std::vector<double>& input, const std::vector<double>& upstream,
                double h = 1e-5) {
  auto eval = [&](double delta) {
    auto& p = is_w ? net.layers[layer].w[idx] : net.layers[layer].b[idx];
    const double keep = p;
    p = keep + delta;
    const auto out = forward(net, input);
    p = keep;
    double dot = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) dot += out[i] * upstream[i];
    return dot;
  };
  return (eval(h) - eval(-h)) / (2.0 * h);
}

}  // namespace

TEST_CASE("forward: identity, zero, and hand-computed nets") {
  DenseNet id;
  id.layers.push_back({2, 2, Activation::Identity, {1, 0, 0, 1}, {0, 0}});
  const auto out = forward(id, std::vector<double>{3.0, -4.0});
  CHECK(out[0] == 3.0);
  CHECK(out[1] == -4.0);

  DenseNet zero;
  zero.layers.push_back({2, 3, Activation::Relu, {0, 0, 0, 0, 0, 0}, {0, 0, 0}});
  for (const double v : forward(zero, std::vector<double>{1.0, 2.0})) CHECK(v == 0.0);

  // y = tanh(W x + b) with W = [[1, 2], [0.5, -1]], b = [0.1, -0.2]
  DenseNet hand;
  hand.layers.push_back({2, 2, Activation::Tanh, {1, 2, 0.5, -1}, {0.1, -0.2}});
  const auto y = forward(hand, std::vector<double>{0.3, -0.1});
  CHECK(y[0] == doctest::Approx(std::tanh(1 * 0.3 + 2 * -0.1 + 0.1)));
  CHECK(y[1] == doctest::Approx(std::tanh(0.5 * 0.3 + -1 * -0.1 - 0.2)));

  CHECK_THROWS_AS(forward(hand, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("backward: scalar product rule") {
  DenseNet lin;
  lin.layers.push_back({1, 1, Activation::Identity, {2.5}, {0.0}});
  const auto g = backward(lin, std::vector<double>{3.0}, std::vector<double>{1.0});
  CHECK(g.layers[0].w[0] == doctest::Approx(3.0));  // dy/dw = x
  CHECK(g.layers[0].b[0] == doctest::Approx(1.0));
}

TEST_CASE("backward: zero upstream gives zero gradients") {
  Rng rng(3);
  DenseNet net = make_mlp(4, 8, 2, 3, rng);
  const std::vector<double> input = {0.1, -0.2, 0.3, 0.4};
  const auto g = backward(net, input, std::vector<double>{0, 0, 0});
  for (const auto& l : g.layers) {
    for (const double v : l.w) CHECK(v == 0.0);
    for (const double v : l.b) CHECK(v == 0.0);
  }
}

TEST_CASE("backward matches central finite differences for every activation") {
  Rng rng(11);
  for (const Activation act : {Activation::Relu, Activation::Tanh, Activation::Identity}) {
    const std::vector<int> widths = {5, 7, 6, 2};
    const std::vector<Activation> acts = {act, act, Activation::Identity};
    DenseNet net = make_net(widths, acts, rng);
    std::vector<double> input(5), upstream = {0.7, -1.3};
    for (auto& v : input) v = rng.uniform(-1, 1);
    const auto grads = backward(net, input, upstream);

    Rng pick(act == Activation::Relu ? 1 : act == Activation::Tanh ? 2 : 3);
    for (int trial = 0; trial < 100; ++trial) {
      const int layer = static_cast<int>(pick.uniform_int(net.layers.size()));
      const bool is_w = pick.uniform() < 0.8;
      const auto& vec = is_w ? net.layers[layer].w : net.layers[layer].b;
      const std::size_t idx = pick.uniform_int(vec.size());
      const double analytic =
          is_w ? grads.layers[layer].w[idx] : grads.layers[layer].b[idx];
      const double numeric = fd_param(net, layer, is_w, idx, input, upstream);
      const double scale = std::max({1e-4, std::abs(analytic), std::abs(numeric)});
      CHECK(std::abs(analytic - numeric) / scale < 1e-4);
    }
  }
}

TEST_CASE("backward also returns the input gradient") {
  Rng rng(13);
  DenseNet net = make_mlp(3, 16, 2, 1, rng);
  const std::vector<double> input = {0.2, -0.5, 0.9};
  GradientRecord sink = zero_gradients(net);
  const ForwardCache cache = forward_cached(net, input);
  const auto din = backward(net, cache, std::vector<double>{1.0}, sink);
  REQUIRE(din.size() == 3);
  for (int i = 0; i < 3; ++i) {
    auto shifted = input;
    const double h = 1e-6;
    shifted[i] = input[i] + h;
    const double up = forward(net, shifted)[0];
    shifted[i] = input[i] - h;
    const double dn = forward(net, shifted)[0];
    CHECK(din[i] == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-4));
  }
}

TEST_CASE("optimizer: identity on zero gradients and zero learning rate") {
  Rng rng(17);
  DenseNet net = make_mlp(2, 4, 1, 1, rng);
  const DenseNet before = net;
  AdamState st = make_adam(net);
  optimizer_step(net, zero_gradients(net), st, 1e-2);
  for (std::size_t li = 0; li < net.layers.size(); ++li)
    for (std::size_t i = 0; i < net.layers[li].w.size(); ++i)
      CHECK(net.layers[li].w[i] == before.layers[li].w[i]);

  GradientRecord g = zero_gradients(net);
  g.layers[0].w[0] = 1.0;
  optimizer_step(net, g, st, 0.0);
  CHECK(net.layers[0].w[0] == before.layers[0].w[0]);
}

TEST_CASE("optimizer: constant gradient descends monotonically") {
  DenseNet net;
  net.layers.push_back({1, 1, Activation::Identity, {1.0}, {0.0}});
  AdamState st = make_adam(net);
  double prev = net.layers[0].w[0];
  for (int i = 0; i < 100; ++i) {
    GradientRecord g = zero_gradients(net);
    g.layers[0].w[0] = 2.0;
    optimizer_step(net, g, st, 1e-2);
    CHECK(net.layers[0].w[0] < prev);
    prev = net.layers[0].w[0];
  }
}

TEST_CASE("optimizer: quadratic bowl converges") {
  DenseNet net;
  net.layers.push_back({1, 1, Activation::Identity, {1.0}, {0.0}});
  AdamState st = make_adam(net);
  for (int i = 0; i < 500; ++i) {
    GradientRecord g = zero_gradients(net);
    g.layers[0].w[0] = 2.0 * net.layers[0].w[0];  // d/dw of w^2
    optimizer_step(net, g, st, 1e-2);
  }
  CHECK(std::abs(net.layers[0].w[0]) < 1e-2);
}

TEST_CASE("optimizer rejects non-finite gradients") {
  DenseNet net;
  net.layers.push_back({1, 1, Activation::Identity, {1.0}, {0.0}});
  AdamState st = make_adam(net);
  GradientRecord g = zero_gradients(net);
  g.layers[0].w[0] = std::nan("");
  CHECK_THROWS_AS(optimizer_step(net, g, st, 1e-2), std::invalid_argument);
}

TEST_CASE("polyak update endpoints and midpoint") {
  DenseNet target, online;
  target.layers.push_back({1, 1, Activation::Identity, {0.0}, {0.0}});
  online.layers.push_back({1, 1, Activation::Identity, {2.0}, {4.0}});

  DenseNet t = target;
  polyak_update(t, online, 0.0);
  CHECK(t.layers[0].w[0] == 2.0);
  t = target;
  polyak_update(t, online, 1.0);
  CHECK(t.layers[0].w[0] == 0.0);
  t = target;
  polyak_update(t, online, 0.5);
  CHECK(t.layers[0].w[0] == doctest::Approx(1.0));
  CHECK(t.layers[0].b[0] == doctest::Approx(2.0));
}

TEST_CASE("checkpoint round-trips bit-exactly") {
  Rng rng(23);
  DenseNet net = make_mlp(6, 12, 2, 4, rng);
  Checkpoint ckpt;
  put_net(ckpt, "net", net);
  ckpt.add("extra", {3}, {1.5, -2.5, 3.25});
  const std::string path =
      (std::filesystem::temp_directory_path() / "sagin_ckpt_test.bin").string();
  save_checkpoint(path, ckpt);
  const Checkpoint loaded = load_checkpoint(path);
  const DenseNet back = get_net(loaded, "net");
  REQUIRE(back.layers.size() == net.layers.size());
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    CHECK(back.layers[li].act == net.layers[li].act);
    for (std::size_t i = 0; i < net.layers[li].w.size(); ++i)
      CHECK(back.layers[li].w[i] == net.layers[li].w[i]);
    for (std::size_t i = 0; i < net.layers[li].b.size(); ++i)
      CHECK(back.layers[li].b[i] == net.layers[li].b[i]);
  }
  const int xi = loaded.find("extra");
  REQUIRE(xi >= 0);
  CHECK(loaded.data[xi][2] == 3.25);
  CHECK(loaded.find("missing") == -1);
  std::filesystem::remove(path);
}

TEST_CASE("fan-scaled initialization stays in bounds and is seeded") {
  Rng a(31), b(31);
  const DenseNet n1 = make_mlp(10, 32, 2, 5, a);
  const DenseNet n2 = make_mlp(10, 32, 2, 5, b);
  const double bound0 = std::sqrt(6.0 / (10 + 32));
  for (const double w : n1.layers[0].w) {
    CHECK(w <= bound0);
    CHECK(w >= -bound0);
  }
  for (std::size_t li = 0; li < n1.layers.size(); ++li)
    for (std::size_t i = 0; i < n1.layers[li].w.size(); ++i)
      CHECK(n1.layers[li].w[i] == n2.layers[li].w[i]);
}
