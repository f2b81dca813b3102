#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "support.hpp"
#include "tastenet/nn.hpp"

using namespace tastenet;
using test::close_rel;
using test::uniform_vector;

namespace {

MlpSpec spec_of(std::vector<std::size_t> hidden, Activation a, std::vector<OutputTransform> outs) {
  MlpSpec s;
  s.hidden_sizes = std::move(hidden);
  s.hidden_activations.assign(s.hidden_sizes.size(), a);
  s.output_transforms = std::move(outs);
  return s;
}

// Loss used by the gradient checks: sum_k u_k * out_k.
double probe_loss(const MlpParams& p, const MlpSpec& s, const std::vector<double>& z,
                  const std::vector<double>& upstream) {
  const auto cache = forward(p, s, z);
  double acc = 0.0;
  for (std::size_t k = 0; k < upstream.size(); ++k) acc += upstream[k] * cache.output[k];
  return acc;
}

}  // namespace

TEST_CASE("transforms follow their definitions") {
  CHECK(apply_transform(OutputTransform::nonpositive_relu, 0.3) == 0.0);
  CHECK(apply_transform(OutputTransform::nonpositive_relu, -0.3) == -0.3);
  CHECK(apply_transform(OutputTransform::negative_exp, 0.0) == -1.0);
  CHECK(apply_transform(OutputTransform::nonnegative_relu, -2.0) == 0.0);
  CHECK(apply_transform(OutputTransform::nonnegative_relu, 2.0) == 2.0);
  CHECK(apply_transform(OutputTransform::exp, 1.0) == doctest::Approx(std::exp(1.0)));
  CHECK(apply_transform(OutputTransform::identity, -7.5) == -7.5);
  CHECK(activation_derivative(Activation::relu, 0.0) == 0.0);
  CHECK(transform_derivative(OutputTransform::nonpositive_relu, 0.0) == 0.0);
  CHECK(transform_derivative(OutputTransform::nonnegative_relu, 0.0) == 0.0);
  for (auto t : {OutputTransform::identity, OutputTransform::nonpositive_relu,
                 OutputTransform::negative_exp, OutputTransform::nonnegative_relu,
                 OutputTransform::exp}) {
    CHECK(parse_transform(transform_name(t)) == t);
  }
  CHECK_THROWS_AS(parse_activation("sigmoid"), Error);
}

TEST_CASE("init_params shapes, bounds and determinism") {
  const auto s = spec_of({7}, Activation::relu, {OutputTransform::identity, OutputTransform::exp});
  const auto p = init_params(s, 3, 42);
  REQUIRE(p.layer_count() == 2);
  CHECK(p.shape(0).rows == 7);
  CHECK(p.shape(0).cols == 3);
  CHECK(p.shape(1).rows == 2);
  CHECK(p.shape(1).cols == 7);
  CHECK(p.weights(0).size() == 21);
  CHECK(p.bias(0).size() == 7);
  CHECK(p.weights(1).size() == 14);
  CHECK(p.bias(1).size() == 2);
  CHECK(p.size() == 21 + 7 + 14 + 2);

  const double b0 = std::sqrt(6.0 / (3 + 7));
  const double b1 = std::sqrt(6.0 / (7 + 2));
  for (double w : p.weights(0)) CHECK(std::abs(w) <= b0);
  for (double w : p.weights(1)) CHECK(std::abs(w) <= b1);
  for (double b : p.bias(0)) CHECK(b == 0.0);
  for (double b : p.bias(1)) CHECK(b == 0.0);

  CHECK(init_params(s, 3, 42) == p);
  CHECK_FALSE(init_params(s, 3, 43) == p);
  std::size_t weights = 0;
  for (std::size_t i = 0; i < p.size(); ++i) weights += p.is_weight(i) ? 1 : 0;
  CHECK(weights == 35);
}

TEST_CASE("zero network through negative_exp gives -1") {
  const auto s = spec_of({4}, Activation::tanh, {OutputTransform::negative_exp});
  auto p = init_params(s, 3, 1);
  p.set_zero();
  const auto c = forward(p, s, std::vector<double>{0.4, 1.0, 0.0});
  CHECK(c.output[0] == -1.0);
}

TEST_CASE("fitted seven-unit network at z = 0") {
  // Input-hidden weights (inc, full, flex), hidden intercepts, hidden-output
  // weights and output intercept of the fitted synthetic-data network.
  const double w1[7][3] = {{-0.4257, 0.3917, 0.0479}, {0.3907, -0.0925, -0.114},
                           {-0.0001, 0.4637, -0.0764}, {0.8034, -0.2261, -0.2055},
                           {0.812, -0.317, -0.2252},   {0, 0, 0},
                           {0.0396, -0.5551, -0.1817}};
  const double b1[7] = {-0.0315, -0.0543, 0.484, 0.4987, 0.5003, 0, 0.5089};
  const double w2[7] = {0.462, -0.1536, -0.3641, -0.3595, -0.1944, 0, 0.4905};
  const double b2 = 0.0921;
  const auto s = spec_of({7}, Activation::relu, {OutputTransform::nonpositive_relu});
  MlpParams p(s, 3);
  for (std::size_t h = 0; h < 7; ++h) {
    for (std::size_t d = 0; d < 3; ++d) p.weights(0)[h * 3 + d] = w1[h][d];
    p.bias(0)[h] = b1[h];
    p.weights(1)[h] = w2[h];
  }
  p.bias(1)[0] = b2;

  const auto c = forward(p, s, std::vector<double>{0.0, 0.0, 0.0});
  for (std::size_t h = 0; h < 7; ++h) CHECK(c.pre[0][h] == b1[h]);
  CHECK(c.hidden(0)[5] == 0.0);
  double expected = b2;
  for (std::size_t h = 0; h < 7; ++h) expected += w2[h] * std::max(0.0, b1[h]);
  CHECK(c.output[0] == doctest::Approx(std::min(0.0, expected)).epsilon(1e-14));
  // close to the generating intercept of -0.1 $/min
  CHECK(c.output[0] == doctest::Approx(-0.1).epsilon(0.15));

  // unit 6 stays silent for any input
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const auto z = uniform_vector(rng, 3, 0.0, 2.0);
    CHECK(forward(p, s, z).hidden(0)[5] == 0.0);
  }
}

TEST_CASE("backward matches central differences across activations and transforms") {
  std::mt19937_64 rng(7);
  const std::vector<OutputTransform> all{OutputTransform::identity,
                                         OutputTransform::nonpositive_relu,
                                         OutputTransform::negative_exp,
                                         OutputTransform::nonnegative_relu, OutputTransform::exp};
  int checked = 0;
  for (auto act : {Activation::relu, Activation::tanh}) {
    for (const auto& hidden : std::vector<std::vector<std::size_t>>{{}, {3}, {5, 4}}) {
      const auto s = spec_of(hidden, act, all);
      auto p = init_params(s, 4, rng());
      for (auto& b : p.values()) b += 0.05 * std::normal_distribution<double>()(rng);
      const auto z = uniform_vector(rng, 4, -1.0, 1.0);
      const auto upstream = uniform_vector(rng, all.size(), -1.0, 1.0);
      const auto cache = forward(p, s, z);
      const auto g = backward(p, s, cache, upstream);
      const double h = 1e-5;
      for (std::size_t i = 0; i < p.size(); ++i) {
        auto plus = p;
        auto minus = p;
        plus.values()[i] += h;
        minus.values()[i] -= h;
        const double fd = (probe_loss(plus, s, z, upstream) - probe_loss(minus, s, z, upstream)) / (2 * h);
        CHECK(close_rel(g.grads.values()[i], fd, 1e-4, 1e-8));
        ++checked;
      }
      for (std::size_t d = 0; d < z.size(); ++d) {
        auto zp = z;
        auto zm = z;
        zp[d] += h;
        zm[d] -= h;
        const double fd = (probe_loss(p, s, zp, upstream) - probe_loss(p, s, zm, upstream)) / (2 * h);
        CHECK(close_rel(g.input_grad[d], fd, 1e-4, 1e-8));
      }
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("zero upstream gives zero gradients") {
  const auto s = spec_of({6}, Activation::tanh, {OutputTransform::identity, OutputTransform::exp});
  const auto p = init_params(s, 3, 9);
  const auto c = forward(p, s, std::vector<double>{0.1, 0.2, 0.3});
  const auto g = backward(p, s, c, std::vector<double>{0.0, 0.0});
  for (double v : g.grads.values()) CHECK(v == 0.0);
}

TEST_CASE("linear network gradient is the outer product of upstream and input") {
  const auto s = spec_of({}, Activation::relu, {OutputTransform::identity, OutputTransform::identity});
  const auto p = init_params(s, 3, 4);
  const std::vector<double> z{0.5, -2.0, 3.0};
  const std::vector<double> u{1.5, -0.25};
  const auto g = backward(p, s, forward(p, s, z), u);
  for (std::size_t k = 0; k < 2; ++k) {
    for (std::size_t d = 0; d < 3; ++d) CHECK(g.grads.weights(0)[k * 3 + d] == u[k] * z[d]);
    CHECK(g.grads.bias(0)[k] == u[k]);
  }
}

TEST_CASE("sign constraints hold on random inputs and parameters" * doctest::test_suite("property")) {
  std::mt19937_64 rng(2024);
  const auto s = spec_of({8}, Activation::relu,
                         {OutputTransform::nonpositive_relu, OutputTransform::negative_exp,
                          OutputTransform::nonnegative_relu, OutputTransform::exp});
  std::normal_distribution<double> normal(0.0, 3.0);
  std::size_t count = 0;
  for (int net = 0; net < 100; ++net) {
    MlpParams p(s, 3);
    for (auto& v : p.values()) v = normal(rng);
    for (int i = 0; i < 100; ++i, ++count) {
      const std::vector<double> z{normal(rng), normal(rng), normal(rng)};
      const auto out = forward(p, s, z).output;
      REQUIRE(out[0] <= 0.0);
      // negative_exp is strictly negative until exp underflows to -0
      REQUIRE(out[1] <= 0.0);
      REQUIRE(std::signbit(out[1]));
      REQUIRE(out[2] >= 0.0);
      REQUIRE(out[3] >= 0.0);
    }
  }
  CHECK(count == 10000);
}

TEST_CASE("weight penalty skips biases and its gradient matches differences") {
  const auto s = spec_of({3}, Activation::tanh, {OutputTransform::identity});
  auto p = init_params(s, 2, 5);
  for (auto& b : p.bias(0)) b = 10.0;
  double l1 = 0.0, l2 = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!p.is_weight(i)) continue;
    l1 += std::abs(p.values()[i]);
    l2 += p.values()[i] * p.values()[i];
  }
  CHECK(weight_penalty(p, 1) == doctest::Approx(l1).epsilon(1e-14));
  CHECK(weight_penalty(p, 2) == doctest::Approx(l2).epsilon(1e-14));

  for (int norm : {1, 2}) {
    MlpParams g(s, 2);
    add_penalty_gradient(p, norm, 0.3, g);
    for (std::size_t i = 0; i < p.size(); ++i) {
      auto plus = p;
      auto minus = p;
      plus.values()[i] += 1e-6;
      minus.values()[i] -= 1e-6;
      const double fd = 0.3 * (weight_penalty(plus, norm) - weight_penalty(minus, norm)) / 2e-6;
      CHECK(close_rel(g.values()[i], fd, 1e-6, 1e-9));
    }
  }
  // subgradient 0 at w = 0 for p = 1
  MlpParams zero(s, 2);
  MlpParams g(s, 2);
  add_penalty_gradient(zero, 1, 1.0, g);
  for (double v : g.values()) CHECK(v == 0.0);
}

TEST_CASE("spec validation") {
  MlpSpec bad{{0}, {Activation::relu}, {OutputTransform::identity}};
  CHECK_THROWS_AS(bad.validate(), Error);
  MlpSpec mismatch{{3, 3}, {Activation::relu}, {OutputTransform::identity}};
  CHECK_THROWS_AS(mismatch.validate(), Error);
  MlpSpec none{{3}, {Activation::relu}, {}};
  CHECK_THROWS_AS(none.validate(), Error);
}
