#include "tastenet/nn.hpp"

#include <cmath>
#include <random>
#include <string>

#include "tastenet/error.hpp"
#include "tastenet/simd/kernels.hpp"

namespace tastenet {

std::string_view activation_name(Activation a) {
  return a == Activation::relu ? "relu" : "tanh";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  fail(ErrorKind::config, "unknown activation '" + std::string(name) + "'");
}

std::string_view transform_name(OutputTransform t) {
  switch (t) {
    case OutputTransform::identity:
      return "identity";
    case OutputTransform::nonpositive_relu:
      return "nonpositive_relu";
    case OutputTransform::negative_exp:
      return "negative_exp";
    case OutputTransform::nonnegative_relu:
      return "nonnegative_relu";
    case OutputTransform::exp:
      return "exp";
  }
  return "identity";
}

OutputTransform parse_transform(std::string_view name) {
  if (name == "identity") return OutputTransform::identity;
  if (name == "nonpositive_relu") return OutputTransform::nonpositive_relu;
  if (name == "negative_exp") return OutputTransform::negative_exp;
  if (name == "nonnegative_relu") return OutputTransform::nonnegative_relu;
  if (name == "exp") return OutputTransform::exp;
  fail(ErrorKind::config, "unknown output transform '" + std::string(name) + "'");
}

double apply_activation(Activation a, double x) {
  return a == Activation::relu ? (x > 0.0 ? x : 0.0) : std::tanh(x);
}

double activation_derivative(Activation a, double pre) {
  if (a == Activation::relu) return pre > 0.0 ? 1.0 : 0.0;
  const double t = std::tanh(pre);
  return 1.0 - t * t;
}

double apply_transform(OutputTransform t, double x) {
  switch (t) {
    case OutputTransform::identity:
      return x;
    case OutputTransform::nonpositive_relu:
      return x < 0.0 ? x : 0.0;
    case OutputTransform::negative_exp:
      return -std::exp(-x);
    case OutputTransform::nonnegative_relu:
      return x > 0.0 ? x : 0.0;
    case OutputTransform::exp:
      return std::exp(x);
  }
  return x;
}

double transform_derivative(OutputTransform t, double raw) {
  switch (t) {
    case OutputTransform::identity:
      return 1.0;
    case OutputTransform::nonpositive_relu:
      return raw < 0.0 ? 1.0 : 0.0;
    case OutputTransform::negative_exp:
      return std::exp(-raw);
    case OutputTransform::nonnegative_relu:
      return raw > 0.0 ? 1.0 : 0.0;
    case OutputTransform::exp:
      return std::exp(raw);
  }
  return 1.0;
}

void MlpSpec::validate() const {
  if (hidden_activations.size() != hidden_sizes.size()) {
    fail(ErrorKind::spec, "one hidden activation per hidden layer is required");
  }
  for (std::size_t h : hidden_sizes) {
    if (h == 0) fail(ErrorKind::spec, "hidden layer sizes must be positive");
  }
  if (output_transforms.empty()) fail(ErrorKind::spec, "network has no outputs");
}

MlpParams::MlpParams(const MlpSpec& spec, std::size_t input_dim) : input_dim_(input_dim) {
  spec.validate();
  if (input_dim == 0) fail(ErrorKind::argument, "network input dimension must be >= 1");
  std::size_t fan_in = input_dim;
  std::size_t offset = 0;
  auto add_layer = [&](std::size_t fan_out) {
    LayerShape s;
    s.rows = fan_out;
    s.cols = fan_in;
    s.weight_offset = offset;
    offset += fan_out * fan_in;
    s.bias_offset = offset;
    offset += fan_out;
    layers_.push_back(s);
    fan_in = fan_out;
  };
  for (std::size_t h : spec.hidden_sizes) add_layer(h);
  add_layer(spec.output_count());
  values_.assign(offset, 0.0);
}

std::span<double> MlpParams::weights(std::size_t layer) {
  const auto& s = layers_.at(layer);
  return std::span<double>(values_).subspan(s.weight_offset, s.rows * s.cols);
}
std::span<const double> MlpParams::weights(std::size_t layer) const {
  const auto& s = layers_.at(layer);
  return std::span<const double>(values_).subspan(s.weight_offset, s.rows * s.cols);
}
std::span<double> MlpParams::bias(std::size_t layer) {
  const auto& s = layers_.at(layer);
  return std::span<double>(values_).subspan(s.bias_offset, s.rows);
}
std::span<const double> MlpParams::bias(std::size_t layer) const {
  const auto& s = layers_.at(layer);
  return std::span<const double>(values_).subspan(s.bias_offset, s.rows);
}

bool MlpParams::is_weight(std::size_t flat_index) const {
  for (const auto& s : layers_) {
    if (flat_index >= s.weight_offset && flat_index < s.bias_offset) return true;
  }
  return false;
}

void MlpParams::set_zero() { std::fill(values_.begin(), values_.end(), 0.0); }

MlpParams init_params(const MlpSpec& spec, std::size_t input_dim, std::uint64_t seed) {
  MlpParams params(spec, input_dim);
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    const auto& s = params.shape(l);
    const double bound = std::sqrt(6.0 / static_cast<double>(s.rows + s.cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& w : params.weights(l)) w = dist(rng);
  }
  return params;
}

void forward(const MlpParams& params, const MlpSpec& spec, std::span<const double> z,
             ForwardCache& cache) {
  if (z.size() != params.input_dim()) {
    fail(ErrorKind::internal, "network input has dimension " + std::to_string(z.size()) +
                                  ", expected " + std::to_string(params.input_dim()));
  }
  const auto& k = simd::kernels();
  const std::size_t layers = params.layer_count();
  cache.inputs.resize(layers);
  cache.pre.resize(layers);
  cache.inputs[0].assign(z.begin(), z.end());
  for (std::size_t l = 0; l < layers; ++l) {
    const auto& s = params.shape(l);
    auto& pre = cache.pre[l];
    pre.resize(s.rows);
    k.affine(params.weights(l).data(), params.bias(l).data(), cache.inputs[l].data(),
             pre.data(), s.rows, s.cols);
    if (l + 1 < layers) {
      auto& next = cache.inputs[l + 1];
      next.resize(s.rows);
      const Activation a = spec.hidden_activations[l];
      for (std::size_t r = 0; r < s.rows; ++r) next[r] = apply_activation(a, pre[r]);
    }
  }
  const auto& raw = cache.pre.back();
  cache.output.resize(raw.size());
  for (std::size_t o = 0; o < raw.size(); ++o) {
    cache.output[o] = apply_transform(spec.output_transforms[o], raw[o]);
  }
}

ForwardCache forward(const MlpParams& params, const MlpSpec& spec, std::span<const double> z) {
  ForwardCache cache;
  forward(params, spec, z, cache);
  return cache;
}

void backward_accumulate(const MlpParams& params, const MlpSpec& spec,
                         const ForwardCache& cache, std::span<const double> upstream,
                         MlpParams& grads, std::vector<double>* input_grad,
                         std::vector<std::vector<double>>& scratch) {
  const std::size_t layers = params.layer_count();
  if (upstream.size() != spec.output_count() || cache.pre.size() != layers ||
      grads.size() != params.size()) {
    fail(ErrorKind::internal, "backward: shape mismatch between cache, params and upstream");
  }
  const auto& k = simd::kernels();
  scratch.resize(layers + 1);
  // delta = d(loss)/d(pre-activation of the current layer)
  auto& delta = scratch[layers];
  const auto& raw = cache.pre.back();
  delta.resize(raw.size());
  for (std::size_t o = 0; o < raw.size(); ++o) {
    delta[o] = upstream[o] * transform_derivative(spec.output_transforms[o], raw[o]);
  }
  std::vector<double>* current = &delta;
  for (std::size_t l = layers; l-- > 0;) {
    const auto& s = params.shape(l);
    k.outer_accumulate(current->data(), cache.inputs[l].data(), grads.weights(l).data(), s.rows,
                       s.cols);
    auto gb = grads.bias(l);
    for (std::size_t r = 0; r < s.rows; ++r) gb[r] += (*current)[r];
    if (l == 0 && input_grad == nullptr) break;
    auto& below = scratch[l];
    below.assign(s.cols, 0.0);
    k.affine_transpose_accumulate(params.weights(l).data(), current->data(), below.data(),
                                  s.rows, s.cols);
    if (l == 0) {
      input_grad->assign(below.begin(), below.end());
      break;
    }
    const Activation a = spec.hidden_activations[l - 1];
    const auto& pre_below = cache.pre[l - 1];
    for (std::size_t c = 0; c < s.cols; ++c) below[c] *= activation_derivative(a, pre_below[c]);
    current = &below;
  }
}

BackwardResult backward(const MlpParams& params, const MlpSpec& spec, const ForwardCache& cache,
                        std::span<const double> upstream) {
  BackwardResult result{MlpParams(params), {}};
  result.grads.set_zero();
  std::vector<std::vector<double>> scratch;
  backward_accumulate(params, spec, cache, upstream, result.grads, &result.input_grad, scratch);
  return result;
}

double weight_penalty(const MlpParams& params, int p) {
  double sum = 0.0;
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    for (double w : params.weights(l)) sum += p == 1 ? std::abs(w) : w * w;
  }
  return sum;
}

void add_penalty_gradient(const MlpParams& params, int p, double strength, MlpParams& grads) {
  if (strength == 0.0) return;
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    const auto w = params.weights(l);
    auto g = grads.weights(l);
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (p == 1) {
        g[i] += strength * (w[i] > 0.0 ? 1.0 : (w[i] < 0.0 ? -1.0 : 0.0));
      } else {
        g[i] += strength * 2.0 * w[i];
      }
    }
  }
}

}  // namespace tastenet
