#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tastenet {

enum class Activation { relu, tanh };

/// Output transforms. The sign-constraining ones keep a predicted taste in a
/// half-line for every input: nonpositive_relu(x) = -relu(-x),
/// negative_exp(x) = -exp(-x).
enum class OutputTransform { identity, nonpositive_relu, negative_exp, nonnegative_relu, exp };

std::string_view activation_name(Activation a);
Activation parse_activation(std::string_view name);
std::string_view transform_name(OutputTransform t);
OutputTransform parse_transform(std::string_view name);

double apply_activation(Activation a, double x);
/// Derivative in terms of the pre-activation; relu'(0) = 0.
double activation_derivative(Activation a, double pre);
double apply_transform(OutputTransform t, double x);
double transform_derivative(OutputTransform t, double raw);

struct MlpSpec {
  std::vector<std::size_t> hidden_sizes;
  std::vector<Activation> hidden_activations;  // one per hidden layer
  std::vector<OutputTransform> output_transforms;  // one per output

  std::size_t layer_count() const { return hidden_sizes.size() + 1; }
  std::size_t output_count() const { return output_transforms.size(); }
  void validate() const;

  bool operator==(const MlpSpec&) const = default;
};

struct LayerShape {
  std::size_t rows = 0;  // fan-out
  std::size_t cols = 0;  // fan-in
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;

  bool operator==(const LayerShape&) const = default;
};

/// All layer weights (row-major, rows = fan-out) and biases in one flat
/// buffer so optimizers can treat the network as a single vector.
class MlpParams {
 public:
  MlpParams() = default;
  MlpParams(const MlpSpec& spec, std::size_t input_dim);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t layer_count() const { return layers_.size(); }
  const LayerShape& shape(std::size_t layer) const { return layers_[layer]; }

  std::span<double> weights(std::size_t layer);
  std::span<const double> weights(std::size_t layer) const;
  std::span<double> bias(std::size_t layer);
  std::span<const double> bias(std::size_t layer) const;

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return layers_.empty(); }

  /// True for entries that belong to a weight matrix (not a bias).
  bool is_weight(std::size_t flat_index) const;
  void set_zero();

  bool operator==(const MlpParams&) const = default;

 private:
  std::size_t input_dim_ = 0;
  std::vector<LayerShape> layers_;
  std::vector<double> values_;
};

/// Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases.
MlpParams init_params(const MlpSpec& spec, std::size_t input_dim, std::uint64_t seed);

struct ForwardCache {
  std::vector<std::vector<double>> inputs;  // input of each layer
  std::vector<std::vector<double>> pre;     // pre-activation of each layer
  std::vector<double> output;               // transformed output

  const std::vector<double>& raw_output() const { return pre.back(); }
  /// Activations of hidden layer l (= input of layer l+1).
  const std::vector<double>& hidden(std::size_t l) const { return inputs[l + 1]; }
};

void forward(const MlpParams& params, const MlpSpec& spec, std::span<const double> z,
             ForwardCache& cache);
ForwardCache forward(const MlpParams& params, const MlpSpec& spec, std::span<const double> z);

struct BackwardResult {
  MlpParams grads;
  std::vector<double> input_grad;
};

/// Adds d(loss)/d(params) into `grads` given d(loss)/d(output). `scratch`
/// is reused between calls to avoid allocation.
void backward_accumulate(const MlpParams& params, const MlpSpec& spec,
                         const ForwardCache& cache, std::span<const double> upstream,
                         MlpParams& grads, std::vector<double>* input_grad,
                         std::vector<std::vector<double>>& scratch);
BackwardResult backward(const MlpParams& params, const MlpSpec& spec, const ForwardCache& cache,
                        std::span<const double> upstream);

/// sum |w|^p over weight matrices (biases excluded).
double weight_penalty(const MlpParams& params, int p);
/// grads += strength * d(sum |w|^p)/dw; sign(0) = 0 for p = 1.
void add_penalty_gradient(const MlpParams& params, int p, double strength, MlpParams& grads);

}  // namespace tastenet
