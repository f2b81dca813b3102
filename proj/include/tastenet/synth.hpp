#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tastenet/choice.hpp"
#include "tastenet/data.hpp"
#include "tastenet/model.hpp"

namespace tastenet::synth {

/// Coefficients of the binary-logit generating model:
///   V_i = ASC_i - cost_i + beta_vot(z) * time_i,  ASC_0 = 0, ASC_1 = asc1
///   beta_vot = b0 + b_inc inc + b_full full + b_flex flex
///            + b_inc_full inc*full + b_inc_flex inc*flex + b_full_flex full*flex
struct TrueTasteParams {
  double asc1 = -0.1;
  double b0 = -0.1;
  double b_inc = -0.5;
  double b_full = -0.1;
  double b_flex = 0.05;
  double b_inc_full = -0.2;
  double b_inc_flex = 0.05;
  double b_full_flex = 0.1;

  /// (asc1, b0, b_inc, b_full, b_flex, b_inc_full, b_inc_flex, b_full_flex)
  std::array<double, 8> as_array() const;
  /// Taste polynomial only, aligned with the taste-recovery regression.
  std::array<double, 7> taste_coefficients() const;
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct GenConfig {
  std::size_t n_train = 10000;
  std::size_t n_dev = 2000;
  std::size_t n_test = 2000;
  std::uint64_t seed = 20190101;
  Range cost{0.2, 40.0};  // $
  Range time{1.0, 90.0};  // minutes
  // Model-side units of cost and time relative to the drawn values. Files
  // keep $ and minutes; the schema carries this factor.
  double attribute_scale = 0.1;

  void validate() const;
};

struct Characteristics {
  double inc = 0.0;   // $ per minute
  double full = 0.0;  // {0, 1}
  double flex = 0.0;  // {0, 1}
};

/// full, flex ~ Bernoulli(0.5); inc ~ LogNormal(log 0.5, 0.25) if full else
/// LogNormal(log 0.25, 0.2).
std::vector<Characteristics> draw_characteristics(std::size_t n, std::uint64_t seed);

double true_taste(const Characteristics& z, const TrueTasteParams& params = {});

/// Characteristics (inc, full, flex); alternatives "0" and "1" with
/// attributes (cost, time); both always available in generated data.
FeatureSchema synthetic_schema(double attribute_scale = 0.1);

Characteristics characteristics_of(const Observation& obs);

struct SyntheticData {
  Dataset train;
  Dataset dev;
  Dataset test;
};

/// Inverse-CDF draw: first alternative whose cumulative probability exceeds u.
std::size_t draw_choice(std::span<const double> probabilities, double u);

SyntheticData generate_dataset(const GenConfig& cfg, const TrueTasteParams& params = {});

// Utility presets over synthetic_schema(). Cost is fixed at -1 in all of them.

/// All generating-model terms with free coefficients (8 parameters).
UtilitySpec mnl_true_spec();
/// Taste = b0 + b1 inc + b2 full + b3 flex.
UtilitySpec mnl_i_spec();
/// MNL-I plus inc*full.
UtilitySpec mnl_ii_spec();
/// Time coefficient from network output 0, ASC_1 parametric.
UtilitySpec tastenet_spec();
/// Random time coefficient with mean as in MNL-I (or MNL-II).
UtilitySpec rcl_i_spec(std::size_t draws = 200);
UtilitySpec rcl_ii_spec(std::size_t draws = 200);

/// The generating model as an MNL-TRUE model with the true coefficients.
FittedModel true_model(const TrueTasteParams& params = {}, double attribute_scale = 0.1);

/// Names of the eight truth-aligned coefficients, in TrueTasteParams::as_array order.
const std::array<const char*, 8>& truth_names();

/// Coefficients of a parametric synthetic model aligned with the truth
/// vector; terms missing from the model are reported as 0.
std::array<double, 8> aligned_coefficients(const FittedModel& model);

}  // namespace tastenet::synth
