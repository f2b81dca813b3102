#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tastenet/data.hpp"

namespace tastenet {

/// Where a utility term gets its coefficient from.
struct CoefSource {
  enum class Kind { network, parametric, fixed, random };

  Kind kind = Kind::fixed;
  std::size_t index = 0;  // network output or parametric slot
  double value = 0.0;     // fixed constant

  static CoefSource network(std::size_t k) { return {Kind::network, k, 0.0}; }
  static CoefSource parametric(std::size_t i) { return {Kind::parametric, i, 0.0}; }
  static CoefSource fixed(double v) { return {Kind::fixed, 0, v}; }
  static CoefSource random() { return {Kind::random, 0, 0.0}; }

  bool operator==(const CoefSource&) const = default;
};

/// coefficient * x[attribute] * prod z[f] for f in interactions. Without an
/// attribute the term is a constant (an ASC, or a characteristic dummy when
/// interactions are present).
struct Term {
  CoefSource coef;
  std::optional<std::size_t> attribute;
  std::vector<std::size_t> interactions;

  bool is_asc() const { return !attribute && interactions.empty(); }
  bool operator==(const Term&) const = default;
};

/// A normally distributed coefficient: mean = sum_t beta[param_t] * prod z,
/// standard deviation exp(beta[log_sigma]).
struct RandomCoefficient {
  struct MeanTerm {
    std::size_t parametric = 0;
    std::vector<std::size_t> interactions;
    bool operator==(const MeanTerm&) const = default;
  };
  std::vector<MeanTerm> mean;
  std::size_t log_sigma = 0;
  std::size_t draws = 200;

  bool operator==(const RandomCoefficient&) const = default;
};

struct UtilitySpec {
  std::vector<std::vector<Term>> terms;  // per alternative
  std::vector<std::string> parametric_names;
  std::optional<RandomCoefficient> random;

  std::size_t alternative_count() const { return terms.size(); }
  std::size_t parametric_count() const { return parametric_names.size(); }
  /// Highest network output index referenced + 1 (0 when none).
  std::size_t network_outputs() const;
  std::optional<std::size_t> parametric_index(const std::string& name) const;

  /// Throws ErrorKind::spec when a source or index does not resolve.
  void validate(const FeatureSchema& schema, std::size_t network_outputs_available) const;

  bool operator==(const UtilitySpec&) const = default;
};

/// Value of prod z[f] for a term's interaction list.
double interaction_product(std::span<const double> z, const std::vector<std::size_t>& factors);

/// Mean of the random coefficient for characteristics z.
double random_mean(const RandomCoefficient& rc, std::span<const double> beta,
                   std::span<const double> z);

/// Utilities of every alternative (unavailable alternatives included) into `out`.
void compute_utilities(std::span<const double> beta_tn, std::span<const double> beta_mnl,
                       const Observation& obs, const UtilitySpec& spec, double random_taste,
                       std::span<double> out);

/// Derivative of V_i with respect to the random coefficient.
double random_slope(const Observation& obs, const UtilitySpec& spec, std::size_t alternative);

/// Utilities for available alternatives only; unavailable entries are empty.
std::vector<std::optional<double>> systematic_utility(
    std::span<const double> beta_tn, std::span<const double> beta_mnl, const Observation& obs,
    const UtilitySpec& spec, std::optional<double> random_taste = std::nullopt);

/// Availability-masked softmax with max subtraction. Unavailable entries are
/// exactly 0. Throws ErrorKind::data when nothing is available.
std::vector<double> probabilities(std::span<const double> utilities,
                                  std::span<const std::uint8_t> available);
std::vector<double> probabilities(const std::vector<std::optional<double>>& utilities);

/// log P(chosen) via log-sum-exp over the available set.
double log_probability(std::span<const double> utilities, std::span<const std::uint8_t> available,
                       std::size_t chosen);

struct ChoiceOutput {
  std::vector<std::optional<double>> utilities;
  std::vector<double> probabilities;
  double chosen_logprob = 0.0;
};

}  // namespace tastenet
