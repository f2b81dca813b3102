#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tastenet/choice.hpp"
#include "tastenet/data.hpp"
#include "tastenet/nn.hpp"

namespace tastenet {

enum class ModelKind { tastenet, mnl, rcl };

std::string_view model_kind_name(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_nll = 0.0;
  double dev_nll = 0.0;

  bool operator==(const EpochRecord&) const = default;
};

/// Network + parametric coefficients + utility binding, plus the training
/// record. Immutable once training returns it.
struct FittedModel {
  ModelKind kind = ModelKind::mnl;
  FeatureSchema schema;
  UtilitySpec utility;
  MlpSpec mlp_spec;
  MlpParams mlp;  // empty when the utility uses no network outputs
  std::vector<double> beta;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  nlohmann::json metadata = nlohmann::json::object();

  bool has_network() const { return !mlp.empty(); }
  /// Standard deviation of the random coefficient (0 for non-mixed models).
  double sigma() const;
  /// Throws ErrorKind::spec if the parts do not fit together.
  void validate() const;
  void check_compatible(const FeatureSchema& data_schema) const;

  bool operator==(const FittedModel& other) const;
};

/// Builds an untrained model with zero coefficients and (if needed) a
/// network of the given spec initialised from `seed`.
FittedModel make_model(const FeatureSchema& schema, const UtilitySpec& utility,
                       const MlpSpec* mlp_spec, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Simulation draws for the mixed-logit likelihood.

/// Standard-normal draws from the base-2 Halton sequence via the inverse
/// normal CDF. Observation n uses sequence indices [n*R + skip, (n+1)*R + skip).
void halton_normal_draws(std::size_t observation, std::size_t draws, std::span<double> out);

class DrawTable {
 public:
  DrawTable() = default;
  DrawTable(std::size_t observations, std::size_t draws);
  std::span<const double> row(std::size_t observation) const;
  std::size_t draws() const { return draws_; }
  std::size_t observations() const { return draws_ ? values_.size() / draws_ : 0; }

 private:
  std::size_t draws_ = 0;
  std::vector<double> values_;
};

// ---------------------------------------------------------------------------
// Per-observation likelihood evaluation.

struct ModelGradient {
  MlpParams mlp;
  std::vector<double> beta;

  explicit ModelGradient(const FittedModel& model);
  ModelGradient() = default;
  void set_zero();
  void scale(double factor);
};

/// Reusable workspace bound to one model. Not thread-safe; use one per thread.
class Evaluator {
 public:
  explicit Evaluator(const FittedModel& model);

  /// Network outputs (empty span without a network).
  std::span<const double> tastes(const Observation& obs);

  /// Probabilities, utilities (at the random-coefficient mean for mixed
  /// models) and log P(chosen). `eps` are the draws for this observation
  /// (required for mixed models, ignored otherwise).
  ChoiceOutput evaluate(const Observation& obs, std::span<const double> eps = {});

  /// Probabilities only.
  std::vector<double> choice_probabilities(const Observation& obs,
                                           std::span<const double> eps = {});

  /// -log P(chosen); exact (unclamped).
  double loss(const Observation& obs, std::span<const double> eps = {});

  /// -log P(chosen), adding its gradient into `grad`.
  double loss_and_gradient(const Observation& obs, std::span<const double> eps,
                           ModelGradient& grad);

 private:
  void run_network(const Observation& obs);

  const FittedModel& model_;
  ForwardCache cache_;
  std::vector<std::vector<double>> scratch_;
  std::vector<double> utilities_;
  std::vector<double> probs_;
  std::vector<double> upstream_;
  std::vector<double> base_;
  std::vector<double> slope_;
  std::vector<double> d_base_;
  std::vector<std::size_t> alt_index_;
};

struct LikelihoodSummary {
  double nll = 0.0;
  std::size_t observations = 0;
  std::vector<std::size_t> clamped;  // observations whose P(chosen) < 1e-300
};

inline constexpr double kMinProbability = 1e-300;

/// Mean of -log P(chosen) with the log argument clamped at 1e-300.
LikelihoodSummary dataset_nll(const FittedModel& model, const Dataset& data);

// ---------------------------------------------------------------------------
// Serialization

inline constexpr const char* kModelFormat = "tastenet-model/1";

nlohmann::json model_to_json(const FittedModel& model);
FittedModel model_from_json(const nlohmann::json& doc);
void save_model(const FittedModel& model, const std::filesystem::path& path);
FittedModel load_model(const std::filesystem::path& path);

/// Parametric coefficients as an ordered {name: value} object.
nlohmann::ordered_json coefficients_json(const FittedModel& model);

}  // namespace tastenet
