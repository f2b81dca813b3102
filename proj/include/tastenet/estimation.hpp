#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tastenet/data.hpp"
#include "tastenet/model.hpp"
#include "tastenet/nn.hpp"

namespace tastenet {

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 500;
  std::size_t patience = 20;
  int reg_norm = 2;
  double reg_strength = 0.0;
  std::uint64_t seed = 0;
  std::size_t restarts = 5;
  // Adam moments
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // divergence guard: any |parameter| beyond this aborts the run
  double max_abs_param = 1e3;

  /// Throws ErrorKind::argument on out-of-range values.
  void validate() const;
};

/// What to build: utility binding plus an optional network.
struct ModelSpec {
  FeatureSchema schema;
  UtilitySpec utility;
  std::optional<MlpSpec> mlp;
};

struct LossResult {
  double loss = 0.0;  // nll + penalty
  double nll = 0.0;   // mean over the batch
  double penalty = 0.0;
  ModelGradient grad;
};

/// Mean -log P(chosen) over `batch` (row indices into `data`) plus
/// reg_strength * sum |w|^p over network weights. `draws` is required for
/// mixed models and indexed by row. Throws ErrorKind::training naming the
/// first observation whose loss is not finite.
LossResult regularized_loss(const FittedModel& model, const Dataset& data,
                            std::span<const std::size_t> batch, const TrainConfig& cfg,
                            const DrawTable* draws = nullptr);

/// One seeded optimisation run (restart `restart` of cfg.seed). Adam on
/// shuffled mini-batches, early stopping on dev NLL, best checkpoint kept.
FittedModel train_single(const ModelSpec& spec, const Dataset& train, const Dataset& dev,
                         const TrainConfig& cfg, std::size_t restart);

/// Best-dev-NLL model over cfg.restarts seeded runs.
FittedModel train(const ModelSpec& spec, const Dataset& train, const Dataset& dev,
                  const TrainConfig& cfg);

/// train() for a utility without network outputs or random coefficients.
FittedModel estimate_mnl(const FeatureSchema& schema, const UtilitySpec& utility,
                         const Dataset& train, const Dataset& dev, const TrainConfig& cfg);

struct RclFit {
  FittedModel model;
  double sigma = 0.0;
};

/// Simulated maximum likelihood for a utility with one random coefficient.
RclFit estimate_rcl(const FeatureSchema& schema, const UtilitySpec& utility,
                    const Dataset& train, const Dataset& dev, const TrainConfig& cfg);

// ---------------------------------------------------------------------------
// Grid search

struct SearchSpace {
  std::vector<std::vector<std::size_t>> hidden_sizes;
  std::vector<Activation> activations;
  // Applied to every output whose base transform is not identity.
  std::vector<OutputTransform> constrained_transforms;
  std::vector<int> reg_norms;
  std::vector<double> reg_strengths;

  std::size_t config_count() const;
  void validate() const;
};

struct GridRow {
  std::size_t config = 0;
  std::size_t restart = 0;
  std::vector<std::size_t> hidden_sizes;
  Activation activation = Activation::relu;
  OutputTransform transform = OutputTransform::identity;
  int reg_norm = 2;
  double reg_strength = 0.0;
  bool ok = false;
  std::string error;
  double train_nll = 0.0;
  double dev_nll = 0.0;
  double train_acc = 0.0;
  double dev_acc = 0.0;
  std::size_t epochs = 0;
};

struct GridResult {
  std::vector<GridRow> rows;         // config-major, restart-minor
  std::vector<std::size_t> ranking;  // successful rows by dev NLL, ties by position
  std::optional<FittedModel> best;
};

/// Runs every (config, restart) pair; failures are recorded, not thrown.
/// `base.mlp` supplies the output count and which outputs are constrained.
GridResult grid_search(const ModelSpec& base, const SearchSpace& space, const Dataset& train,
                       const Dataset& dev, const TrainConfig& cfg, std::size_t workers = 1);

void write_grid_csv(const GridResult& result, const std::filesystem::path& path);

}  // namespace tastenet
