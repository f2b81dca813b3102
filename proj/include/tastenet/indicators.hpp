#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tastenet/data.hpp"
#include "tastenet/model.hpp"

namespace tastenet {

/// dV_i / dx_ik for one observation, in model (scaled) units. Random
/// coefficients contribute their mean.
double marginal_utility(const FittedModel& model, const Observation& obs,
                        std::size_t alternative, std::size_t attribute);

/// Value of time per hour for every alternative that has both attributes;
/// empty entries for alternatives lacking a time attribute. Requires the
/// cost coefficient to be fixed at -1 with no interactions; otherwise throws
/// ErrorKind::indicator. Time is taken to be in minutes (raw units).
std::vector<std::optional<double>> value_of_time(const FittedModel& model, const Observation& obs,
                                                 const std::string& time_attribute = "time",
                                                 const std::string& cost_attribute = "cost");

struct Elasticity {
  double value = 0.0;
  bool numeric = false;  // finite difference instead of the closed form
};

/// E = (1 - P_i) x_ik dV_i/dx_ik. Mixed models have no closed form and use a
/// central difference with relative step 1e-4 (flagged numeric); `eps` are
/// that observation's draws.
Elasticity point_elasticity(const FittedModel& model, const Observation& obs,
                            std::size_t alternative, std::size_t attribute,
                            std::span<const double> eps = {});

struct GroupElasticity {
  std::string group;
  std::size_t count = 0;
  double value = 0.0;
};

struct AggregateElasticity {
  std::vector<GroupElasticity> groups;
  std::vector<std::string> warnings;  // e.g. empty groups that were omitted
};

/// sum_n P_n(i) E_n / sum_n P_n(i), per level of `group_key` (a numeric
/// characteristic or a categorical variable); empty key = whole sample.
AggregateElasticity aggregate_elasticity(const FittedModel& model, const Dataset& data,
                                         const std::string& group_key, std::size_t alternative,
                                         std::size_t attribute);

/// Probability-weighted mean of point elasticities; `weights` and
/// `elasticities` are parallel.
double weighted_elasticity(std::span<const double> weights, std::span<const double> elasticities);

/// Ordinary least squares via the normal equations with a column-pivoted
/// solve. Throws ErrorKind::regression naming the dependent columns.
std::vector<double> ols(const std::vector<std::vector<double>>& design, std::span<const double> y,
                        const std::vector<std::string>& column_names);

inline constexpr std::array<const char*, 7> kTastePolynomialTerms{
    "intercept", "inc", "full", "flex", "inc*full", "inc*flex", "full*flex"};

/// Regresses predicted time coefficients on {1, inc, full, flex, inc*full,
/// inc*flex, full*flex}. `z` rows are (inc, full, flex).
std::array<double, 7> taste_recovery_regression(std::span<const double> beta,
                                                const std::vector<std::array<double, 3>>& z);

struct ErrorMetrics {
  double rmse = 0.0;
  double mae = 0.0;
  double mape = 0.0;            // percent, over entries with nonzero truth
  std::size_t mape_excluded = 0;
};

ErrorMetrics error_metrics(std::span<const double> estimates, std::span<const double> truth);

struct ClassificationMetrics {
  double nll = 0.0;
  double acc = 0.0;
  double f1 = 0.0;  // macro over alternatives that occur as truth or prediction
  std::size_t observations = 0;
  std::size_t clamped = 0;
};

/// Argmax ties go to the lowest alternative index.
std::size_t predicted_alternative(std::span<const double> probabilities);

/// Macro F1 from parallel truth/prediction label lists.
double macro_f1(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                std::size_t alternatives);

ClassificationMetrics classification_metrics(const FittedModel& model, const Dataset& data);

// ---------------------------------------------------------------------------
// Hidden-unit probe

struct ProbeAxis {
  std::string characteristic;
  std::vector<double> values;  // raw units
};

/// Cartesian product of the axes; characteristics not on an axis are held
/// at `base` (raw units, default 0).
struct ProbeGrid {
  std::vector<ProbeAxis> axes;
  std::vector<std::pair<std::string, double>> base;
};

struct ProbeResult {
  std::vector<std::string> columns;  // characteristics, then h<layer>_<unit>
  std::vector<std::vector<double>> rows;
};

ProbeResult activation_probe(const FittedModel& model, const ProbeGrid& grid);

// ---------------------------------------------------------------------------
// What-if sweep

struct WhatIfPoint {
  double x = 0.0;  // raw units
  double probability = 0.0;
  double elasticity = 0.0;
};

/// Sweeps attribute `attribute` of `alternative` over [from, to] (raw units,
/// `steps` points inclusive) and reports P(target) and its elasticity with
/// respect to the swept attribute (own or cross).
std::vector<WhatIfPoint> what_if_curve(const FittedModel& model, const Observation& base,
                                       std::size_t alternative, std::size_t attribute,
                                       double from, double to, std::size_t steps,
                                       std::optional<std::size_t> target = std::nullopt);

/// Observation from raw-unit JSON:
///   {"z": {"inc": 1}, "x": {"0": {"cost": 2, "time": 20}}, "available": {"1": true}}
/// Missing entries are 0 (characteristics, attributes) or available.
Observation observation_from_json(const nlohmann::json& doc, const FeatureSchema& schema);

// ---------------------------------------------------------------------------
// Per-person report

struct IndicatorRequest {
  bool tastes = true;
  bool vot = false;
  std::string time_attribute = "time";
  std::string cost_attribute = "cost";
  struct ElasticityRequest {
    std::size_t alternative = 0;
    std::size_t attribute = 0;
    std::string group;  // aggregate grouping key, empty = whole sample
  };
  std::vector<ElasticityRequest> elasticities;
};

struct Summary {
  double mean = 0.0;
  double p05 = 0.0;
  double p25 = 0.0;
  double p50 = 0.0;
  double p75 = 0.0;
  double p95 = 0.0;
};

Summary summarize(std::span<const double> values);

struct IndicatorReport {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;  // one per observation
  std::vector<std::pair<std::string, Summary>> summaries;
  std::vector<std::pair<std::string, AggregateElasticity>> aggregates;
  bool numeric_elasticities = false;
};

IndicatorReport indicator_report(const FittedModel& model, const Dataset& data,
                                 const IndicatorRequest& request);

/// Writes a header row and one row per entry.
void write_table_csv(const std::vector<std::string>& columns,
                     const std::vector<std::vector<double>>& rows,
                     const std::filesystem::path& path);

}  // namespace tastenet
