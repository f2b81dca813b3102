#include "tastenet/indicators.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "tastenet/choice.hpp"
#include "tastenet/error.hpp"
#include "tastenet/format.hpp"

namespace tastenet {

namespace {

double term_coefficient(const FittedModel& model, const Term& t, std::span<const double> tastes,
                        std::span<const double> z) {
  switch (t.coef.kind) {
    case CoefSource::Kind::network:
      return tastes[t.coef.index];
    case CoefSource::Kind::parametric:
      return model.beta[t.coef.index];
    case CoefSource::Kind::fixed:
      return t.coef.value;
    case CoefSource::Kind::random:
      return random_mean(*model.utility.random, model.beta, z);
  }
  return 0.0;
}

std::vector<double> network_tastes(const FittedModel& model, const Observation& obs) {
  if (!model.has_network()) return {};
  return forward(model.mlp, model.mlp_spec, obs.z).output;
}

double marginal_from(const FittedModel& model, const Observation& obs, std::span<const double> tastes,
                     std::size_t alternative, std::size_t attribute) {
  double total = 0.0;
  for (const auto& t : model.utility.terms.at(alternative)) {
    if (t.attribute != attribute) continue;
    total += term_coefficient(model, t, tastes, obs.z) * interaction_product(obs.z, t.interactions);
  }
  return total;
}

void check_target(const FittedModel& model, std::size_t alternative, std::size_t attribute) {
  if (alternative >= model.schema.alternative_count()) {
    fail(ErrorKind::indicator, "alternative index out of range");
  }
  if (attribute >= model.schema.attribute_names[alternative].size()) {
    fail(ErrorKind::indicator, "attribute index out of range");
  }
}

std::vector<double> draws_or_default(const FittedModel& model, std::span<const double> eps,
                                     std::size_t observation) {
  if (!model.utility.random) return {};
  if (!eps.empty()) return {eps.begin(), eps.end()};
  std::vector<double> out(model.utility.random->draws);
  halton_normal_draws(observation, out.size(), out);
  return out;
}

// Elasticity of P(target) with respect to x[alternative][attribute].
Elasticity elasticity_of(const FittedModel& model, Evaluator& eval, const Observation& obs,
                         std::size_t alternative, std::size_t attribute, std::size_t target,
                         std::span<const double> eps) {
  const double x = obs.x[alternative][attribute];
  if (!model.utility.random) {
    const auto p = eval.choice_probabilities(obs);
    const auto tastes = eval.tastes(obs);
    const double beta = marginal_from(model, obs, tastes, alternative, attribute);
    const double delta = target == alternative ? 1.0 : 0.0;
    return {(delta - p[alternative]) * x * beta, false};
  }
  if (x == 0.0) return {0.0, true};
  const double h = 1e-4 * std::fabs(x);
  Observation moved = obs;
  moved.x[alternative][attribute] = x + h;
  const double up = eval.choice_probabilities(moved, eps)[target];
  moved.x[alternative][attribute] = x - h;
  const double down = eval.choice_probabilities(moved, eps)[target];
  const double p = eval.choice_probabilities(obs, eps)[target];
  return {(up - down) / (2.0 * h) * x / p, true};
}

double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

double marginal_utility(const FittedModel& model, const Observation& obs, std::size_t alternative,
                        std::size_t attribute) {
  check_target(model, alternative, attribute);
  const auto tastes = network_tastes(model, obs);
  return marginal_from(model, obs, tastes, alternative, attribute);
}

std::vector<std::optional<double>> value_of_time(const FittedModel& model, const Observation& obs,
                                                 const std::string& time_attribute,
                                                 const std::string& cost_attribute) {
  const auto& schema = model.schema;
  const auto tastes = network_tastes(model, obs);
  std::vector<std::optional<double>> out(schema.alternative_count());
  for (std::size_t i = 0; i < schema.alternative_count(); ++i) {
    const auto t = schema.attribute_index(i, time_attribute);
    if (!t) continue;
    const auto c = schema.attribute_index(i, cost_attribute);
    const std::string alt = "alternative '" + schema.alternative_names[i] + "'";
    if (!c) fail(ErrorKind::indicator, alt + " has a time attribute but no cost attribute");
    std::size_t cost_terms = 0;
    for (const auto& term : model.utility.terms[i]) {
      if (term.attribute != *c) continue;
      ++cost_terms;
      if (term.coef.kind != CoefSource::Kind::fixed || term.coef.value != -1.0 ||
          !term.interactions.empty()) {
        fail(ErrorKind::indicator, alt + ": value of time needs the cost coefficient fixed at -1");
      }
    }
    if (cost_terms != 1) {
      fail(ErrorKind::indicator, alt + ": value of time needs exactly one fixed cost term");
    }
    const double beta = marginal_from(model, obs, tastes, i, *t);
    // per raw minute over per raw currency unit
    const double per_minute =
        -beta * schema.attribute_scaling[i][*t] / schema.attribute_scaling[i][*c];
    out[i] = per_minute * 60.0;
  }
  return out;
}

Elasticity point_elasticity(const FittedModel& model, const Observation& obs,
                            std::size_t alternative, std::size_t attribute,
                            std::span<const double> eps) {
  check_target(model, alternative, attribute);
  Evaluator eval(model);
  const auto draws = draws_or_default(model, eps, 0);
  return elasticity_of(model, eval, obs, alternative, attribute, alternative, draws);
}

double weighted_elasticity(std::span<const double> weights, std::span<const double> elasticities) {
  if (weights.size() != elasticities.size()) {
    fail(ErrorKind::argument, "weights and elasticities differ in length");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t n = 0; n < weights.size(); ++n) {
    num += weights[n] * elasticities[n];
    den += weights[n];
  }
  if (!(den > 0.0)) fail(ErrorKind::indicator, "aggregate elasticity has zero total weight");
  return num / den;
}

AggregateElasticity aggregate_elasticity(const FittedModel& model, const Dataset& data,
                                         const std::string& group_key, std::size_t alternative,
                                         std::size_t attribute) {
  check_target(model, alternative, attribute);
  model.check_compatible(data.schema());
  const auto& schema = model.schema;

  // Group label per observation.
  std::vector<std::string> labels(data.size(), "all");
  std::vector<std::string> expected;
  if (!group_key.empty()) {
    if (const auto* block = schema.categorical_block(group_key)) {
      expected.push_back(group_key + "=" + format_number(block->reference));
      for (double level : block->levels) expected.push_back(group_key + "=" + format_number(level));
      for (std::size_t n = 0; n < data.size(); ++n) {
        std::string label = expected.front();
        for (std::size_t c = 0; c < block->column_count(); ++c) {
          if (data[n].z[block->first_column + c] != 0.0) label = expected[c + 1];
        }
        labels[n] = label;
      }
    } else if (const auto k = schema.characteristic_index(group_key)) {
      for (std::size_t n = 0; n < data.size(); ++n) {
        labels[n] = group_key + "=" + format_number(data[n].z[*k] / schema.characteristic_scaling[*k]);
      }
    } else {
      fail(ErrorKind::indicator, "unknown grouping key '" + group_key + "'");
    }
  }

  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> groups;
  Evaluator eval(model);
  std::vector<double> eps(model.utility.random ? model.utility.random->draws : 0);
  for (std::size_t n = 0; n < data.size(); ++n) {
    if (!eps.empty()) halton_normal_draws(n, eps.size(), eps);
    const auto& obs = data[n];
    if (!obs.is_available(alternative)) continue;
    const double p = eval.choice_probabilities(obs, eps)[alternative];
    const auto e = elasticity_of(model, eval, obs, alternative, attribute, alternative, eps);
    auto& g = groups[labels[n]];
    g.first.push_back(p);
    g.second.push_back(e.value);
  }

  AggregateElasticity out;
  auto emit = [&](const std::string& label) {
    const auto it = groups.find(label);
    if (it == groups.end() || it->second.first.empty()) {
      out.warnings.push_back("group " + label + " is empty; omitted");
      return;
    }
    out.groups.push_back({label, it->second.first.size(),
                          weighted_elasticity(it->second.first, it->second.second)});
  };
  if (!expected.empty()) {
    for (const auto& label : expected) emit(label);
  } else if (group_key.empty()) {
    emit("all");
  } else {
    for (const auto& [label, _] : groups) emit(label);
  }
  return out;
}

std::vector<double> ols(const std::vector<std::vector<double>>& design, std::span<const double> y,
                        const std::vector<std::string>& column_names) {
  const std::size_t n = design.size();
  if (n != y.size()) fail(ErrorKind::argument, "design rows and response differ in length");
  if (n == 0) fail(ErrorKind::regression, "regression has no observations");
  const std::size_t p = column_names.size();
  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd v(n);
  for (std::size_t r = 0; r < n; ++r) {
    if (design[r].size() != p) fail(ErrorKind::argument, "design row has the wrong width");
    for (std::size_t c = 0; c < p; ++c) x(r, c) = design[r][c];
    v(r) = y[r];
  }
  const Eigen::MatrixXd xtx = x.transpose() * x;
  const Eigen::VectorXd xty = x.transpose() * v;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xtx);
  qr.setThreshold(1e-12);
  if (static_cast<std::size_t>(qr.rank()) < p) {
    std::string cols;
    const auto& perm = qr.colsPermutation().indices();
    for (std::size_t j = static_cast<std::size_t>(qr.rank()); j < p; ++j) {
      cols += (cols.empty() ? "" : ", ") + column_names[static_cast<std::size_t>(perm(j))];
    }
    fail(ErrorKind::regression, "design matrix is rank deficient; dependent columns: " + cols);
  }
  const Eigen::VectorXd b = qr.solve(xty);
  return {b.data(), b.data() + b.size()};
}

std::array<double, 7> taste_recovery_regression(std::span<const double> beta,
                                                const std::vector<std::array<double, 3>>& z) {
  if (beta.size() != z.size()) fail(ErrorKind::argument, "tastes and characteristics differ in length");
  std::vector<std::vector<double>> design;
  design.reserve(z.size());
  for (const auto& [inc, full, flex] : z) {
    design.push_back({1.0, inc, full, flex, inc * full, inc * flex, full * flex});
  }
  const auto coef = ols(design, beta, {kTastePolynomialTerms.begin(), kTastePolynomialTerms.end()});
  std::array<double, 7> out{};
  std::copy(coef.begin(), coef.end(), out.begin());
  return out;
}

ErrorMetrics error_metrics(std::span<const double> estimates, std::span<const double> truth) {
  if (estimates.size() != truth.size()) {
    fail(ErrorKind::argument, "estimates and truth differ in length");
  }
  if (estimates.empty()) fail(ErrorKind::argument, "error metrics need at least one entry");
  ErrorMetrics m;
  double sq = 0.0;
  double abs = 0.0;
  double pct = 0.0;
  std::size_t pct_count = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double e = estimates[i] - truth[i];
    sq += e * e;
    abs += std::fabs(e);
    if (truth[i] == 0.0) {
      ++m.mape_excluded;
    } else {
      pct += std::fabs(e / truth[i]);
      ++pct_count;
    }
  }
  const double n = static_cast<double>(truth.size());
  m.rmse = std::sqrt(sq / n);
  m.mae = abs / n;
  m.mape = pct_count ? 100.0 * pct / static_cast<double>(pct_count) : 0.0;
  return m;
}

std::size_t predicted_alternative(std::span<const double> probabilities) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < probabilities.size(); ++i) {
    if (probabilities[i] > probabilities[best]) best = i;
  }
  return best;
}

double macro_f1(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                std::size_t alternatives) {
  if (truth.size() != predicted.size()) fail(ErrorKind::argument, "label lists differ in length");
  std::vector<std::size_t> tp(alternatives, 0), fp(alternatives, 0), fn(alternatives, 0);
  for (std::size_t n = 0; n < truth.size(); ++n) {
    if (truth[n] == predicted[n]) {
      ++tp[truth[n]];
    } else {
      ++fn[truth[n]];
      ++fp[predicted[n]];
    }
  }
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t c = 0; c < alternatives; ++c) {
    const std::size_t denom = 2 * tp[c] + fp[c] + fn[c];
    if (denom == 0) continue;
    total += 2.0 * static_cast<double>(tp[c]) / static_cast<double>(denom);
    ++counted;
  }
  return counted ? total / static_cast<double>(counted) : 0.0;
}

ClassificationMetrics classification_metrics(const FittedModel& model, const Dataset& data) {
  if (data.empty()) fail(ErrorKind::data, "dataset is empty");
  model.check_compatible(data.schema());
  Evaluator eval(model);
  ClassificationMetrics m;
  m.observations = data.size();
  std::vector<double> eps(model.utility.random ? model.utility.random->draws : 0);
  std::vector<std::size_t> truth, predicted;
  truth.reserve(data.size());
  predicted.reserve(data.size());
  double total = 0.0;
  std::size_t correct = 0;
  for (std::size_t n = 0; n < data.size(); ++n) {
    if (!eps.empty()) halton_normal_draws(n, eps.size(), eps);
    const auto& obs = data[n];
    const auto p = eval.choice_probabilities(obs, eps);
    const std::size_t guess = predicted_alternative(p);
    truth.push_back(obs.chosen);
    predicted.push_back(guess);
    if (guess == obs.chosen) ++correct;
    double logp = -eval.loss(obs, eps);
    if (!(logp >= std::log(kMinProbability))) {
      logp = std::log(kMinProbability);
      ++m.clamped;
    }
    total -= logp;
  }
  m.nll = total / static_cast<double>(data.size());
  m.acc = static_cast<double>(correct) / static_cast<double>(data.size());
  m.f1 = macro_f1(truth, predicted, model.schema.alternative_count());
  return m;
}

// ---------------------------------------------------------------------------

ProbeResult activation_probe(const FittedModel& model, const ProbeGrid& grid) {
  if (!model.has_network() || model.mlp_spec.hidden_sizes.empty()) {
    fail(ErrorKind::probe, "activation probe needs a network with at least one hidden layer");
  }
  const auto& schema = model.schema;
  std::vector<double> base(schema.characteristic_count(), 0.0);
  for (const auto& [name, value] : grid.base) {
    const auto k = schema.characteristic_index(name);
    if (!k) fail(ErrorKind::probe, "unknown characteristic '" + name + "'");
    base[*k] = value;
  }
  std::vector<std::size_t> axis_index;
  for (const auto& axis : grid.axes) {
    const auto k = schema.characteristic_index(axis.characteristic);
    if (!k) fail(ErrorKind::probe, "unknown characteristic '" + axis.characteristic + "'");
    if (axis.values.empty()) fail(ErrorKind::probe, "axis '" + axis.characteristic + "' is empty");
    axis_index.push_back(*k);
  }

  ProbeResult out;
  out.columns = schema.characteristic_names;
  for (std::size_t l = 0; l < model.mlp_spec.hidden_sizes.size(); ++l) {
    for (std::size_t u = 0; u < model.mlp_spec.hidden_sizes[l]; ++u) {
      out.columns.push_back("h" + std::to_string(l + 1) + "_" + std::to_string(u + 1));
    }
  }
  std::vector<std::size_t> pos(grid.axes.size(), 0);
  ForwardCache cache;
  std::vector<double> z(base.size());
  while (true) {
    std::vector<double> raw = base;
    for (std::size_t a = 0; a < grid.axes.size(); ++a) raw[axis_index[a]] = grid.axes[a].values[pos[a]];
    for (std::size_t k = 0; k < z.size(); ++k) z[k] = raw[k] * schema.characteristic_scaling[k];
    forward(model.mlp, model.mlp_spec, z, cache);
    std::vector<double> row = raw;
    for (std::size_t l = 0; l < model.mlp_spec.hidden_sizes.size(); ++l) {
      const auto& h = cache.hidden(l);
      row.insert(row.end(), h.begin(), h.end());
    }
    out.rows.push_back(std::move(row));
    // odometer, last axis fastest
    std::size_t a = grid.axes.size();
    while (a > 0) {
      --a;
      if (++pos[a] < grid.axes[a].values.size()) break;
      pos[a] = 0;
      if (a == 0) return out;
    }
    if (grid.axes.empty()) return out;
  }
}

std::vector<WhatIfPoint> what_if_curve(const FittedModel& model, const Observation& base,
                                       std::size_t alternative, std::size_t attribute,
                                       double from, double to, std::size_t steps,
                                       std::optional<std::size_t> target) {
  check_target(model, alternative, attribute);
  if (steps == 0) fail(ErrorKind::argument, "what-if sweep needs at least one point");
  const std::size_t tgt = target.value_or(alternative);
  if (tgt >= model.schema.alternative_count()) fail(ErrorKind::indicator, "target out of range");
  const double scale = model.schema.attribute_scaling[alternative][attribute];
  Evaluator eval(model);
  const auto eps = draws_or_default(model, {}, 0);
  std::vector<WhatIfPoint> out;
  Observation obs = base;
  for (std::size_t s = 0; s < steps; ++s) {
    const double raw =
        steps == 1 ? from
                   : from + (to - from) * static_cast<double>(s) / static_cast<double>(steps - 1);
    obs.x[alternative][attribute] = raw * scale;
    const double p = eval.choice_probabilities(obs, eps)[tgt];
    const auto e = elasticity_of(model, eval, obs, alternative, attribute, tgt, eps);
    out.push_back({raw, p, e.value});
  }
  return out;
}

Observation observation_from_json(const nlohmann::json& doc, const FeatureSchema& schema) {
  Observation obs;
  obs.z.assign(schema.characteristic_count(), 0.0);
  obs.x.resize(schema.alternative_count());
  for (std::size_t i = 0; i < obs.x.size(); ++i) obs.x[i].assign(schema.attribute_names[i].size(), 0.0);
  obs.available.assign(schema.alternative_count(), 1);
  const auto section = [&](const char* key) { return doc.value(key, nlohmann::json::object()); };
  try {
    const nlohmann::json z = section("z");
    const nlohmann::json x = section("x");
    const nlohmann::json available = section("available");
    for (const auto& [name, value] : z.items()) {
      const double v = value.get<double>();
      if (const auto* block = schema.categorical_block(name)) {
        for (std::size_t c = 0; c < block->column_count(); ++c) {
          obs.z[block->first_column + c] = block->levels[c] == v ? 1.0 : 0.0;
        }
        continue;
      }
      const auto k = schema.characteristic_index(name);
      if (!k) fail(ErrorKind::config, "unknown characteristic '" + name + "'");
      obs.z[*k] = v * schema.characteristic_scaling[*k];
    }
    for (const auto& [alt_name, attrs] : x.items()) {
      const auto i = schema.alternative_index(alt_name);
      if (!i) fail(ErrorKind::config, "unknown alternative '" + alt_name + "'");
      for (const auto& [attr, value] : attrs.items()) {
        const auto k = schema.attribute_index(*i, attr);
        if (!k) fail(ErrorKind::config, "unknown attribute '" + attr + "' of " + alt_name);
        obs.x[*i][*k] = value.get<double>() * schema.attribute_scaling[*i][*k];
      }
    }
    for (const auto& [alt_name, flag] : available.items()) {
      const auto i = schema.alternative_index(alt_name);
      if (!i) fail(ErrorKind::config, "unknown alternative '" + alt_name + "'");
      obs.available[*i] = flag.get<bool>() ? 1 : 0;
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::config, std::string("malformed observation: ") + e.what());
  }
  std::size_t first = 0;
  while (first < obs.available.size() && !obs.available[first]) ++first;
  if (first == obs.available.size()) fail(ErrorKind::config, "observation has no available alternative");
  obs.chosen = first;
  return obs;
}

// ---------------------------------------------------------------------------

Summary summarize(std::span<const double> values) {
  if (values.empty()) fail(ErrorKind::argument, "cannot summarize an empty series");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  Summary s;
  double total = 0.0;
  for (double v : sorted) total += v;
  s.mean = total / static_cast<double>(sorted.size());
  s.p05 = quantile(sorted, 0.05);
  s.p25 = quantile(sorted, 0.25);
  s.p50 = quantile(sorted, 0.50);
  s.p75 = quantile(sorted, 0.75);
  s.p95 = quantile(sorted, 0.95);
  return s;
}

IndicatorReport indicator_report(const FittedModel& model, const Dataset& data,
                                 const IndicatorRequest& request) {
  if (data.empty()) fail(ErrorKind::data, "dataset is empty");
  model.check_compatible(data.schema());
  const auto& schema = model.schema;
  for (const auto& e : request.elasticities) check_target(model, e.alternative, e.attribute);

  IndicatorReport report;
  report.columns.push_back("row");

  // (alternative, attribute) pairs whose coefficient is not a fixed constant;
  // attribute == npos marks the alternative's constant.
  constexpr std::size_t kConstant = static_cast<std::size_t>(-1);
  std::vector<std::pair<std::size_t, std::size_t>> taste_cols;
  if (request.tastes) {
    for (std::size_t i = 0; i < schema.alternative_count(); ++i) {
      bool has_constant = false;
      std::vector<bool> varies(schema.attribute_names[i].size(), false);
      for (const auto& t : model.utility.terms[i]) {
        if (t.coef.kind == CoefSource::Kind::fixed) continue;
        if (t.attribute) {
          varies[*t.attribute] = true;
        } else {
          has_constant = true;
        }
      }
      if (has_constant) {
        taste_cols.emplace_back(i, kConstant);
        report.columns.push_back("asc_" + schema.alternative_names[i]);
      }
      for (std::size_t k = 0; k < varies.size(); ++k) {
        if (!varies[k]) continue;
        taste_cols.emplace_back(i, k);
        report.columns.push_back("beta_" + schema.attribute_names[i][k] + "_" +
                                 schema.alternative_names[i]);
      }
    }
  }
  std::vector<std::size_t> vot_alts;
  if (request.vot) {
    for (std::size_t i = 0; i < schema.alternative_count(); ++i) {
      if (schema.attribute_index(i, request.time_attribute)) {
        vot_alts.push_back(i);
        report.columns.push_back("vot_" + schema.alternative_names[i]);
      }
    }
  }
  for (const auto& e : request.elasticities) {
    report.columns.push_back("prob_" + schema.alternative_names[e.alternative]);
    report.columns.push_back("elas_" + schema.attribute_names[e.alternative][e.attribute] + "_" +
                             schema.alternative_names[e.alternative]);
  }

  Evaluator eval(model);
  std::vector<double> eps(model.utility.random ? model.utility.random->draws : 0);
  for (std::size_t n = 0; n < data.size(); ++n) {
    const auto& obs = data[n];
    if (!eps.empty()) halton_normal_draws(n, eps.size(), eps);
    const auto tastes = network_tastes(model, obs);
    std::vector<double> row{static_cast<double>(n)};
    for (const auto& [i, k] : taste_cols) {
      if (k != kConstant) {
        row.push_back(marginal_from(model, obs, tastes, i, k));
        continue;
      }
      double c = 0.0;
      for (const auto& t : model.utility.terms[i]) {
        if (!t.attribute) c += term_coefficient(model, t, tastes, obs.z) * interaction_product(obs.z, t.interactions);
      }
      row.push_back(c);
    }
    if (request.vot) {
      const auto vot = value_of_time(model, obs, request.time_attribute, request.cost_attribute);
      for (std::size_t i : vot_alts) row.push_back(vot[i].value_or(std::nan("")));
    }
    if (!request.elasticities.empty()) {
      const auto p = eval.choice_probabilities(obs, eps);
      for (const auto& e : request.elasticities) {
        row.push_back(p[e.alternative]);
        const auto el = elasticity_of(model, eval, obs, e.alternative, e.attribute, e.alternative, eps);
        report.numeric_elasticities = report.numeric_elasticities || el.numeric;
        row.push_back(obs.is_available(e.alternative) ? el.value : std::nan(""));
      }
    }
    report.rows.push_back(std::move(row));
  }

  for (std::size_t c = 1; c < report.columns.size(); ++c) {
    if (report.columns[c].rfind("prob_", 0) == 0) continue;
    std::vector<double> values;
    for (const auto& row : report.rows) {
      if (!std::isnan(row[c])) values.push_back(row[c]);
    }
    if (!values.empty()) report.summaries.emplace_back(report.columns[c], summarize(values));
  }
  for (const auto& e : request.elasticities) {
    const std::string name = "elas_" + schema.attribute_names[e.alternative][e.attribute] + "_" +
                             schema.alternative_names[e.alternative] +
                             (e.group.empty() ? "" : "_by_" + e.group);
    report.aggregates.emplace_back(name,
                                   aggregate_elasticity(model, data, e.group, e.alternative, e.attribute));
  }
  return report;
}

void write_table_csv(const std::vector<std::string>& columns,
                     const std::vector<std::vector<double>>& rows,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write '" + path.string() + "'");
  for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      out << (c ? "," : "") << (std::isnan(row[c]) ? std::string() : format_number(row[c]));
    }
    out << '\n';
  }
  if (!out) fail(ErrorKind::io, "write failed for '" + path.string() + "'");
}

}  // namespace tastenet
