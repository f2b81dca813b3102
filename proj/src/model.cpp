#include "tastenet/model.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <fstream>
#include <limits>

#include "tastenet/config.hpp"
#include "tastenet/error.hpp"
#include "tastenet/simd/kernels.hpp"

namespace tastenet {

std::string_view model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::tastenet:
      return "tastenet";
    case ModelKind::mnl:
      return "mnl";
    case ModelKind::rcl:
      return "rcl";
  }
  return "mnl";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "tastenet") return ModelKind::tastenet;
  if (name == "mnl") return ModelKind::mnl;
  if (name == "rcl") return ModelKind::rcl;
  fail(ErrorKind::config, "unknown model kind '" + std::string(name) + "'");
}

double FittedModel::sigma() const {
  if (!utility.random) return 0.0;
  return std::exp(beta.at(utility.random->log_sigma));
}

void FittedModel::validate() const {
  const std::size_t outputs = utility.network_outputs();
  if (outputs > 0) {
    if (mlp.empty()) fail(ErrorKind::spec, "utility uses network outputs but model has no network");
    if (mlp_spec.output_count() != outputs) {
      fail(ErrorKind::spec, "network has " + std::to_string(mlp_spec.output_count()) +
                                " outputs, utility uses " + std::to_string(outputs));
    }
    if (mlp.input_dim() != schema.characteristic_count()) {
      fail(ErrorKind::spec, "network input dimension does not match characteristic count");
    }
  }
  utility.validate(schema, mlp.empty() ? 0 : mlp_spec.output_count());
  if (beta.size() != utility.parametric_count()) {
    fail(ErrorKind::spec, "parametric coefficient count does not match the utility");
  }
  if ((kind == ModelKind::rcl) != utility.random.has_value()) {
    fail(ErrorKind::spec, "model kind and random-coefficient declaration disagree");
  }
}

void FittedModel::check_compatible(const FeatureSchema& data_schema) const {
  if (data_schema.characteristic_names != schema.characteristic_names ||
      data_schema.alternative_names != schema.alternative_names ||
      data_schema.attribute_names != schema.attribute_names) {
    fail(ErrorKind::spec, "dataset schema does not match the schema the model was built for");
  }
  if (data_schema.attribute_scaling != schema.attribute_scaling ||
      data_schema.characteristic_scaling != schema.characteristic_scaling) {
    fail(ErrorKind::spec, "dataset scaling differs from the model's scaling");
  }
}

bool FittedModel::operator==(const FittedModel& other) const {
  return kind == other.kind && schema == other.schema && utility == other.utility &&
         mlp_spec == other.mlp_spec && mlp == other.mlp && beta == other.beta &&
         history == other.history && best_epoch == other.best_epoch;
}

FittedModel make_model(const FeatureSchema& schema, const UtilitySpec& utility,
                       const MlpSpec* mlp_spec, std::uint64_t seed) {
  FittedModel model;
  model.schema = schema;
  model.utility = utility;
  model.beta.assign(utility.parametric_count(), 0.0);
  if (utility.random) {
    model.kind = ModelKind::rcl;
    // sigma starts at 0.1 on the model scale
    model.beta[utility.random->log_sigma] = std::log(0.1);
  } else if (utility.network_outputs() > 0) {
    model.kind = ModelKind::tastenet;
  }
  if (utility.network_outputs() > 0) {
    if (!mlp_spec) fail(ErrorKind::spec, "utility uses network outputs but no network was given");
    model.mlp_spec = *mlp_spec;
    model.mlp = init_params(*mlp_spec, schema.characteristic_count(), seed);
  }
  model.validate();
  return model;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::size_t kHaltonSkip = 10;

double radical_inverse_base2(std::uint64_t index) {
  double result = 0.0;
  double f = 0.5;
  while (index) {
    if (index & 1U) result += f;
    index >>= 1U;
    f *= 0.5;
  }
  return result;
}

}  // namespace

void halton_normal_draws(std::size_t observation, std::size_t draws, std::span<double> out) {
  const std::uint64_t start = static_cast<std::uint64_t>(observation) * draws + kHaltonSkip;
  for (std::size_t r = 0; r < draws; ++r) {
    const double u = radical_inverse_base2(start + r);
    out[r] = std::sqrt(2.0) * boost::math::erf_inv(2.0 * u - 1.0);
  }
}

DrawTable::DrawTable(std::size_t observations, std::size_t draws)
    : draws_(draws), values_(observations * draws) {
  for (std::size_t n = 0; n < observations; ++n) {
    halton_normal_draws(n, draws, std::span<double>(values_).subspan(n * draws, draws));
  }
}

std::span<const double> DrawTable::row(std::size_t observation) const {
  return std::span<const double>(values_).subspan(observation * draws_, draws_);
}

// ---------------------------------------------------------------------------

ModelGradient::ModelGradient(const FittedModel& model)
    : mlp(model.mlp), beta(model.beta.size(), 0.0) {
  mlp.set_zero();
}

void ModelGradient::set_zero() {
  mlp.set_zero();
  std::fill(beta.begin(), beta.end(), 0.0);
}

void ModelGradient::scale(double factor) {
  for (double& v : mlp.values()) v *= factor;
  for (double& v : beta) v *= factor;
}

Evaluator::Evaluator(const FittedModel& model) : model_(model) {
  const std::size_t alternatives = model.schema.alternative_count();
  utilities_.resize(alternatives);
  probs_.resize(alternatives);
  base_.resize(alternatives);
  slope_.resize(alternatives);
  d_base_.resize(alternatives);
  alt_index_.resize(alternatives);
  upstream_.resize(model.has_network() ? model.mlp_spec.output_count() : 0);
  if (alternatives > simd::kMaxMixtureAlternatives && model.utility.random) {
    fail(ErrorKind::spec, "mixed logit supports at most " +
                              std::to_string(simd::kMaxMixtureAlternatives) + " alternatives");
  }
}

void Evaluator::run_network(const Observation& obs) {
  if (model_.has_network()) forward(model_.mlp, model_.mlp_spec, obs.z, cache_);
}

std::span<const double> Evaluator::tastes(const Observation& obs) {
  if (!model_.has_network()) return {};
  run_network(obs);
  return cache_.output;
}

namespace {

std::span<const double> network_output(const FittedModel& model, const ForwardCache& cache) {
  if (!model.has_network()) return {};
  return cache.output;
}

}  // namespace

ChoiceOutput Evaluator::evaluate(const Observation& obs, std::span<const double> eps) {
  ChoiceOutput out;
  out.probabilities = choice_probabilities(obs, eps);
  const double mean =
      model_.utility.random ? random_mean(*model_.utility.random, model_.beta, obs.z) : 0.0;
  compute_utilities(network_output(model_, cache_), model_.beta, obs, model_.utility, mean,
                    utilities_);
  out.utilities.resize(utilities_.size());
  for (std::size_t i = 0; i < utilities_.size(); ++i) {
    if (obs.is_available(i)) out.utilities[i] = utilities_[i];
  }
  const double p = out.probabilities[obs.chosen];
  out.chosen_logprob = model_.utility.random ? std::log(p)
                                             : log_probability(utilities_, obs.available, obs.chosen);
  return out;
}

std::vector<double> Evaluator::choice_probabilities(const Observation& obs,
                                                    std::span<const double> eps) {
  run_network(obs);
  const auto beta_tn = network_output(model_, cache_);
  if (!model_.utility.random) {
    compute_utilities(beta_tn, model_.beta, obs, model_.utility, 0.0, utilities_);
    return probabilities(utilities_, obs.available);
  }
  if (eps.empty()) fail(ErrorKind::internal, "mixed model evaluated without draws");
  const auto& rc = *model_.utility.random;
  const double mu = random_mean(rc, model_.beta, obs.z);
  const double sigma = model_.sigma();
  std::vector<double> avg(obs.available.size(), 0.0);
  for (double e : eps) {
    compute_utilities(beta_tn, model_.beta, obs, model_.utility, mu + sigma * e, utilities_);
    const auto p = probabilities(utilities_, obs.available);
    for (std::size_t i = 0; i < p.size(); ++i) avg[i] += p[i];
  }
  for (double& v : avg) v /= static_cast<double>(eps.size());
  return avg;
}

double Evaluator::loss(const Observation& obs, std::span<const double> eps) {
  run_network(obs);
  const auto beta_tn = network_output(model_, cache_);
  if (!model_.utility.random) {
    compute_utilities(beta_tn, model_.beta, obs, model_.utility, 0.0, utilities_);
    return -log_probability(utilities_, obs.available, obs.chosen);
  }
  if (eps.empty()) fail(ErrorKind::internal, "mixed model evaluated without draws");
  compute_utilities(beta_tn, model_.beta, obs, model_.utility, 0.0, utilities_);
  std::size_t count = 0;
  std::size_t chosen_pos = 0;
  for (std::size_t i = 0; i < utilities_.size(); ++i) {
    if (!obs.is_available(i)) continue;
    if (i == obs.chosen) chosen_pos = count;
    base_[count] = utilities_[i];
    slope_[count] = random_slope(obs, model_.utility, i);
    ++count;
  }
  const auto& rc = *model_.utility.random;
  const auto sums = simd::kernels().logit_mixture(
      base_.data(), slope_.data(), count, chosen_pos, random_mean(rc, model_.beta, obs.z),
      model_.sigma(), eps.data(), eps.size(), d_base_.data());
  return -std::log(sums.prob / static_cast<double>(eps.size()));
}

double Evaluator::loss_and_gradient(const Observation& obs, std::span<const double> eps,
                                    ModelGradient& grad) {
  run_network(obs);
  const auto beta_tn = network_output(model_, cache_);
  const auto& spec = model_.utility;
  const std::size_t alternatives = utilities_.size();
  double loss_value = 0.0;

  // probs_ receives d(loss)/dV_i for every alternative
  if (!spec.random) {
    compute_utilities(beta_tn, model_.beta, obs, spec, 0.0, utilities_);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < alternatives; ++i) {
      if (obs.is_available(i)) top = std::max(top, utilities_[i]);
    }
    double denom = 0.0;
    for (std::size_t i = 0; i < alternatives; ++i) {
      probs_[i] = obs.is_available(i) ? std::exp(utilities_[i] - top) : 0.0;
      denom += probs_[i];
    }
    for (std::size_t i = 0; i < alternatives; ++i) probs_[i] /= denom;
    loss_value = -(utilities_[obs.chosen] - top - std::log(denom));
    probs_[obs.chosen] -= 1.0;
  } else {
    if (eps.empty()) fail(ErrorKind::internal, "mixed model evaluated without draws");
    compute_utilities(beta_tn, model_.beta, obs, spec, 0.0, utilities_);
    std::size_t count = 0;
    std::size_t chosen_pos = 0;
    for (std::size_t i = 0; i < alternatives; ++i) {
      if (!obs.is_available(i)) continue;
      if (i == obs.chosen) chosen_pos = count;
      alt_index_[count] = i;
      base_[count] = utilities_[i];
      slope_[count] = random_slope(obs, spec, i);
      ++count;
    }
    const auto& rc = *spec.random;
    const double sigma = model_.sigma();
    const auto sums = simd::kernels().logit_mixture(
        base_.data(), slope_.data(), count, chosen_pos, random_mean(rc, model_.beta, obs.z), sigma,
        eps.data(), eps.size(), d_base_.data());
    loss_value = -std::log(sums.prob / static_cast<double>(eps.size()));
    std::fill(probs_.begin(), probs_.end(), 0.0);
    for (std::size_t c = 0; c < count; ++c) probs_[alt_index_[c]] = -d_base_[c] / sums.prob;
    const double d_mu = -sums.d_mu / sums.prob;
    for (const auto& m : rc.mean) {
      grad.beta[m.parametric] += d_mu * interaction_product(obs.z, m.interactions);
    }
    grad.beta[rc.log_sigma] += -sums.d_sigma / sums.prob * sigma;
  }

  std::fill(upstream_.begin(), upstream_.end(), 0.0);
  for (std::size_t i = 0; i < alternatives; ++i) {
    const double g = probs_[i];
    if (g == 0.0) continue;
    for (const auto& t : spec.terms[i]) {
      if (t.coef.kind == CoefSource::Kind::fixed || t.coef.kind == CoefSource::Kind::random) {
        continue;
      }
      double mult = interaction_product(obs.z, t.interactions);
      if (t.attribute) mult *= obs.x[i][*t.attribute];
      if (t.coef.kind == CoefSource::Kind::network) {
        upstream_[t.coef.index] += g * mult;
      } else {
        grad.beta[t.coef.index] += g * mult;
      }
    }
  }
  if (model_.has_network()) {
    backward_accumulate(model_.mlp, model_.mlp_spec, cache_, upstream_, grad.mlp, nullptr,
                        scratch_);
  }
  return loss_value;
}

LikelihoodSummary dataset_nll(const FittedModel& model, const Dataset& data) {
  if (data.empty()) fail(ErrorKind::data, "dataset is empty");
  model.check_compatible(data.schema());
  Evaluator eval(model);
  LikelihoodSummary summary;
  summary.observations = data.size();
  std::vector<double> eps(model.utility.random ? model.utility.random->draws : 0);
  const double floor = std::log(kMinProbability);
  double total = 0.0;
  for (std::size_t n = 0; n < data.size(); ++n) {
    if (!eps.empty()) halton_normal_draws(n, eps.size(), eps);
    double logp = -eval.loss(data[n], eps);
    if (!(logp >= floor)) {
      logp = floor;
      summary.clamped.push_back(n);
    }
    total += -logp;
  }
  summary.nll = total / static_cast<double>(data.size());
  return summary;
}

// ---------------------------------------------------------------------------

nlohmann::ordered_json coefficients_json(const FittedModel& model) {
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < model.beta.size(); ++i) {
    out[model.utility.parametric_names[i]] = model.beta[i];
  }
  return out;
}

nlohmann::json model_to_json(const FittedModel& model) {
  nlohmann::json doc;
  doc["format"] = kModelFormat;
  doc["kind"] = model_kind_name(model.kind);
  doc["schema"] = schema_to_json(model.schema);
  doc["utility"] = utility_to_json(model.utility, model.schema);
  if (model.has_network()) {
    nlohmann::json net = mlp_spec_to_json(model.mlp_spec);
    net["input_dim"] = model.mlp.input_dim();
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t l = 0; l < model.mlp.layer_count(); ++l) {
      const auto w = model.mlp.weights(l);
      const auto b = model.mlp.bias(l);
      layers.push_back({{"rows", model.mlp.shape(l).rows},
                        {"cols", model.mlp.shape(l).cols},
                        {"weights", std::vector<double>(w.begin(), w.end())},
                        {"bias", std::vector<double>(b.begin(), b.end())}});
    }
    net["layers"] = std::move(layers);
    doc["network"] = std::move(net);
  } else {
    doc["network"] = nullptr;
  }
  nlohmann::json coefs = nlohmann::json::array();
  for (std::size_t i = 0; i < model.beta.size(); ++i) {
    coefs.push_back({{"name", model.utility.parametric_names[i]}, {"value", model.beta[i]}});
  }
  doc["coefficients"] = std::move(coefs);
  if (model.utility.random) doc["sigma"] = model.sigma();
  nlohmann::json history = nlohmann::json::array();
  for (const auto& h : model.history) history.push_back({h.epoch, h.train_nll, h.dev_nll});
  doc["history"] = std::move(history);
  doc["best_epoch"] = model.best_epoch;
  doc["metadata"] = model.metadata;
  return doc;
}

FittedModel model_from_json(const nlohmann::json& doc) {
  try {
    if (doc.value("format", std::string()) != kModelFormat) {
      fail(ErrorKind::config, "not a model file (format tag missing or unsupported)");
    }
    FittedModel model;
    model.kind = parse_model_kind(doc.at("kind").get<std::string>());
    model.schema = schema_from_json(doc.at("schema"));
    model.utility = utility_from_json(doc.at("utility"), model.schema);
    const auto& net = doc.at("network");
    if (!net.is_null()) {
      model.mlp_spec = mlp_spec_from_json(net);
      model.mlp = MlpParams(model.mlp_spec, net.at("input_dim").get<std::size_t>());
      const auto& layers = net.at("layers");
      if (layers.size() != model.mlp.layer_count()) {
        fail(ErrorKind::config, "network layer count does not match its spec");
      }
      for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto w = layers[l].at("weights").get<std::vector<double>>();
        const auto b = layers[l].at("bias").get<std::vector<double>>();
        auto dw = model.mlp.weights(l);
        auto db = model.mlp.bias(l);
        if (w.size() != dw.size() || b.size() != db.size()) {
          fail(ErrorKind::config, "network layer " + std::to_string(l) + " has the wrong shape");
        }
        std::copy(w.begin(), w.end(), dw.begin());
        std::copy(b.begin(), b.end(), db.begin());
      }
    }
    model.beta.assign(model.utility.parametric_count(), 0.0);
    for (const auto& c : doc.at("coefficients")) {
      const auto name = c.at("name").get<std::string>();
      const auto idx = model.utility.parametric_index(name);
      if (!idx) fail(ErrorKind::config, "coefficient '" + name + "' is not in the utility");
      model.beta[*idx] = c.at("value").get<double>();
    }
    for (const auto& h : doc.value("history", nlohmann::json::array())) {
      model.history.push_back({h.at(0).get<std::size_t>(), h.at(1).get<double>(),
                               h.at(2).get<double>()});
    }
    model.best_epoch = doc.value("best_epoch", std::size_t{0});
    model.metadata = doc.value("metadata", nlohmann::json::object());
    model.validate();
    return model;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::config, std::string("malformed model document: ") + e.what());
  }
}

void save_model(const FittedModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write '" + path.string() + "'");
  out << model_to_json(model).dump(2) << '\n';
  if (!out) fail(ErrorKind::io, "write failed for '" + path.string() + "'");
}

FittedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open model file '" + path.string() + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::config, "model file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return model_from_json(doc);
}

}  // namespace tastenet
