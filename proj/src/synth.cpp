#include "tastenet/synth.hpp"

#include <cmath>
#include <random>

#include "tastenet/error.hpp"

namespace tastenet::synth {
namespace {

constexpr std::size_t kInc = 0;
constexpr std::size_t kFull = 1;
constexpr std::size_t kFlex = 2;
constexpr std::size_t kCost = 0;
constexpr std::size_t kTime = 1;

struct TasteTerm {
  const char* name;
  std::vector<std::size_t> interactions;
};

// Order matches TrueTasteParams::taste_coefficients().
const std::vector<TasteTerm>& taste_terms() {
  static const std::vector<TasteTerm> terms{
      {"b_time", {}},
      {"b_inc_time", {kInc}},
      {"b_full_time", {kFull}},
      {"b_flex_time", {kFlex}},
      {"b_inc_full_time", {kInc, kFull}},
      {"b_inc_flex_time", {kInc, kFlex}},
      {"b_full_flex_time", {kFull, kFlex}},
  };
  return terms;
}

UtilitySpec parametric_spec(std::size_t taste_terms_used) {
  UtilitySpec spec;
  spec.parametric_names.push_back("asc_1");
  for (std::size_t t = 0; t < taste_terms_used; ++t) {
    spec.parametric_names.push_back(taste_terms()[t].name);
  }
  spec.terms.resize(2);
  for (std::size_t i = 0; i < 2; ++i) {
    auto& alt = spec.terms[i];
    if (i == 1) alt.push_back({CoefSource::parametric(0), std::nullopt, {}});
    alt.push_back({CoefSource::fixed(-1.0), kCost, {}});
    for (std::size_t t = 0; t < taste_terms_used; ++t) {
      alt.push_back({CoefSource::parametric(t + 1), kTime, taste_terms()[t].interactions});
    }
  }
  return spec;
}

UtilitySpec random_spec(std::size_t mean_terms, std::size_t draws) {
  UtilitySpec spec;
  spec.parametric_names.push_back("asc_1");
  RandomCoefficient rc;
  for (std::size_t t = 0; t < mean_terms; ++t) {
    spec.parametric_names.push_back(taste_terms()[t].name);
    rc.mean.push_back({t + 1, taste_terms()[t].interactions});
  }
  spec.parametric_names.push_back("log_sigma");
  rc.log_sigma = spec.parametric_names.size() - 1;
  rc.draws = draws;
  spec.random = rc;
  spec.terms.resize(2);
  for (std::size_t i = 0; i < 2; ++i) {
    auto& alt = spec.terms[i];
    if (i == 1) alt.push_back({CoefSource::parametric(0), std::nullopt, {}});
    alt.push_back({CoefSource::fixed(-1.0), kCost, {}});
    alt.push_back({CoefSource::random(), kTime, {}});
  }
  return spec;
}

}  // namespace

std::array<double, 8> TrueTasteParams::as_array() const {
  return {asc1, b0, b_inc, b_full, b_flex, b_inc_full, b_inc_flex, b_full_flex};
}

std::array<double, 7> TrueTasteParams::taste_coefficients() const {
  return {b0, b_inc, b_full, b_flex, b_inc_full, b_inc_flex, b_full_flex};
}

void GenConfig::validate() const {
  if (n_train == 0 || n_dev == 0 || n_test == 0) {
    fail(ErrorKind::argument, "generator split sizes must be positive");
  }
  auto check = [](const Range& r, const char* what) {
    if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi)) {
      fail(ErrorKind::argument, std::string("invalid ") + what + " range");
    }
  };
  check(cost, "cost");
  check(time, "time");
  if (!(attribute_scale > 0.0) || !std::isfinite(attribute_scale)) {
    fail(ErrorKind::argument, "attribute_scale must be positive");
  }
}

std::vector<Characteristics> draw_characteristics(std::size_t n, std::uint64_t seed) {
  if (n == 0) fail(ErrorKind::argument, "draw_characteristics needs n > 0");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  std::lognormal_distribution<double> inc_full(std::log(0.5), 0.25);
  std::lognormal_distribution<double> inc_part(std::log(0.25), 0.2);
  std::vector<Characteristics> out(n);
  for (auto& z : out) {
    z.full = coin(rng) ? 1.0 : 0.0;
    z.flex = coin(rng) ? 1.0 : 0.0;
    z.inc = z.full == 1.0 ? inc_full(rng) : inc_part(rng);
  }
  return out;
}

double true_taste(const Characteristics& z, const TrueTasteParams& p) {
  return p.b0 + p.b_inc * z.inc + p.b_full * z.full + p.b_flex * z.flex +
         p.b_inc_full * z.inc * z.full + p.b_inc_flex * z.inc * z.flex +
         p.b_full_flex * z.full * z.flex;
}

FeatureSchema synthetic_schema(double attribute_scale) {
  FeatureSchema schema;
  schema.characteristic_names = {"inc", "full", "flex"};
  schema.characteristic_scaling = {1.0, 1.0, 1.0};
  schema.alternative_names = {"0", "1"};
  schema.attribute_names = {{"cost", "time"}, {"cost", "time"}};
  schema.attribute_scaling = {{attribute_scale, attribute_scale},
                              {attribute_scale, attribute_scale}};
  schema.availability_names = {"", ""};
  schema.choice_name = "choice";
  return schema;
}

Characteristics characteristics_of(const Observation& obs) {
  return {obs.z.at(kInc), obs.z.at(kFull), obs.z.at(kFlex)};
}

std::size_t draw_choice(std::span<const double> probabilities, double u) {
  double cumulative = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    cumulative += probabilities[i];
    if (u < cumulative) return i;
  }
  // u landed in the rounding gap above the last cumulative sum
  for (std::size_t i = probabilities.size(); i-- > 0;) {
    if (probabilities[i] > 0.0) return i;
  }
  return 0;
}

SyntheticData generate_dataset(const GenConfig& cfg, const TrueTasteParams& params) {
  cfg.validate();
  const FeatureSchema schema = synthetic_schema(cfg.attribute_scale);
  auto make_split = [&](std::size_t n, std::uint64_t stream, SplitTag tag) {
    const std::uint64_t split_seed = derive_seed(cfg.seed, stream);
    const auto people = draw_characteristics(n, derive_seed(split_seed, 0));
    std::mt19937_64 rng(derive_seed(split_seed, 1));
    std::uniform_real_distribution<double> cost(cfg.cost.lo, cfg.cost.hi);
    std::uniform_real_distribution<double> time(cfg.time.lo, cfg.time.hi);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Observation> observations;
    observations.reserve(n);
    for (const auto& z : people) {
      Observation obs;
      obs.z = {z.inc, z.full, z.flex};
      obs.x.resize(2);
      for (auto& x : obs.x) {
        const double c = cost(rng);
        const double t = time(rng);
        x = {c * cfg.attribute_scale, t * cfg.attribute_scale};
      }
      obs.available = {1, 1};
      const double beta = true_taste(z, params);
      const double v0 = -obs.x[0][kCost] + beta * obs.x[0][kTime];
      const double v1 = params.asc1 - obs.x[1][kCost] + beta * obs.x[1][kTime];
      const std::array<double, 2> utilities{v0, v1};
      const auto p = probabilities(utilities, obs.available);
      obs.chosen = draw_choice(p, unit(rng));
      observations.push_back(std::move(obs));
    }
    return Dataset(schema, std::move(observations), tag);
  };
  return {make_split(cfg.n_train, 0, SplitTag::train), make_split(cfg.n_dev, 1, SplitTag::dev),
          make_split(cfg.n_test, 2, SplitTag::test)};
}

UtilitySpec mnl_true_spec() { return parametric_spec(7); }
UtilitySpec mnl_i_spec() { return parametric_spec(4); }
UtilitySpec mnl_ii_spec() { return parametric_spec(5); }
UtilitySpec rcl_i_spec(std::size_t draws) { return random_spec(4, draws); }
UtilitySpec rcl_ii_spec(std::size_t draws) { return random_spec(5, draws); }

UtilitySpec tastenet_spec() {
  UtilitySpec spec;
  spec.parametric_names = {"asc_1"};
  spec.terms.resize(2);
  for (std::size_t i = 0; i < 2; ++i) {
    auto& alt = spec.terms[i];
    if (i == 1) alt.push_back({CoefSource::parametric(0), std::nullopt, {}});
    alt.push_back({CoefSource::fixed(-1.0), kCost, {}});
    alt.push_back({CoefSource::network(0), kTime, {}});
  }
  return spec;
}

const std::array<const char*, 8>& truth_names() {
  static const std::array<const char*, 8> names{
      "asc_1",       "b_time",          "b_inc_time",      "b_full_time",
      "b_flex_time", "b_inc_full_time", "b_inc_flex_time", "b_full_flex_time"};
  return names;
}

FittedModel true_model(const TrueTasteParams& params, double attribute_scale) {
  FittedModel model = make_model(synthetic_schema(attribute_scale), mnl_true_spec(), nullptr, 0);
  const auto values = params.as_array();
  for (std::size_t i = 0; i < values.size(); ++i) {
    model.beta[*model.utility.parametric_index(truth_names()[i])] = values[i];
  }
  model.metadata["source"] = "generating model";
  return model;
}

std::array<double, 8> aligned_coefficients(const FittedModel& model) {
  std::array<double, 8> out{};
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto idx = model.utility.parametric_index(truth_names()[i]);
    out[i] = idx ? model.beta[*idx] : 0.0;
  }
  return out;
}

}  // namespace tastenet::synth
