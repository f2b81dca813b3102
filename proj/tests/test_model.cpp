#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "support.hpp"
#include "tastenet/estimation.hpp"
#include "tastenet/model.hpp"
#include "tastenet/synth.hpp"

using namespace tastenet;
using test::close_rel;

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Inverse normal CDF by bisection; independent of the library path.
double normal_quantile(double p) {
  double lo = -10.0, hi = 10.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct RandomCase {
  FittedModel model;
  Dataset data;
  std::vector<std::size_t> batch;
  std::optional<DrawTable> draws;
  TrainConfig cfg;
};

// Random schema, utility binding, network and observations. Roughly a third
// of the cases carry a random coefficient.
RandomCase random_case(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  std::uniform_real_distribution<double> u(-1.0, 1.0);

  FeatureSchema schema;
  const std::size_t d = 1 + pick(4);
  const std::size_t j = 2 + pick(3);
  for (std::size_t k = 0; k < d; ++k) {
    schema.characteristic_names.push_back("z" + std::to_string(k));
    schema.characteristic_scaling.push_back(1.0);
  }
  for (std::size_t i = 0; i < j; ++i) {
    schema.alternative_names.push_back("a" + std::to_string(i));
    const std::size_t k = 1 + pick(3);
    std::vector<std::string> names;
    for (std::size_t a = 0; a < k; ++a) names.push_back("x" + std::to_string(a));
    schema.attribute_names.push_back(names);
    schema.attribute_scaling.emplace_back(k, 1.0);
    schema.availability_names.push_back("av" + std::to_string(i));
  }
  schema.choice_name = "y";

  const bool mixed = pick(3) == 0;
  const std::size_t outputs = 1 + pick(4);
  UtilitySpec spec;
  spec.terms.resize(j);
  std::size_t next_output = 0;
  auto add_param = [&](const std::string& name) {
    spec.parametric_names.push_back(name);
    return spec.parametric_names.size() - 1;
  };
  for (std::size_t i = 0; i < j; ++i) {
    auto& terms = spec.terms[i];
    if (i > 0) {
      if (pick(2) == 0) {
        terms.push_back({CoefSource::network(next_output++ % outputs), std::nullopt, {}});
      } else {
        terms.push_back({CoefSource::parametric(add_param("asc" + std::to_string(i))), std::nullopt, {}});
      }
    }
    std::vector<bool> used(outputs, false);
    if (i > 0) used[(next_output + outputs - 1) % outputs] = terms[0].coef.kind == CoefSource::Kind::network;
    for (std::size_t a = 0; a < schema.attribute_names[i].size(); ++a) {
      Term t;
      t.attribute = a;
      const std::size_t kind = pick(4);
      const std::size_t k = next_output % outputs;
      if (kind == 0 && !used[k]) {
        t.coef = CoefSource::network(k);
        used[k] = true;
        ++next_output;
      } else if (kind == 1) {
        t.coef = CoefSource::fixed(-1.0);
      } else {
        t.coef = CoefSource::parametric(add_param("b" + std::to_string(i) + "_" + std::to_string(a)));
        if (pick(2) == 0) t.interactions.push_back(pick(d));
      }
      terms.push_back(t);
    }
    if (mixed && !schema.attribute_names[i].empty()) {
      terms.push_back({CoefSource::random(), 0, {}});
    }
    // a characteristic dummy term
    if (i > 0 && pick(3) == 0) {
      terms.push_back({CoefSource::parametric(add_param("g" + std::to_string(i))), std::nullopt, {pick(d)}});
    }
  }
  if (mixed) {
    RandomCoefficient rc;
    rc.mean.push_back({add_param("mu0"), {}});
    rc.mean.push_back({add_param("mu1"), {pick(d)}});
    rc.log_sigma = add_param("log_sigma");
    rc.draws = 5 + pick(20);
    spec.random = rc;
  }

  MlpSpec mlp;
  const std::size_t layers = pick(3);
  for (std::size_t l = 0; l < layers; ++l) {
    mlp.hidden_sizes.push_back(2 + pick(4));
    mlp.hidden_activations.push_back(pick(2) ? Activation::relu : Activation::tanh);
  }
  for (std::size_t k = 0; k < spec.network_outputs(); ++k) {
    mlp.output_transforms.push_back(static_cast<OutputTransform>(pick(5)));
  }

  const bool has_net = spec.network_outputs() > 0;
  RandomCase c{make_model(schema, spec, has_net ? &mlp : nullptr, rng()), {}, {}, {}, {}};
  for (auto& b : c.model.beta) b = 0.5 * u(rng);
  if (mixed) c.model.beta[spec.random->log_sigma] = std::log(0.3 + 0.5 * std::abs(u(rng)));
  for (auto& w : c.model.mlp.values()) w += 0.1 * u(rng);

  std::vector<Observation> obs;
  const std::size_t n = 20;
  for (std::size_t r = 0; r < n; ++r) {
    Observation o;
    for (std::size_t k = 0; k < d; ++k) o.z.push_back(u(rng));
    for (std::size_t i = 0; i < j; ++i) {
      std::vector<double> x;
      for (std::size_t a = 0; a < schema.attribute_names[i].size(); ++a) x.push_back(2.0 * u(rng));
      o.x.push_back(x);
    }
    o.available.assign(j, 1);
    if (j > 2) o.available[pick(j)] = 0;
    do {
      o.chosen = pick(j);
    } while (!o.available[o.chosen]);
    obs.push_back(o);
  }
  c.data = Dataset(schema, obs);
  for (std::size_t r = 0; r < n; ++r) c.batch.push_back(r);
  if (mixed) c.draws = DrawTable(n, spec.random->draws);
  c.cfg.reg_norm = pick(2) ? 1 : 2;
  c.cfg.reg_strength = pick(2) ? 0.0 : 0.05;
  return c;
}

double loss_of(const RandomCase& c, const FittedModel& m) {
  return regularized_loss(m, c.data, c.batch, c.cfg, c.draws ? &*c.draws : nullptr).loss;
}

}  // namespace

TEST_CASE("halton draws are base-2 points through the normal quantile") {
  std::vector<double> draws(6);
  halton_normal_draws(0, 6, draws);
  // indices 10..15 in base 2, reversed
  const double u[6] = {0.3125, 0.8125, 0.1875, 0.6875, 0.4375, 0.9375};
  for (int r = 0; r < 6; ++r) CHECK(draws[r] == doctest::Approx(normal_quantile(u[r])).epsilon(1e-12));

  std::vector<double> second(3);
  halton_normal_draws(2, 3, second);
  std::vector<double> direct(9);
  halton_normal_draws(0, 9, direct);
  for (int r = 0; r < 3; ++r) CHECK(second[r] == direct[6 + r]);

  const DrawTable table(4, 200);
  double mean = 0, sq = 0;
  for (std::size_t n = 0; n < 4; ++n) {
    for (double e : table.row(n)) {
      mean += e;
      sq += e * e;
    }
  }
  mean /= 800;
  CHECK(std::abs(mean) < 0.01);
  CHECK(sq / 800 == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("gradient check on 50 random configurations" * doctest::test_suite("property")) {
  int mixed = 0, networks = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    CAPTURE(seed);
    const auto c = random_case(1000 + seed);
    mixed += c.model.utility.random ? 1 : 0;
    networks += c.model.has_network() ? 1 : 0;
    const auto r = regularized_loss(c.model, c.data, c.batch, c.cfg, c.draws ? &*c.draws : nullptr);
    const double h = 1e-5;
    for (std::size_t k = 0; k < c.model.beta.size(); ++k) {
      auto plus = c.model;
      auto minus = c.model;
      plus.beta[k] += h;
      minus.beta[k] -= h;
      const double fd = (loss_of(c, plus) - loss_of(c, minus)) / (2 * h);
      CHECK(close_rel(r.grad.beta[k], fd, 1e-4, 1e-8));
    }
    for (std::size_t k = 0; k < c.model.mlp.size(); ++k) {
      auto plus = c.model;
      auto minus = c.model;
      plus.mlp.values()[k] += h;
      minus.mlp.values()[k] -= h;
      const double fd = (loss_of(c, plus) - loss_of(c, minus)) / (2 * h);
      CHECK(close_rel(r.grad.mlp.values()[k], fd, 1e-4, 1e-8));
    }
  }
  CHECK(mixed > 5);
  CHECK(networks > 10);
}

TEST_CASE("twenty-observation batch with three hidden units") {
  synth::GenConfig gen;
  gen.n_train = 20;
  gen.n_dev = 1;
  gen.n_test = 1;
  const auto data = synth::generate_dataset(gen);
  MlpSpec mlp{{3}, {Activation::tanh}, {OutputTransform::nonpositive_relu}};
  auto model = make_model(data.train.schema(), synth::tastenet_spec(), &mlp, 77);
  for (auto& w : model.mlp.bias(1)) w = -0.3;
  std::vector<std::size_t> batch(20);
  for (std::size_t i = 0; i < 20; ++i) batch[i] = i;
  TrainConfig cfg;
  cfg.reg_strength = 0.01;
  const auto r = regularized_loss(model, data.train, batch, cfg);
  CHECK(r.loss == doctest::Approx(r.nll + r.penalty));
  CHECK(r.penalty == doctest::Approx(0.01 * weight_penalty(model.mlp, 2)));
  for (std::size_t k = 0; k < model.mlp.size(); ++k) {
    auto plus = model;
    auto minus = model;
    plus.mlp.values()[k] += 1e-5;
    minus.mlp.values()[k] -= 1e-5;
    const double fd = (regularized_loss(plus, data.train, batch, cfg).loss -
                       regularized_loss(minus, data.train, batch, cfg).loss) / 2e-5;
    CHECK(close_rel(r.grad.mlp.values()[k], fd, 1e-4, 1e-8));
  }

  cfg.reg_strength = 0.0;
  const auto plain = regularized_loss(model, data.train, batch, cfg);
  CHECK(plain.loss == plain.nll);
  CHECK(plain.nll == doctest::Approx(dataset_nll(model, data.train).nll).epsilon(1e-12));

  auto zero = model;
  for (std::size_t i = 0; i < zero.mlp.size(); ++i) {
    if (zero.mlp.is_weight(i)) zero.mlp.values()[i] = 0.0;
  }
  cfg.reg_strength = 0.01;
  CHECK(regularized_loss(zero, data.train, batch, cfg).penalty == 0.0);
}

TEST_CASE("vanishing sigma reduces the mixture to the plain logit") {
  synth::GenConfig gen;
  gen.n_train = 50;
  gen.n_dev = 1;
  gen.n_test = 1;
  const auto data = synth::generate_dataset(gen);
  auto rcl = make_model(data.train.schema(), synth::rcl_i_spec(200), nullptr, 0);
  auto mnl = make_model(data.train.schema(), synth::mnl_i_spec(), nullptr, 0);
  const std::vector<double> b{-0.12, -0.1, -0.6, -0.1, 0.1};
  for (std::size_t k = 0; k < b.size(); ++k) {
    rcl.beta[*rcl.utility.parametric_index(synth::truth_names()[k])] = b[k];
    mnl.beta[*mnl.utility.parametric_index(synth::truth_names()[k])] = b[k];
  }
  rcl.beta[rcl.utility.random->log_sigma] = -60.0;
  CHECK(rcl.sigma() < 1e-25);
  CHECK(std::abs(dataset_nll(rcl, data.train).nll - dataset_nll(mnl, data.train).nll) < 1e-10);
}

TEST_CASE("model JSON round trip") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u, 6u}) {
    const auto c = random_case(seed);
    auto model = c.model;
    model.history = {{0, 0.7, 0.71}, {1, 0.6, 0.65}};
    model.best_epoch = 1;
    model.metadata["note"] = "x";
    const auto back = model_from_json(model_to_json(model));
    CHECK(back == model);
    CHECK(dataset_nll(back, c.data).nll == dataset_nll(model, c.data).nll);
  }
  const auto truth = synth::true_model();
  test::TempDir dir("model");
  save_model(truth, dir.path() / "m.json");
  CHECK(load_model(dir.path() / "m.json") == truth);

  auto doc = model_to_json(truth);
  doc["format"] = "something-else";
  CHECK_THROWS_AS(model_from_json(doc), Error);
}

TEST_CASE("evaluator outputs agree with each other") {
  const auto c = random_case(31);
  Evaluator eval(c.model);
  for (std::size_t n = 0; n < c.data.size(); ++n) {
    const auto eps = c.draws ? c.draws->row(n) : std::span<const double>{};
    const auto out = eval.evaluate(c.data[n], eps);
    const auto p = eval.choice_probabilities(c.data[n], eps);
    double total = 0.0;
    for (double v : p) total += v;
    CHECK(std::abs(total - 1.0) < 1e-12);
    CHECK(eval.loss(c.data[n], eps) == doctest::Approx(-out.chosen_logprob).epsilon(1e-12));
    CHECK(std::exp(out.chosen_logprob) == doctest::Approx(p[c.data[n].chosen]).epsilon(1e-12));
  }
}

TEST_CASE("schema mismatch is detected") {
  const auto model = synth::true_model();
  auto other = model.schema;
  other.characteristic_names[0] = "income";
  CHECK_THROWS_AS(model.check_compatible(other), Error);
  CHECK_NOTHROW(model.check_compatible(model.schema));
}
