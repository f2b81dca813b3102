#include "tastenet/choice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "tastenet/error.hpp"

namespace tastenet {

std::size_t UtilitySpec::network_outputs() const {
  std::size_t count = 0;
  for (const auto& alt : terms) {
    for (const auto& t : alt) {
      if (t.coef.kind == CoefSource::Kind::network) count = std::max(count, t.coef.index + 1);
    }
  }
  return count;
}

std::optional<std::size_t> UtilitySpec::parametric_index(const std::string& name) const {
  const auto it = std::find(parametric_names.begin(), parametric_names.end(), name);
  if (it == parametric_names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - parametric_names.begin());
}

void UtilitySpec::validate(const FeatureSchema& schema,
                           std::size_t network_outputs_available) const {
  if (terms.size() != schema.alternative_count()) {
    fail(ErrorKind::spec, "utility lists " + std::to_string(terms.size()) +
                              " alternatives, schema has " +
                              std::to_string(schema.alternative_count()));
  }
  std::set<std::string> names(parametric_names.begin(), parametric_names.end());
  if (names.size() != parametric_names.size()) {
    fail(ErrorKind::spec, "duplicate parametric coefficient names");
  }
  auto check_interactions = [&](const std::vector<std::size_t>& factors) {
    for (std::size_t f : factors) {
      if (f >= schema.characteristic_count()) {
        fail(ErrorKind::spec, "interaction refers to unknown characteristic " + std::to_string(f));
      }
    }
  };
  std::size_t references = 0;
  bool uses_random = false;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const std::string where = "alternative '" + schema.alternative_names[i] + "'";
    std::set<std::size_t> network_seen;
    bool has_asc = false;
    for (const auto& t : terms[i]) {
      switch (t.coef.kind) {
        case CoefSource::Kind::network:
          if (t.coef.index >= network_outputs_available) {
            fail(ErrorKind::spec, where + ": network output " + std::to_string(t.coef.index) +
                                      " does not exist");
          }
          if (!network_seen.insert(t.coef.index).second) {
            fail(ErrorKind::spec, where + ": network output " + std::to_string(t.coef.index) +
                                      " used twice");
          }
          break;
        case CoefSource::Kind::parametric:
          if (t.coef.index >= parametric_count()) {
            fail(ErrorKind::spec, where + ": parametric coefficient " +
                                      std::to_string(t.coef.index) + " does not exist");
          }
          break;
        case CoefSource::Kind::fixed:
          if (!std::isfinite(t.coef.value)) fail(ErrorKind::spec, where + ": non-finite constant");
          break;
        case CoefSource::Kind::random:
          if (!random) fail(ErrorKind::spec, where + ": random term without a random coefficient");
          uses_random = true;
          break;
      }
      if (t.attribute && *t.attribute >= schema.attribute_names[i].size()) {
        fail(ErrorKind::spec, where + ": attribute index out of range");
      }
      check_interactions(t.interactions);
      if (t.is_asc()) has_asc = true;
    }
    if (!has_asc) ++references;
  }
  if (references != 1) {
    fail(ErrorKind::spec, "exactly one alternative must omit its constant (found " +
                              std::to_string(references) + ")");
  }
  if (random) {
    if (!uses_random) fail(ErrorKind::spec, "random coefficient declared but never used");
    if (random->draws == 0) fail(ErrorKind::spec, "random coefficient needs at least one draw");
    if (random->log_sigma >= parametric_count()) {
      fail(ErrorKind::spec, "random coefficient log-sigma slot does not exist");
    }
    for (const auto& m : random->mean) {
      if (m.parametric >= parametric_count()) {
        fail(ErrorKind::spec, "random coefficient mean refers to a missing parametric slot");
      }
      check_interactions(m.interactions);
    }
  }
}

double interaction_product(std::span<const double> z, const std::vector<std::size_t>& factors) {
  double product = 1.0;
  for (std::size_t f : factors) product *= z[f];
  return product;
}

double random_mean(const RandomCoefficient& rc, std::span<const double> beta,
                   std::span<const double> z) {
  double mean = 0.0;
  for (const auto& m : rc.mean) mean += beta[m.parametric] * interaction_product(z, m.interactions);
  return mean;
}

namespace {

double term_multiplier(const Term& t, const Observation& obs, std::size_t alternative) {
  double v = interaction_product(obs.z, t.interactions);
  if (t.attribute) v *= obs.x[alternative][*t.attribute];
  return v;
}

}  // namespace

void compute_utilities(std::span<const double> beta_tn, std::span<const double> beta_mnl,
                       const Observation& obs, const UtilitySpec& spec, double random_taste,
                       std::span<double> out) {
  for (std::size_t i = 0; i < spec.terms.size(); ++i) {
    double v = 0.0;
    for (const auto& t : spec.terms[i]) {
      double coef = 0.0;
      switch (t.coef.kind) {
        case CoefSource::Kind::network:
          coef = beta_tn[t.coef.index];
          break;
        case CoefSource::Kind::parametric:
          coef = beta_mnl[t.coef.index];
          break;
        case CoefSource::Kind::fixed:
          coef = t.coef.value;
          break;
        case CoefSource::Kind::random:
          coef = random_taste;
          break;
      }
      v += coef * term_multiplier(t, obs, i);
    }
    out[i] = v;
  }
}

double random_slope(const Observation& obs, const UtilitySpec& spec, std::size_t alternative) {
  double slope = 0.0;
  for (const auto& t : spec.terms[alternative]) {
    if (t.coef.kind == CoefSource::Kind::random) slope += term_multiplier(t, obs, alternative);
  }
  return slope;
}

std::vector<std::optional<double>> systematic_utility(std::span<const double> beta_tn,
                                                      std::span<const double> beta_mnl,
                                                      const Observation& obs,
                                                      const UtilitySpec& spec,
                                                      std::optional<double> random_taste) {
  if (spec.random && !random_taste) {
    fail(ErrorKind::spec, "utility has a random coefficient but no taste value was supplied");
  }
  for (const auto& alt : spec.terms) {
    for (const auto& t : alt) {
      if ((t.coef.kind == CoefSource::Kind::network && t.coef.index >= beta_tn.size()) ||
          (t.coef.kind == CoefSource::Kind::parametric && t.coef.index >= beta_mnl.size())) {
        fail(ErrorKind::spec, "coefficient source index does not resolve");
      }
    }
  }
  if (spec.terms.size() != obs.x.size()) {
    fail(ErrorKind::spec, "utility spec and observation disagree on alternative count");
  }
  std::vector<double> all(spec.terms.size());
  compute_utilities(beta_tn, beta_mnl, obs, spec, random_taste.value_or(0.0), all);
  std::vector<std::optional<double>> out(all.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (obs.is_available(i)) out[i] = all[i];
  }
  return out;
}

std::vector<double> probabilities(std::span<const double> utilities,
                                  std::span<const std::uint8_t> available) {
  double top = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < utilities.size(); ++i) {
    if (!available[i]) continue;
    any = true;
    top = std::max(top, utilities[i]);
  }
  if (!any) fail(ErrorKind::data, "no available alternative");
  std::vector<double> p(utilities.size(), 0.0);
  double denom = 0.0;
  for (std::size_t i = 0; i < utilities.size(); ++i) {
    if (!available[i]) continue;
    p[i] = std::exp(utilities[i] - top);
    denom += p[i];
  }
  for (double& v : p) v /= denom;
  return p;
}

std::vector<double> probabilities(const std::vector<std::optional<double>>& utilities) {
  std::vector<double> u(utilities.size(), 0.0);
  std::vector<std::uint8_t> available(utilities.size(), 0);
  for (std::size_t i = 0; i < utilities.size(); ++i) {
    if (utilities[i]) {
      u[i] = *utilities[i];
      available[i] = 1;
    }
  }
  return probabilities(u, available);
}

double log_probability(std::span<const double> utilities, std::span<const std::uint8_t> available,
                       std::size_t chosen) {
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < utilities.size(); ++i) {
    if (available[i]) top = std::max(top, utilities[i]);
  }
  double denom = 0.0;
  for (std::size_t i = 0; i < utilities.size(); ++i) {
    if (available[i]) denom += std::exp(utilities[i] - top);
  }
  return utilities[chosen] - top - std::log(denom);
}

}  // namespace tastenet
