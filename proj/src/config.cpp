#include "tastenet/config.hpp"

#include <charconv>
#include <fstream>
#include <set>

#include "tastenet/error.hpp"
#include "tastenet/format.hpp"

namespace tastenet {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& msg) {
  fail(ErrorKind::config, where + ": " + msg);
}

const json& need(const json& doc, const char* key, const std::string& where) {
  if (!doc.is_object()) bad(where, "expected an object");
  const auto it = doc.find(key);
  if (it == doc.end()) bad(where, std::string("missing key '") + key + "'");
  return *it;
}

template <typename T>
T as(const json& value, const std::string& where) {
  try {
    return value.get<T>();
  } catch (const json::exception& e) {
    bad(where, std::string("wrong type (") + e.what() + ")");
  }
}

template <typename T>
T get_or(const json& doc, const char* key, T fallback, const std::string& where) {
  if (!doc.is_object()) bad(where, "expected an object");
  const auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) return fallback;
  return as<T>(*it, where + "." + key);
}

double parse_double(std::string_view text, const std::string& where) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) bad(where, "'" + std::string(text) + "' is not a number");
  return value;
}

char parse_delimiter(const std::string& text) {
  if (text == "tab" || text == "\\t" || text == "\t") return '\t';
  if (text.size() != 1) fail(ErrorKind::config, "delimiter must be one character or \"tab\"");
  return text[0];
}

std::string delimiter_text(char d) { return d == '\t' ? "tab" : std::string(1, d); }

std::size_t characteristic_of(const FeatureSchema& schema, const std::string& name,
                              const std::string& where) {
  const auto idx = schema.characteristic_index(name);
  if (!idx) bad(where, "unknown characteristic '" + name + "'");
  return *idx;
}

std::vector<std::size_t> interaction_list(const json& doc, const FeatureSchema& schema,
                                          const std::string& where) {
  std::vector<std::size_t> out;
  if (!doc.contains("interact")) return out;
  for (const auto& name : as<std::vector<std::string>>(doc.at("interact"), where + ".interact")) {
    out.push_back(characteristic_of(schema, name, where));
  }
  return out;
}

json interaction_names(const std::vector<std::size_t>& factors, const FeatureSchema& schema) {
  json out = json::array();
  for (std::size_t f : factors) out.push_back(schema.characteristic_names.at(f));
  return out;
}

// Columns a "by" entry stands for.
std::vector<std::size_t> by_columns(const std::string& entry, const FeatureSchema& schema,
                                    const std::string& where) {
  std::vector<std::size_t> cols;
  if (entry == "*") {
    for (std::size_t k = 0; k < schema.characteristic_count(); ++k) cols.push_back(k);
    return cols;
  }
  if (const auto* block = schema.categorical_block(entry)) {
    for (std::size_t c = 0; c < block->column_count(); ++c) cols.push_back(block->first_column + c);
    return cols;
  }
  cols.push_back(characteristic_of(schema, entry, where));
  return cols;
}

class ParamTable {
 public:
  explicit ParamTable(std::vector<std::string> declared) : names_(std::move(declared)) {
    std::set<std::string> seen(names_.begin(), names_.end());
    if (seen.size() != names_.size()) fail(ErrorKind::config, "duplicate names in 'parameters'");
  }
  std::size_t slot(const std::string& name) {
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (names_[i] == name) return i;
    }
    names_.push_back(name);
    return names_.size() - 1;
  }
  std::vector<std::string> release() { return std::move(names_); }

 private:
  std::vector<std::string> names_;
};

struct ParsedCoef {
  CoefSource source;
  std::string param_name;  // for parametric sources
};

ParsedCoef parse_coef(const std::string& text, ParamTable& params, const std::string& where) {
  if (text == "random") return {CoefSource::random(), {}};
  const auto colon = text.find(':');
  if (colon == std::string::npos) bad(where, "coefficient source '" + text + "' lacks a kind");
  const std::string kind = text.substr(0, colon);
  const std::string arg = text.substr(colon + 1);
  if (arg.empty()) bad(where, "coefficient source '" + text + "' is empty");
  if (kind == "param") return {CoefSource::parametric(params.slot(arg)), arg};
  if (kind == "fixed") return {CoefSource::fixed(parse_double(arg, where)), {}};
  if (kind == "net") {
    const double k = parse_double(arg, where);
    if (k < 0 || k != static_cast<double>(static_cast<std::size_t>(k))) {
      bad(where, "network output index must be a non-negative integer");
    }
    return {CoefSource::network(static_cast<std::size_t>(k)), {}};
  }
  bad(where, "unknown coefficient kind '" + kind + "'");
}

std::string coef_text(const CoefSource& c, const UtilitySpec& spec) {
  switch (c.kind) {
    case CoefSource::Kind::network:
      return "net:" + std::to_string(c.index);
    case CoefSource::Kind::parametric:
      return "param:" + spec.parametric_names.at(c.index);
    case CoefSource::Kind::fixed:
      return "fixed:" + format_number(c.value);
    case CoefSource::Kind::random:
      return "random";
  }
  return "random";
}

}  // namespace

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open '" + path.string() + "'");
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    fail(ErrorKind::config, "'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

// ---------------------------------------------------------------------------

json schema_to_json(const FeatureSchema& schema) {
  json doc;
  doc["characteristics"] = schema.characteristic_names;
  doc["characteristic_scaling"] = schema.characteristic_scaling;
  json blocks = json::array();
  for (const auto& b : schema.categorical) {
    blocks.push_back({{"variable", b.variable},
                      {"levels", b.levels},
                      {"reference", b.reference},
                      {"first_column", b.first_column}});
  }
  doc["categorical"] = std::move(blocks);
  json alts = json::array();
  for (std::size_t i = 0; i < schema.alternative_count(); ++i) {
    alts.push_back({{"name", schema.alternative_names[i]},
                    {"attributes", schema.attribute_names[i]},
                    {"scaling", schema.attribute_scaling[i]},
                    {"availability", schema.availability_names[i]}});
  }
  doc["alternatives"] = std::move(alts);
  doc["choice"] = schema.choice_name;
  return doc;
}

FeatureSchema schema_from_json(const json& doc) {
  const std::string where = "schema";
  FeatureSchema s;
  s.characteristic_names =
      as<std::vector<std::string>>(need(doc, "characteristics", where), where + ".characteristics");
  s.characteristic_scaling = get_or(doc, "characteristic_scaling",
                                    std::vector<double>(s.characteristic_names.size(), 1.0), where);
  for (const auto& b : doc.value("categorical", json::array())) {
    CategoricalBlock block;
    block.variable = as<std::string>(need(b, "variable", where), where);
    block.levels = as<std::vector<double>>(need(b, "levels", where), where);
    block.reference = get_or(b, "reference", 0.0, where);
    block.first_column = as<std::size_t>(need(b, "first_column", where), where);
    s.categorical.push_back(std::move(block));
  }
  for (const auto& a : need(doc, "alternatives", where)) {
    const std::string aw = where + ".alternatives";
    s.alternative_names.push_back(as<std::string>(need(a, "name", aw), aw));
    auto names = as<std::vector<std::string>>(need(a, "attributes", aw), aw);
    s.attribute_scaling.push_back(get_or(a, "scaling", std::vector<double>(names.size(), 1.0), aw));
    s.attribute_names.push_back(std::move(names));
    s.availability_names.push_back(get_or(a, "availability", std::string(), aw));
  }
  s.choice_name = get_or(doc, "choice", std::string("choice"), where);
  try {
    s.validate();
  } catch (const Error& e) {
    fail(ErrorKind::config, std::string("schema: ") + e.what());
  }
  return s;
}

// ---------------------------------------------------------------------------

json utility_to_json(const UtilitySpec& spec, const FeatureSchema& schema) {
  json doc;
  doc["parameters"] = spec.parametric_names;
  json alts = json::array();
  for (std::size_t i = 0; i < spec.terms.size(); ++i) {
    json terms = json::array();
    for (const auto& t : spec.terms[i]) {
      json term;
      term["coef"] = coef_text(t.coef, spec);
      if (t.attribute) term["attribute"] = schema.attribute_names.at(i).at(*t.attribute);
      if (!t.interactions.empty()) term["interact"] = interaction_names(t.interactions, schema);
      terms.push_back(std::move(term));
    }
    alts.push_back({{"alternative", schema.alternative_names.at(i)}, {"terms", std::move(terms)}});
  }
  doc["alternatives"] = std::move(alts);
  if (spec.random) {
    json mean = json::array();
    for (const auto& m : spec.random->mean) {
      json term;
      term["coef"] = "param:" + spec.parametric_names.at(m.parametric);
      term["interact"] = interaction_names(m.interactions, schema);
      mean.push_back(std::move(term));
    }
    doc["random"] = {{"mean", std::move(mean)},
                     {"log_sigma", spec.parametric_names.at(spec.random->log_sigma)},
                     {"draws", spec.random->draws}};
  }
  return doc;
}

UtilitySpec utility_from_json(const json& doc, const FeatureSchema& schema) {
  const std::string where = "utility";
  ParamTable params(get_or(doc, "parameters", std::vector<std::string>{}, where));
  UtilitySpec spec;
  spec.terms.resize(schema.alternative_count());
  std::vector<bool> seen(schema.alternative_count(), false);
  const auto& alts = need(doc, "alternatives", where);
  if (!alts.is_array()) bad(where, "'alternatives' must be a list");
  for (const auto& a : alts) {
    const std::string name = as<std::string>(need(a, "alternative", where), where);
    const auto alt = schema.alternative_index(name);
    if (!alt) bad(where, "unknown alternative '" + name + "'");
    if (seen[*alt]) bad(where, "alternative '" + name + "' listed twice");
    seen[*alt] = true;
    const std::string aw = where + "[" + name + "]";
    for (const auto& t : need(a, "terms", aw)) {
      const auto coef_str = as<std::string>(need(t, "coef", aw), aw + ".coef");
      Term term;
      ParsedCoef parsed;
      std::vector<std::size_t> by;
      const bool has_by = t.contains("by");
      const bool keep_base = get_or(t, "base", true, aw);
      if (t.contains("attribute")) {
        const auto attr_name = as<std::string>(t.at("attribute"), aw + ".attribute");
        const auto k = schema.attribute_index(*alt, attr_name);
        if (!k) bad(aw, "unknown attribute '" + attr_name + "'");
        term.attribute = *k;
      }
      term.interactions = interaction_list(t, schema, aw);
      if (has_by) {
        for (const auto& entry : as<std::vector<std::string>>(t.at("by"), aw + ".by")) {
          for (std::size_t c : by_columns(entry, schema, aw)) by.push_back(c);
        }
      }
      if (!has_by || keep_base) {
        parsed = parse_coef(coef_str, params, aw);
        term.coef = parsed.source;
        spec.terms[*alt].push_back(term);
      }
      if (has_by) {
        if (coef_str.rfind("param:", 0) != 0) bad(aw, "'by' needs a parametric coefficient");
        const std::string stem = coef_str.substr(6);
        for (std::size_t c : by) {
          Term expanded = term;
          expanded.coef =
              CoefSource::parametric(params.slot(stem + "*" + schema.characteristic_names[c]));
          expanded.interactions.push_back(c);
          spec.terms[*alt].push_back(std::move(expanded));
        }
      }
    }
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) bad(where, "alternative '" + schema.alternative_names[i] + "' has no entry");
  }
  if (doc.contains("random") && !doc.at("random").is_null()) {
    const auto& r = doc.at("random");
    const std::string rw = where + ".random";
    RandomCoefficient rc;
    for (const auto& m : need(r, "mean", rw)) {
      const auto coef_str = as<std::string>(need(m, "coef", rw), rw);
      if (coef_str.rfind("param:", 0) != 0) bad(rw, "mean terms must be parametric");
      rc.mean.push_back({params.slot(coef_str.substr(6)), interaction_list(m, schema, rw)});
    }
    rc.log_sigma = params.slot(as<std::string>(need(r, "log_sigma", rw), rw));
    rc.draws = get_or(r, "draws", std::size_t{200}, rw);
    spec.random = std::move(rc);
  }
  spec.parametric_names = params.release();
  return spec;
}

// ---------------------------------------------------------------------------

json mlp_spec_to_json(const MlpSpec& spec) {
  json acts = json::array();
  for (auto a : spec.hidden_activations) acts.push_back(std::string(activation_name(a)));
  json outs = json::array();
  for (auto t : spec.output_transforms) outs.push_back(std::string(transform_name(t)));
  return {{"hidden_sizes", spec.hidden_sizes},
          {"hidden_activations", std::move(acts)},
          {"output_transforms", std::move(outs)}};
}

MlpSpec mlp_spec_from_json(const json& doc) {
  const std::string where = "network";
  MlpSpec spec;
  spec.hidden_sizes = get_or(doc, "hidden_sizes", std::vector<std::size_t>{}, where);
  const auto acts = get_or(doc, "hidden_activations", std::vector<std::string>{}, where);
  if (acts.size() == 1 && spec.hidden_sizes.size() > 1) {
    spec.hidden_activations.assign(spec.hidden_sizes.size(), parse_activation(acts[0]));
  } else {
    for (const auto& a : acts) spec.hidden_activations.push_back(parse_activation(a));
  }
  for (const auto& t :
       as<std::vector<std::string>>(need(doc, "output_transforms", where), where)) {
    spec.output_transforms.push_back(parse_transform(t));
  }
  try {
    spec.validate();
  } catch (const Error& e) {
    fail(ErrorKind::config, std::string("network: ") + e.what());
  }
  return spec;
}

// ---------------------------------------------------------------------------

json schema_config_to_json(const SchemaConfig& config) {
  json chars = json::array();
  for (const auto& c : config.characteristics) {
    json entry{{"column", c.column}, {"label", c.label.empty() ? c.column : c.label}};
    if (c.kind == CharacteristicColumn::Kind::categorical) {
      entry["kind"] = "categorical";
      entry["levels"] = c.levels;
      entry["reference"] = c.reference;
      json remap = json::array();
      for (const auto& [from, to] : c.remap) remap.push_back({from, to});
      entry["remap"] = std::move(remap);
    } else {
      entry["kind"] = "numeric";
      entry["scale"] = c.scale;
    }
    chars.push_back(std::move(entry));
  }
  json alts = json::array();
  for (const auto& a : config.alternatives) {
    json attrs = json::array();
    for (const auto& at : a.attributes) {
      attrs.push_back({{"label", at.label}, {"column", at.column}, {"scale", at.scale}});
    }
    alts.push_back({{"name", a.name},
                    {"attributes", std::move(attrs)},
                    {"availability", a.availability_column},
                    {"choice_value", a.choice_value}});
  }
  json filters = json::array();
  for (const auto& f : config.filters) {
    filters.push_back({{"column", f.column}, {"drop", f.drop_values}});
  }
  return {{"characteristics", std::move(chars)},
          {"alternatives", std::move(alts)},
          {"choice", config.choice_column},
          {"filters", std::move(filters)},
          {"delimiter", delimiter_text(config.delimiter)}};
}

SchemaConfig schema_config_from_json(const json& doc) {
  const std::string where = "data";
  SchemaConfig config;
  for (const auto& c : doc.value("characteristics", json::array())) {
    const std::string cw = where + ".characteristics";
    CharacteristicColumn col;
    col.column = as<std::string>(need(c, "column", cw), cw);
    col.label = get_or(c, "label", col.column, cw);
    const auto kind = get_or(c, "kind", std::string("numeric"), cw);
    if (kind == "categorical") {
      col.kind = CharacteristicColumn::Kind::categorical;
      col.levels = as<std::vector<double>>(need(c, "levels", cw), cw + ".levels");
      col.reference = get_or(c, "reference", col.levels.empty() ? 0.0 : col.levels.front(), cw);
      for (const auto& pair : c.value("remap", json::array())) {
        if (!pair.is_array() || pair.size() != 2) bad(cw, "remap entries are [from, to] pairs");
        col.remap.emplace_back(as<double>(pair[0], cw), as<double>(pair[1], cw));
      }
    } else if (kind == "numeric") {
      col.scale = get_or(c, "scale", 1.0, cw);
    } else {
      bad(cw, "unknown characteristic kind '" + kind + "'");
    }
    config.characteristics.push_back(std::move(col));
  }
  for (const auto& a : need(doc, "alternatives", where)) {
    const std::string aw = where + ".alternatives";
    AlternativeColumns alt;
    alt.name = as<std::string>(need(a, "name", aw), aw);
    for (const auto& at : need(a, "attributes", aw)) {
      AttributeColumn attr;
      attr.column = as<std::string>(need(at, "column", aw), aw);
      attr.label = get_or(at, "label", attr.column, aw);
      attr.scale = get_or(at, "scale", 1.0, aw);
      alt.attributes.push_back(std::move(attr));
    }
    alt.availability_column = get_or(a, "availability", std::string(), aw);
    alt.choice_value = as<double>(need(a, "choice_value", aw), aw);
    config.alternatives.push_back(std::move(alt));
  }
  config.choice_column = as<std::string>(need(doc, "choice", where), where);
  for (const auto& f : doc.value("filters", json::array())) {
    config.filters.push_back({as<std::string>(need(f, "column", where), where),
                              as<std::vector<double>>(need(f, "drop", where), where)});
  }
  config.delimiter = parse_delimiter(get_or(doc, "delimiter", std::string(","), where));
  return config;
}

// ---------------------------------------------------------------------------

json train_config_to_json(const TrainConfig& cfg) {
  return {{"learning_rate", cfg.learning_rate}, {"batch_size", cfg.batch_size},
          {"max_epochs", cfg.max_epochs},       {"patience", cfg.patience},
          {"reg_norm", cfg.reg_norm},           {"reg_strength", cfg.reg_strength},
          {"seed", cfg.seed},                   {"restarts", cfg.restarts},
          {"beta1", cfg.beta1},                 {"beta2", cfg.beta2},
          {"epsilon", cfg.epsilon},             {"max_abs_param", cfg.max_abs_param}};
}

TrainConfig train_config_from_json(const json& doc, TrainConfig base) {
  const std::string w = "training";
  if (doc.is_null()) return base;
  base.learning_rate = get_or(doc, "learning_rate", base.learning_rate, w);
  base.batch_size = get_or(doc, "batch_size", base.batch_size, w);
  base.max_epochs = get_or(doc, "max_epochs", base.max_epochs, w);
  base.patience = get_or(doc, "patience", base.patience, w);
  base.reg_norm = get_or(doc, "reg_norm", base.reg_norm, w);
  base.reg_strength = get_or(doc, "reg_strength", base.reg_strength, w);
  base.seed = get_or(doc, "seed", base.seed, w);
  base.restarts = get_or(doc, "restarts", base.restarts, w);
  base.beta1 = get_or(doc, "beta1", base.beta1, w);
  base.beta2 = get_or(doc, "beta2", base.beta2, w);
  base.epsilon = get_or(doc, "epsilon", base.epsilon, w);
  base.max_abs_param = get_or(doc, "max_abs_param", base.max_abs_param, w);
  return base;
}

json gen_config_to_json(const synth::GenConfig& cfg) {
  return {{"n_train", cfg.n_train},
          {"n_dev", cfg.n_dev},
          {"n_test", cfg.n_test},
          {"seed", cfg.seed},
          {"cost", {cfg.cost.lo, cfg.cost.hi}},
          {"time", {cfg.time.lo, cfg.time.hi}},
          {"attribute_scale", cfg.attribute_scale}};
}

synth::GenConfig gen_config_from_json(const json& doc, synth::GenConfig base) {
  const std::string w = "generator";
  if (doc.is_null()) return base;
  base.n_train = get_or(doc, "n_train", base.n_train, w);
  base.n_dev = get_or(doc, "n_dev", base.n_dev, w);
  base.n_test = get_or(doc, "n_test", base.n_test, w);
  base.seed = get_or(doc, "seed", base.seed, w);
  auto range = [&](const char* key, synth::Range r) {
    const auto v = get_or(doc, key, std::vector<double>{r.lo, r.hi}, w);
    if (v.size() != 2) bad(w, std::string(key) + " must be [lo, hi]");
    return synth::Range{v[0], v[1]};
  };
  base.cost = range("cost", base.cost);
  base.time = range("time", base.time);
  base.attribute_scale = get_or(doc, "attribute_scale", base.attribute_scale, w);
  return base;
}

json true_params_to_json(const synth::TrueTasteParams& params) {
  json doc = json::object();
  const auto values = params.as_array();
  for (std::size_t i = 0; i < values.size(); ++i) doc[synth::truth_names()[i]] = values[i];
  return doc;
}

synth::TrueTasteParams true_params_from_json(const json& doc) {
  synth::TrueTasteParams p;
  if (doc.is_null()) return p;
  const std::string w = "truth";
  p.asc1 = get_or(doc, "asc_1", p.asc1, w);
  p.b0 = get_or(doc, "b_time", p.b0, w);
  p.b_inc = get_or(doc, "b_inc_time", p.b_inc, w);
  p.b_full = get_or(doc, "b_full_time", p.b_full, w);
  p.b_flex = get_or(doc, "b_flex_time", p.b_flex, w);
  p.b_inc_full = get_or(doc, "b_inc_full_time", p.b_inc_full, w);
  p.b_inc_flex = get_or(doc, "b_inc_flex_time", p.b_inc_flex, w);
  p.b_full_flex = get_or(doc, "b_full_flex_time", p.b_full_flex, w);
  return p;
}

json search_space_to_json(const SearchSpace& space) {
  json acts = json::array();
  for (auto a : space.activations) acts.push_back(std::string(activation_name(a)));
  json outs = json::array();
  for (auto t : space.constrained_transforms) outs.push_back(std::string(transform_name(t)));
  return {{"hidden_sizes", space.hidden_sizes},
          {"activations", std::move(acts)},
          {"transforms", std::move(outs)},
          {"reg_norms", space.reg_norms},
          {"reg_strengths", space.reg_strengths}};
}

SearchSpace search_space_from_json(const json& doc) {
  const std::string w = "search";
  SearchSpace space;
  for (const auto& h : need(doc, "hidden_sizes", w)) {
    if (h.is_number_unsigned()) {
      space.hidden_sizes.push_back({h.get<std::size_t>()});
    } else {
      space.hidden_sizes.push_back(as<std::vector<std::size_t>>(h, w + ".hidden_sizes"));
    }
  }
  for (const auto& a : get_or(doc, "activations", std::vector<std::string>{"relu"}, w)) {
    space.activations.push_back(parse_activation(a));
  }
  for (const auto& t : get_or(doc, "transforms", std::vector<std::string>{}, w)) {
    space.constrained_transforms.push_back(parse_transform(t));
  }
  space.reg_norms = get_or(doc, "reg_norms", std::vector<int>{2}, w);
  space.reg_strengths = get_or(doc, "reg_strengths", std::vector<double>{0.0}, w);
  space.validate();
  return space;
}

}  // namespace tastenet
