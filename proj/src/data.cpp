#include "tastenet/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include "tastenet/error.hpp"
#include "tastenet/format.hpp"

namespace tastenet {
namespace {

void check_labels(const std::vector<std::string>& labels, const std::string& what) {
  std::set<std::string> seen;
  for (const auto& label : labels) {
    if (label.empty()) fail(ErrorKind::schema, what + ": empty label");
    if (!seen.insert(label).second) {
      fail(ErrorKind::schema, what + ": duplicate label '" + label + "'");
    }
  }
}

void check_scaling(const std::vector<double>& scaling, const std::string& what) {
  for (double s : scaling) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      fail(ErrorKind::schema, what + ": scaling factors must be strictly positive");
    }
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    s = s.substr(1, s.size() - 2);
  }
  return s;
}

std::vector<std::string_view> split_line(std::string_view line, char delimiter) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delimiter, start);
    if (pos == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      break;
    }
    cells.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return cells;
}

double parse_cell(std::string_view cell, std::size_t row, const std::string& column) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) {
    fail(ErrorKind::parse, "row " + std::to_string(row) + ", column '" + column +
                               "': non-numeric cell '" + std::string(cell) + "'");
  }
  return value;
}

std::string level_label(const std::string& variable, double level) {
  return variable + "_" + format_number(level);
}

}  // namespace

std::string split_tag_name(SplitTag tag) {
  switch (tag) {
    case SplitTag::train:
      return "train";
    case SplitTag::dev:
      return "dev";
    case SplitTag::test:
      return "test";
  }
  return "train";
}

std::optional<std::size_t> FeatureSchema::characteristic_index(const std::string& name) const {
  const auto it = std::find(characteristic_names.begin(), characteristic_names.end(), name);
  if (it == characteristic_names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - characteristic_names.begin());
}

std::optional<std::size_t> FeatureSchema::attribute_index(std::size_t alternative,
                                                          const std::string& name) const {
  if (alternative >= attribute_names.size()) return std::nullopt;
  const auto& names = attribute_names[alternative];
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names.begin());
}

std::optional<std::size_t> FeatureSchema::alternative_index(const std::string& name) const {
  const auto it = std::find(alternative_names.begin(), alternative_names.end(), name);
  if (it == alternative_names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - alternative_names.begin());
}

const CategoricalBlock* FeatureSchema::categorical_block(const std::string& variable) const {
  for (const auto& block : categorical) {
    if (block.variable == variable) return &block;
  }
  return nullptr;
}

void FeatureSchema::validate() const {
  check_labels(characteristic_names, "characteristics");
  if (characteristic_scaling.size() != characteristic_names.size()) {
    fail(ErrorKind::schema, "characteristic scaling count does not match names");
  }
  check_scaling(characteristic_scaling, "characteristics");
  if (alternative_names.size() < 2) {
    fail(ErrorKind::schema, "at least two alternatives are required");
  }
  check_labels(alternative_names, "alternatives");
  if (attribute_names.size() != alternative_names.size() ||
      attribute_scaling.size() != alternative_names.size() ||
      availability_names.size() != alternative_names.size()) {
    fail(ErrorKind::schema, "per-alternative lists must match the alternative count");
  }
  for (std::size_t i = 0; i < alternative_names.size(); ++i) {
    const std::string what = "attributes of alternative '" + alternative_names[i] + "'";
    if (attribute_names[i].empty()) fail(ErrorKind::schema, what + ": list is empty");
    check_labels(attribute_names[i], what);
    if (attribute_scaling[i].size() != attribute_names[i].size()) {
      fail(ErrorKind::schema, what + ": scaling count does not match names");
    }
    check_scaling(attribute_scaling[i], what);
  }
  for (const auto& block : categorical) {
    if (block.first_column + block.column_count() > characteristic_names.size()) {
      fail(ErrorKind::schema, "categorical block '" + block.variable + "' out of range");
    }
  }
}

std::size_t Observation::available_count() const {
  return static_cast<std::size_t>(std::count_if(available.begin(), available.end(),
                                                [](std::uint8_t a) { return a != 0; }));
}

void check_observation(const FeatureSchema& schema, const Observation& obs, std::size_t row) {
  const std::string where = "observation " + std::to_string(row);
  if (obs.z.size() != schema.characteristic_count()) {
    fail(ErrorKind::data, where + ": characteristic vector has wrong dimension");
  }
  const std::size_t alternatives = schema.alternative_count();
  if (obs.x.size() != alternatives || obs.available.size() != alternatives) {
    fail(ErrorKind::data, where + ": alternative count does not match schema");
  }
  for (std::size_t i = 0; i < alternatives; ++i) {
    if (obs.x[i].size() != schema.attribute_names[i].size()) {
      fail(ErrorKind::data, where + ": attribute vector of alternative '" +
                                schema.alternative_names[i] + "' has wrong dimension");
    }
  }
  if (obs.chosen >= alternatives) fail(ErrorKind::data, where + ": chosen index out of range");
  if (!obs.is_available(obs.chosen)) {
    fail(ErrorKind::data, where + ": chosen alternative is unavailable");
  }
  if (obs.available_count() < 2) {
    fail(ErrorKind::data, where + ": fewer than two available alternatives");
  }
}

Dataset::Dataset(FeatureSchema schema, std::vector<Observation> observations, SplitTag tag)
    : schema_(std::move(schema)), observations_(std::move(observations)), tag_(tag) {
  schema_.validate();
  for (std::size_t n = 0; n < observations_.size(); ++n) {
    check_observation(schema_, observations_[n], n);
  }
}

Dataset Dataset::with_tag(SplitTag tag) const {
  Dataset copy = *this;
  copy.tag_ = tag;
  return copy;
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows, SplitTag tag) const {
  Dataset out;
  out.schema_ = schema_;
  out.tag_ = tag;
  out.observations_.reserve(rows.size());
  for (std::size_t r : rows) {
    if (r >= observations_.size()) fail(ErrorKind::argument, "subset row out of range");
    out.observations_.push_back(observations_[r]);
  }
  return out;
}

FeatureSchema SchemaConfig::feature_schema() const {
  FeatureSchema schema;
  for (const auto& c : characteristics) {
    const std::string label = c.label.empty() ? c.column : c.label;
    if (c.kind == CharacteristicColumn::Kind::numeric) {
      schema.characteristic_names.push_back(label);
      schema.characteristic_scaling.push_back(c.scale);
      continue;
    }
    CategoricalBlock block;
    block.variable = label;
    block.reference = c.reference;
    block.first_column = schema.characteristic_names.size();
    for (double level : c.levels) {
      if (level == c.reference) continue;
      block.levels.push_back(level);
      schema.characteristic_names.push_back(level_label(label, level));
      schema.characteristic_scaling.push_back(1.0);
    }
    schema.categorical.push_back(std::move(block));
  }
  for (const auto& alt : alternatives) {
    schema.alternative_names.push_back(alt.name);
    std::vector<std::string> names;
    std::vector<double> scaling;
    for (const auto& a : alt.attributes) {
      names.push_back(a.label.empty() ? a.column : a.label);
      scaling.push_back(a.scale);
    }
    schema.attribute_names.push_back(std::move(names));
    schema.attribute_scaling.push_back(std::move(scaling));
    schema.availability_names.push_back(alt.availability_column);
  }
  schema.choice_name = choice_column;
  schema.validate();
  return schema;
}

Dataset parse_csv(std::istream& in, const SchemaConfig& config, LoadStats* stats,
                  SplitTag tag) {
  FeatureSchema schema = config.feature_schema();

  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::data, "input is empty: header row required");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
      static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF) {
    line.erase(0, 3);
  }
  std::unordered_map<std::string, std::size_t> header;
  {
    const auto cells = split_line(line, config.delimiter);
    for (std::size_t i = 0; i < cells.size(); ++i) header.emplace(std::string(cells[i]), i);
  }
  auto column = [&](const std::string& name) -> std::size_t {
    const auto it = header.find(name);
    if (it == header.end()) fail(ErrorKind::schema, "missing column '" + name + "'");
    return it->second;
  };

  struct CharBinding {
    std::size_t col;
    const CharacteristicColumn* spec;
  };
  std::vector<CharBinding> char_cols;
  for (const auto& c : config.characteristics) char_cols.push_back({column(c.column), &c});
  std::vector<std::vector<std::size_t>> attr_cols;
  std::vector<std::optional<std::size_t>> avail_cols;
  for (const auto& alt : config.alternatives) {
    std::vector<std::size_t> cols;
    for (const auto& a : alt.attributes) cols.push_back(column(a.column));
    attr_cols.push_back(std::move(cols));
    avail_cols.push_back(alt.availability_column.empty()
                             ? std::nullopt
                             : std::optional<std::size_t>(column(alt.availability_column)));
  }
  const std::size_t choice_col = column(config.choice_column);
  std::vector<std::pair<std::size_t, std::set<double>>> filters;
  for (const auto& f : config.filters) {
    filters.emplace_back(column(f.column),
                         std::set<double>(f.drop_values.begin(), f.drop_values.end()));
  }

  LoadStats local;
  std::vector<Observation> observations;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    ++local.rows_read;
    const auto cells = split_line(line, config.delimiter);
    if (cells.size() < header.size()) {
      fail(ErrorKind::parse, "row " + std::to_string(row) + ": expected " +
                                 std::to_string(header.size()) + " cells, found " +
                                 std::to_string(cells.size()));
    }
    auto value_at = [&](std::size_t col, const std::string& name) {
      return parse_cell(cells[col], row, name);
    };

    bool dropped = false;
    for (std::size_t f = 0; f < filters.size() && !dropped; ++f) {
      dropped = filters[f].second.count(value_at(filters[f].first, config.filters[f].column)) > 0;
    }
    if (dropped) {
      ++local.rows_dropped;
      continue;
    }

    Observation obs;
    obs.z.reserve(schema.characteristic_count());
    for (const auto& binding : char_cols) {
      const auto& spec = *binding.spec;
      double v = value_at(binding.col, spec.column);
      if (spec.kind == CharacteristicColumn::Kind::numeric) {
        obs.z.push_back(v * spec.scale);
        continue;
      }
      for (const auto& [from, to] : spec.remap) {
        if (v == from) {
          v = to;
          break;
        }
      }
      const bool known = v == spec.reference ||
                         std::find(spec.levels.begin(), spec.levels.end(), v) != spec.levels.end();
      if (!known) {
        fail(ErrorKind::data, "row " + std::to_string(row) + ", column '" + spec.column +
                                  "': unknown level " + format_number(v));
      }
      for (double level : spec.levels) {
        if (level == spec.reference) continue;
        obs.z.push_back(v == level ? 1.0 : 0.0);
      }
    }
    obs.x.resize(config.alternatives.size());
    obs.available.resize(config.alternatives.size());
    for (std::size_t i = 0; i < config.alternatives.size(); ++i) {
      const auto& alt = config.alternatives[i];
      for (std::size_t k = 0; k < alt.attributes.size(); ++k) {
        obs.x[i].push_back(value_at(attr_cols[i][k], alt.attributes[k].column) *
                           alt.attributes[k].scale);
      }
      obs.available[i] =
          avail_cols[i] ? (value_at(*avail_cols[i], alt.availability_column) != 0.0) : 1;
    }
    const double choice = value_at(choice_col, config.choice_column);
    bool matched = false;
    for (std::size_t i = 0; i < config.alternatives.size(); ++i) {
      if (config.alternatives[i].choice_value == choice) {
        obs.chosen = i;
        matched = true;
        break;
      }
    }
    if (!matched) {
      fail(ErrorKind::data, "row " + std::to_string(row) + ": choice value " +
                                format_number(choice) + " matches no alternative");
    }
    try {
      check_observation(schema, obs, row);
    } catch (const Error& e) {
      fail(ErrorKind::data, std::string("row ") + std::to_string(row) + ": " + e.what());
    }
    observations.push_back(std::move(obs));
  }
  if (observations.empty()) {
    fail(ErrorKind::data, "no observations remain after reading and filtering");
  }
  if (stats) *stats = local;
  return Dataset(std::move(schema), std::move(observations), tag);
}

Dataset load_csv(const std::filesystem::path& path, const SchemaConfig& config,
                 LoadStats* stats, SplitTag tag) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open '" + path.string() + "'");
  return parse_csv(in, config, stats, tag);
}

SchemaConfig roundtrip_config(const FeatureSchema& schema) {
  SchemaConfig config;
  for (std::size_t k = 0; k < schema.characteristic_count(); ++k) {
    CharacteristicColumn c;
    c.column = schema.characteristic_names[k];
    c.scale = schema.characteristic_scaling[k];
    config.characteristics.push_back(std::move(c));
  }
  for (std::size_t i = 0; i < schema.alternative_count(); ++i) {
    AlternativeColumns alt;
    alt.name = schema.alternative_names[i];
    for (std::size_t k = 0; k < schema.attribute_names[i].size(); ++k) {
      alt.attributes.push_back({schema.attribute_names[i][k],
                                schema.attribute_names[i][k] + "_" + alt.name,
                                schema.attribute_scaling[i][k]});
    }
    alt.availability_column = "av_" + alt.name;
    alt.choice_value = static_cast<double>(i);
    config.alternatives.push_back(std::move(alt));
  }
  config.choice_column = schema.choice_name.empty() ? "choice" : schema.choice_name;
  return config;
}

void write_csv(const Dataset& data, std::ostream& out) {
  const FeatureSchema& schema = data.schema();
  const SchemaConfig config = roundtrip_config(schema);
  std::vector<std::string> header;
  for (const auto& c : config.characteristics) header.push_back(c.column);
  for (const auto& alt : config.alternatives) {
    for (const auto& a : alt.attributes) header.push_back(a.column);
  }
  for (const auto& alt : config.alternatives) header.push_back(alt.availability_column);
  header.push_back(config.choice_column);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';

  for (const auto& obs : data.observations()) {
    bool first = true;
    auto cell = [&](const std::string& s) {
      out << (first ? "" : ",") << s;
      first = false;
    };
    for (std::size_t k = 0; k < obs.z.size(); ++k) {
      cell(format_number(obs.z[k] / schema.characteristic_scaling[k]));
    }
    for (std::size_t i = 0; i < obs.x.size(); ++i) {
      for (std::size_t k = 0; k < obs.x[i].size(); ++k) {
        cell(format_number(obs.x[i][k] / schema.attribute_scaling[i][k]));
      }
    }
    for (std::uint8_t a : obs.available) cell(a ? "1" : "0");
    cell(std::to_string(obs.chosen));
    out << '\n';
  }
}

void write_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write '" + path.string() + "'");
  write_csv(data, out);
  if (!out) fail(ErrorKind::io, "write failed for '" + path.string() + "'");
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
  // splitmix64 finalizer over a stream-offset state
  std::uint64_t z = root + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

DatasetSplit split_dataset(const Dataset& data, const std::array<double, 3>& fractions,
                           std::uint64_t seed) {
  double total = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0) || !std::isfinite(f)) {
      fail(ErrorKind::argument, "split fractions must be non-negative");
    }
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    fail(ErrorKind::argument, "split fractions must sum to 1");
  }
  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto n_train = std::min(n, static_cast<std::size_t>(std::llround(fractions[0] * n)));
  const auto n_dev =
      std::min(n - n_train, static_cast<std::size_t>(std::llround(fractions[1] * n)));
  auto take = [&](std::size_t from, std::size_t count) {
    std::vector<std::size_t> rows(order.begin() + from, order.begin() + from + count);
    std::sort(rows.begin(), rows.end());
    return rows;
  };
  DatasetSplit split;
  split.train = data.subset(take(0, n_train), SplitTag::train);
  split.dev = data.subset(take(n_train, n_dev), SplitTag::dev);
  split.test = data.subset(take(n_train + n_dev, n - n_train - n_dev), SplitTag::test);
  return split;
}

}  // namespace tastenet
