#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace tastenet {

/// A categorical characteristic expanded into one-hot columns. The reference
/// level has no column of its own (all block columns are 0 for it).
struct CategoricalBlock {
  std::string variable;
  std::vector<double> levels;    // every level, in column order after the reference
  double reference = 0.0;
  std::size_t first_column = 0;  // index into characteristic_names

  std::size_t column_count() const { return levels.size(); }
  bool operator==(const CategoricalBlock&) const = default;
};

struct FeatureSchema {
  std::vector<std::string> characteristic_names;
  std::vector<double> characteristic_scaling;
  std::vector<CategoricalBlock> categorical;

  std::vector<std::string> alternative_names;
  std::vector<std::vector<std::string>> attribute_names;
  std::vector<std::vector<double>> attribute_scaling;
  // Empty string: alternative always available.
  std::vector<std::string> availability_names;
  std::string choice_name;

  std::size_t alternative_count() const { return alternative_names.size(); }
  std::size_t characteristic_count() const { return characteristic_names.size(); }

  std::optional<std::size_t> characteristic_index(const std::string& name) const;
  std::optional<std::size_t> attribute_index(std::size_t alternative,
                                             const std::string& name) const;
  std::optional<std::size_t> alternative_index(const std::string& name) const;
  const CategoricalBlock* categorical_block(const std::string& variable) const;

  /// Throws ErrorKind::schema on empty/duplicate labels or non-positive scaling.
  void validate() const;

  bool operator==(const FeatureSchema&) const = default;
};

struct Observation {
  std::vector<double> z;
  std::vector<std::vector<double>> x;
  std::vector<std::uint8_t> available;
  std::size_t chosen = 0;

  std::size_t available_count() const;
  bool is_available(std::size_t alternative) const { return available[alternative] != 0; }

  bool operator==(const Observation&) const = default;
};

enum class SplitTag { train, dev, test };

std::string split_tag_name(SplitTag tag);

/// Immutable collection of observations conforming to one schema.
class Dataset {
 public:
  Dataset() = default;
  /// Validates every observation against the schema (ErrorKind::data).
  Dataset(FeatureSchema schema, std::vector<Observation> observations,
          SplitTag tag = SplitTag::train);

  const FeatureSchema& schema() const { return schema_; }
  const std::vector<Observation>& observations() const { return observations_; }
  const Observation& operator[](std::size_t i) const { return observations_[i]; }
  std::size_t size() const { return observations_.size(); }
  bool empty() const { return observations_.empty(); }
  SplitTag tag() const { return tag_; }

  Dataset with_tag(SplitTag tag) const;
  Dataset subset(const std::vector<std::size_t>& rows, SplitTag tag) const;

 private:
  FeatureSchema schema_;
  std::vector<Observation> observations_;
  SplitTag tag_ = SplitTag::train;
};

void check_observation(const FeatureSchema& schema, const Observation& obs,
                       std::size_t row);

// ---------------------------------------------------------------------------
// CSV ingestion

struct CharacteristicColumn {
  enum class Kind { numeric, categorical };

  std::string column;
  std::string label;  // defaults to column
  Kind kind = Kind::numeric;
  double scale = 1.0;
  // categorical only
  std::vector<double> levels;
  double reference = 0.0;
  std::vector<std::pair<double, double>> remap;  // raw value -> level
};

struct AttributeColumn {
  std::string label;
  std::string column;
  double scale = 1.0;
};

struct AlternativeColumns {
  std::string name;
  std::vector<AttributeColumn> attributes;
  std::string availability_column;  // empty: always available
  double choice_value = 0.0;
};

struct RowFilter {
  std::string column;
  std::vector<double> drop_values;
};

struct SchemaConfig {
  std::vector<CharacteristicColumn> characteristics;
  std::vector<AlternativeColumns> alternatives;
  std::string choice_column;
  std::vector<RowFilter> filters;
  char delimiter = ',';

  FeatureSchema feature_schema() const;
};

struct LoadStats {
  std::size_t rows_read = 0;
  std::size_t rows_dropped = 0;
};

Dataset parse_csv(std::istream& in, const SchemaConfig& config,
                  LoadStats* stats = nullptr, SplitTag tag = SplitTag::train);
Dataset load_csv(const std::filesystem::path& path, const SchemaConfig& config,
                 LoadStats* stats = nullptr, SplitTag tag = SplitTag::train);

/// Writes the dataset in raw units (scaling inverted). Columns follow
/// `roundtrip_config(schema)`.
void write_csv(const Dataset& data, std::ostream& out);
void write_csv(const Dataset& data, const std::filesystem::path& path);

/// Schema config that reloads a file written by write_csv. One-hot columns
/// come back as numeric characteristics.
SchemaConfig roundtrip_config(const FeatureSchema& schema);

struct DatasetSplit {
  Dataset train;
  Dataset dev;
  Dataset test;
};

/// Seeded random partition. Sizes are round(f0*N), round(f1*N), remainder.
DatasetSplit split_dataset(const Dataset& data, const std::array<double, 3>& fractions,
                           std::uint64_t seed);

/// Seed derivation used across the project: deterministic, well mixed.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream);

}  // namespace tastenet
