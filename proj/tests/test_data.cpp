#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "doctest.h"
#include "support.hpp"
#include "tastenet/data.hpp"
#include "tastenet/error.hpp"

using namespace tastenet;

namespace {

SchemaConfig toy_config() {
  SchemaConfig c;
  CharacteristicColumn age;
  age.column = "AGE";
  age.kind = CharacteristicColumn::Kind::categorical;
  age.levels = {0, 1, 2};
  age.reference = 0;
  age.remap = {{1, 0}, {2, 1}, {3, 2}};
  CharacteristicColumn male;
  male.column = "MALE";
  c.characteristics = {age, male};
  c.alternatives = {
      {"TRAIN", {{"tt", "TRAIN_TT", 0.01}, {"co", "TRAIN_CO", 0.01}}, "TRAIN_AV", 1},
      {"CAR", {{"tt", "CAR_TT", 0.01}, {"co", "CAR_CO", 0.01}}, "CAR_AV", 2},
  };
  c.choice_column = "CHOICE";
  c.filters = {{"AGE", {6}}, {"CHOICE", {0}}};
  return c;
}

const char* kToy =
    "AGE,MALE,TRAIN_TT,TRAIN_CO,TRAIN_AV,CAR_TT,CAR_CO,CAR_AV,CHOICE\n"
    "1,0,100,50,1,80,40,1,1\n"
    "3,1,120,60,1,95,45,1,1\n"
    "2,1,90,20,1,70,30,1,2\n";

// Adds a third alternative so a row can lose one and keep a choice.
SchemaConfig three_way_config() {
  auto c = toy_config();
  c.alternatives.push_back({"SM", {{"tt", "SM_TT", 0.01}, {"co", "SM_CO", 0.01}}, "SM_AV", 3});
  return c;
}

const char* kThreeWay =
    "AGE,MALE,TRAIN_TT,TRAIN_CO,TRAIN_AV,CAR_TT,CAR_CO,CAR_AV,SM_TT,SM_CO,SM_AV,CHOICE\n"
    "1,0,100,50,1,80,40,1,60,70,1,3\n"
    "3,1,120,60,1,0,0,0,60,70,1,1\n";

Dataset parse(const std::string& text, const SchemaConfig& cfg, LoadStats* stats = nullptr) {
  std::istringstream in(text);
  return parse_csv(in, cfg, stats);
}

}  // namespace

TEST_CASE("three-row toy file") {
  LoadStats stats;
  const auto d = parse(kToy, toy_config(), &stats);
  REQUIRE(d.size() == 3);
  CHECK(stats.rows_read == 3);
  CHECK(stats.rows_dropped == 0);
  const auto& s = d.schema();
  CHECK(s.characteristic_names == std::vector<std::string>{"AGE_1", "AGE_2", "MALE"});
  REQUIRE(s.categorical.size() == 1);
  CHECK(s.categorical[0].variable == "AGE");

  CHECK(d[0].z == std::vector<double>{0, 0, 0});
  CHECK(d[1].z == std::vector<double>{0, 1, 1});
  CHECK(d[2].z == std::vector<double>{1, 0, 1});

  CHECK(d[0].available == std::vector<std::uint8_t>{1, 1});
  CHECK(d[0].chosen == 0);
  CHECK(d[2].chosen == 1);
  CHECK(d[0].x[0][0] == 100 * 0.01);
  CHECK(d[2].x[1][1] == 30 * 0.01);
}

TEST_CASE("an unavailable alternative is masked, a lone available one is rejected") {
  const auto d = parse(kThreeWay, three_way_config());
  REQUIRE(d.size() == 2);
  CHECK(d[0].available == std::vector<std::uint8_t>{1, 1, 1});
  CHECK(d[1].available == std::vector<std::uint8_t>{1, 0, 1});
  CHECK(d[0].chosen == 2);

  std::ostringstream out;
  write_csv(d, out);
  std::istringstream in(out.str());
  const auto back = parse_csv(in, roundtrip_config(d.schema()));
  CHECK(back[1].available == d[1].available);

  const std::string lone = "AGE,MALE,TRAIN_TT,TRAIN_CO,TRAIN_AV,CAR_TT,CAR_CO,CAR_AV,CHOICE\n"
                           "1,0,100,50,1,0,0,0,1\n";
  try {
    parse(lone, toy_config());
    FAIL("expected a data error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::data);
  }
}

TEST_CASE("one-hot blocks sum to at most one") {
  const auto d = parse(kToy, toy_config());
  for (const auto& obs : d.observations()) {
    const double s = obs.z[0] + obs.z[1];
    CHECK((s == 0.0 || s == 1.0));
  }
}

TEST_CASE("filters drop rows and an empty result is a data error") {
  LoadStats stats;
  const std::string text = std::string(kToy) + "6,1,10,10,1,10,10,1,1\n2,0,10,10,1,10,10,1,0\n";
  const auto d = parse(text, toy_config(), &stats);
  CHECK(d.size() == 3);
  CHECK(stats.rows_dropped == 2);

  const std::string header_only = "AGE,MALE,TRAIN_TT,TRAIN_CO,TRAIN_AV,CAR_TT,CAR_CO,CAR_AV,CHOICE\n";
  try {
    parse(header_only, toy_config());
    FAIL("expected a data error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::data);
  }
}

TEST_CASE("missing column and bad cell errors") {
  const std::string no_male = "AGE,TRAIN_TT,TRAIN_CO,TRAIN_AV,CAR_TT,CAR_CO,CAR_AV,CHOICE\n1,1,1,1,1,1,1,1\n";
  try {
    parse(no_male, toy_config());
    FAIL("expected a schema error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::schema);
    CHECK(std::string(e.what()).find("MALE") != std::string::npos);
  }
  const std::string bad = "AGE,MALE,TRAIN_TT,TRAIN_CO,TRAIN_AV,CAR_TT,CAR_CO,CAR_AV,CHOICE\n"
                          "1,0,100,50,1,80,40,1,1\n"
                          "1,0,abc,50,1,80,40,1,1\n";
  try {
    parse(bad, toy_config());
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::parse);
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse("", toy_config()), Error);
}

TEST_CASE("chosen alternative must be available") {
  const std::string text = "AGE,MALE,TRAIN_TT,TRAIN_CO,TRAIN_AV,CAR_TT,CAR_CO,CAR_AV,CHOICE\n"
                           "1,0,100,50,1,80,40,0,2\n";
  try {
    parse(text, toy_config());
    FAIL("expected a data error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::data);
  }
}

TEST_CASE("tab delimiter") {
  auto cfg = toy_config();
  cfg.delimiter = '\t';
  std::string text = kToy;
  for (auto& ch : text) {
    if (ch == ',') ch = '\t';
  }
  CHECK(parse(text, cfg).size() == 3);
}

TEST_CASE("write and reload is exact for power-of-two scaling") {
  auto cfg = toy_config();
  for (auto& a : cfg.alternatives) {
    for (auto& at : a.attributes) at.scale = 0.25;
  }
  std::mt19937_64 rng(8);
  std::ostringstream raw;
  raw << "AGE,MALE,TRAIN_TT,TRAIN_CO,TRAIN_AV,CAR_TT,CAR_CO,CAR_AV,CHOICE\n";
  std::uniform_real_distribution<double> u(0.0, 500.0);
  for (int i = 0; i < 200; ++i) {
    raw.precision(17);
    raw << (1 + i % 3) << ',' << (i % 2) << ',' << u(rng) << ',' << u(rng) << ",1," << u(rng)
        << ',' << u(rng) << ",1," << (1 + i % 2) << '\n';
  }
  const auto d = parse(raw.str(), cfg);
  std::ostringstream out;
  write_csv(d, out);
  std::istringstream in(out.str());
  const auto back = parse_csv(in, roundtrip_config(d.schema()));
  REQUIRE(back.size() == d.size());
  for (std::size_t n = 0; n < d.size(); ++n) CHECK(back[n] == d[n]);
}

TEST_CASE("write and reload with decimal scaling stays within one ulp") {
  const auto d = parse(kToy, toy_config());
  std::ostringstream out;
  write_csv(d, out);
  std::istringstream in(out.str());
  const auto back = parse_csv(in, roundtrip_config(d.schema()));
  for (std::size_t n = 0; n < d.size(); ++n) {
    CHECK(back[n].z == d[n].z);
    CHECK(back[n].available == d[n].available);
    CHECK(back[n].chosen == d[n].chosen);
    for (std::size_t i = 0; i < d[n].x.size(); ++i) {
      for (std::size_t k = 0; k < d[n].x[i].size(); ++k) {
        const double a = d[n].x[i][k];
        const double b = back[n].x[i][k];
        CHECK((a == b || std::nextafter(a, b) == b));
      }
    }
  }
}

TEST_CASE("split sizes, exhaustiveness and determinism") {
  const auto schema = test::binary_schema();
  std::vector<Observation> obs;
  for (int i = 0; i < 10692; ++i) obs.push_back(test::binary_obs(i, 0, 0, 1, 1, 1, 1, i % 2));
  const Dataset d(schema, obs);
  const auto s = split_dataset(d, {0.70, 0.15, 0.15}, 7);
  CHECK(s.train.size() == 7484);
  CHECK(s.dev.size() == 1604);
  CHECK(s.test.size() == 1604);
  CHECK(s.train.tag() == SplitTag::train);
  CHECK(s.dev.tag() == SplitTag::dev);
  CHECK(s.test.tag() == SplitTag::test);

  std::set<double> seen;
  for (const auto* part : {&s.train, &s.dev, &s.test}) {
    for (const auto& o : part->observations()) seen.insert(o.z[0]);
  }
  CHECK(seen.size() == 10692);

  const auto again = split_dataset(d, {0.70, 0.15, 0.15}, 7);
  CHECK(again.train.observations() == s.train.observations());
  CHECK(again.test.observations() == s.test.observations());
  const auto other = split_dataset(d, {0.70, 0.15, 0.15}, 8);
  CHECK_FALSE(other.train.observations() == s.train.observations());

  const auto all = split_dataset(d, {1.0, 0.0, 0.0}, 1);
  CHECK(all.train.size() == d.size());
  CHECK(all.dev.empty());
  CHECK(all.test.empty());

  CHECK_THROWS_AS(split_dataset(d, {0.5, 0.2, 0.2}, 1), Error);
  CHECK_THROWS_AS(split_dataset(d, {1.2, -0.1, -0.1}, 1), Error);
}

TEST_CASE("split sizes stay within one row of the requested fractions") {
  const auto schema = test::binary_schema();
  for (std::size_t n : {1u, 2u, 7u, 33u, 101u, 1000u}) {
    std::vector<Observation> obs(n, test::binary_obs(0, 0, 0, 1, 1, 1, 1, 0));
    const auto s = split_dataset(Dataset(schema, obs), {0.6, 0.25, 0.15}, 3);
    CHECK(std::abs(static_cast<double>(s.train.size()) - 0.6 * n) <= 1.0);
    CHECK(std::abs(static_cast<double>(s.dev.size()) - 0.25 * n) <= 1.0);
    CHECK(std::abs(static_cast<double>(s.test.size()) - 0.15 * n) <= 1.0);
    CHECK(s.train.size() + s.dev.size() + s.test.size() == n);
  }
}

TEST_CASE("schema validation") {
  auto s = test::binary_schema();
  CHECK_NOTHROW(s.validate());
  auto dup = s;
  dup.characteristic_names[1] = "inc";
  CHECK_THROWS_AS(dup.validate(), Error);
  auto scale = s;
  scale.attribute_scaling[0][1] = 0.0;
  CHECK_THROWS_AS(scale.validate(), Error);
  auto empty = s;
  empty.attribute_names[1].clear();
  empty.attribute_scaling[1].clear();
  CHECK_THROWS_AS(empty.validate(), Error);
}

TEST_CASE("derive_seed is deterministic and spreads streams") {
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 1000; ++s) seen.insert(derive_seed(42, s));
  CHECK(seen.size() == 1000);
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}
