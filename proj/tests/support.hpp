#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "tastenet/choice.hpp"
#include "tastenet/data.hpp"
#include "tastenet/error.hpp"
#include "tastenet/model.hpp"

namespace test {

inline bool close_rel(double a, double b, double rel, double abs_floor = 1e-9) {
  const double diff = std::abs(a - b);
  return diff <= abs_floor || diff <= rel * std::max(std::abs(a), std::abs(b));
}

inline std::vector<double> uniform_vector(std::mt19937_64& rng, std::size_t n, double lo,
                                          double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

/// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("tastenet-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Two alternatives, attributes (cost, time), characteristics (inc, full, flex).
inline tastenet::FeatureSchema binary_schema() {
  tastenet::FeatureSchema s;
  s.characteristic_names = {"inc", "full", "flex"};
  s.characteristic_scaling = {1.0, 1.0, 1.0};
  s.alternative_names = {"0", "1"};
  s.attribute_names = {{"cost", "time"}, {"cost", "time"}};
  s.attribute_scaling = {{1.0, 1.0}, {1.0, 1.0}};
  s.availability_names = {"", ""};
  s.choice_name = "choice";
  return s;
}

inline tastenet::Observation binary_obs(double inc, double full, double flex, double c0, double t0,
                                        double c1, double t1, std::size_t chosen = 0) {
  tastenet::Observation o;
  o.z = {inc, full, flex};
  o.x = {{c0, t0}, {c1, t1}};
  o.available = {1, 1};
  o.chosen = chosen;
  return o;
}

}  // namespace test
