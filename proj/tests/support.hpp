#pragma once

#include <random>
#include <string>
#include <vector>

#include "sgmv/error.hpp"
#include "sgmv/model.hpp"

namespace test {

// Small dense ridge instance with entries uniform on [-2, 2].
inline sgmv::RidgeObjective random_ridge(Eigen::Index n, Eigen::Index d, double lambda,
                                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  sgmv::RowMatrix X(n, d);
  sgmv::Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) X(i, j) = u(rng);
    y(i) = u(rng);
  }
  return sgmv::RidgeObjective(sgmv::Dataset(std::move(X), std::move(y), "random"), lambda);
}

inline sgmv::Vector random_vector(Eigen::Index d, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  sgmv::Vector v(d);
  for (auto& x : v) x = u(rng);
  return v;
}

// Collects warnings for the lifetime of the object.
class WarningCapture {
 public:
  WarningCapture()
      : previous_(sgmv::set_warning_handler(
            [this](std::string_view m) { messages.emplace_back(m); })) {}
  ~WarningCapture() { sgmv::set_warning_handler(previous_); }
  WarningCapture(const WarningCapture&) = delete;
  WarningCapture& operator=(const WarningCapture&) = delete;

  std::vector<std::string> messages;

 private:
  sgmv::WarningHandler previous_;
};

}  // namespace test
