#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace sgmv {

using Vector = Eigen::VectorXd;
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense finite-sum problem instance: one row of `features` per sample.
/// Immutable once built; construction validates shape and finiteness.
class Dataset {
 public:
  Dataset(RowMatrix features, Vector targets, std::string name = {});

  const RowMatrix& features() const noexcept { return features_; }
  const Vector& targets() const noexcept { return targets_; }
  Eigen::Index n() const noexcept { return features_.rows(); }
  Eigen::Index d() const noexcept { return features_.cols(); }
  const std::string& name() const noexcept { return name_; }

  auto row(Eigen::Index i) const { return features_.row(i); }

  bool operator==(const Dataset& other) const;

 private:
  RowMatrix features_;
  Vector targets_;
  std::string name_;
};

/// Reads "label idx:val ..." lines with 1-based, strictly increasing indices.
/// Blank lines and lines starting with '#' are skipped.
Dataset parse_libsvm(std::istream& in,
                     std::optional<Eigen::Index> expected_dim = std::nullopt,
                     std::string name = {});

Dataset load_libsvm(const std::string& path,
                    std::optional<Eigen::Index> expected_dim = std::nullopt);

/// Writes nonzero entries with round-trip precision.
void write_libsvm(std::ostream& out, const Dataset& ds);
void save_libsvm(const std::string& path, const Dataset& ds);

/// Maps each column into [-1, 1]; constant columns become zero.
Dataset maxmin_scale(const Dataset& ds);

struct SyntheticRidge {
  Dataset data;
  Vector planted_weights;
};

/// Features i.i.d. uniform on [-1, 1], planted weights i.i.d. N(0, 1),
/// targets x_i . w + N(0, noise_sd^2). Bitwise reproducible for a seed.
SyntheticRidge synth_ridge(Eigen::Index n, Eigen::Index d, double noise_sd,
                           std::uint64_t seed);

}  // namespace sgmv
