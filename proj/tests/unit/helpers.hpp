#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "metabalance/data/dataset.hpp"
#include "metabalance/random.hpp"

namespace testing {

using metabalance::ad::MatrixD;
using metabalance::data::Dataset;

inline MatrixD random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
                             double scale = 1.0) {
  metabalance::Rng rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  MatrixD m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

/// Two Gaussian clouds, `counts[c]` rows each, class c centred at c * offset on every axis.
inline Dataset blobs(const std::vector<std::size_t>& counts, std::size_t dim, double offset,
                     std::uint64_t seed, double spread = 1.0) {
  metabalance::Rng rng(seed);
  std::normal_distribution<double> n(0.0, spread);
  std::size_t total = 0;
  for (auto c : counts) total += c;
  MatrixD x(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(dim));
  std::vector<int> y;
  Eigen::Index r = 0;
  for (std::size_t c = 0; c < counts.size(); ++c)
    for (std::size_t i = 0; i < counts[c]; ++i, ++r) {
      for (std::size_t j = 0; j < dim; ++j)
        x(r, static_cast<Eigen::Index>(j)) = static_cast<double>(c) * offset + n(rng);
      y.push_back(static_cast<int>(c));
    }
  return Dataset::from(std::move(x), std::move(y), static_cast<int>(counts.size()));
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("metabalance_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline bool bit_equal(const MatrixD& a, const MatrixD& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (std::memcmp(&a.data()[i], &b.data()[i], sizeof(double)) != 0) return false;
  return true;
}

}  // namespace testing
