#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace dgbr {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Binary features plus binary outcome: the (X, Y) of one environment.
///
/// Every entry is exactly 0.0 or 1.0; the constructor rejects anything else.
/// Instances are immutable once built.
class BinaryDataset {
 public:
  BinaryDataset(Matrix features, Vector outcome,
                std::vector<std::string> feature_names = {});

  const Matrix& features() const { return features_; }
  const Vector& outcome() const { return outcome_; }
  const std::vector<std::string>& feature_names() const { return names_; }

  Index n() const { return features_.rows(); }
  Index p() const { return features_.cols(); }

  BinaryDataset select_rows(std::span<const Index> rows) const;
  BinaryDataset select_columns(std::span<const Index> cols) const;

  bool operator==(const BinaryDataset& other) const;

 private:
  Matrix features_;
  Vector outcome_;
  std::vector<std::string> names_;
};

/// "X1", ..., "Xp".
std::vector<std::string> default_feature_names(Index p);

/// Partition of the feature columns into stable (S) and noisy (V) indices.
struct StableSplit {
  std::vector<Index> stable;
  std::vector<Index> noisy;

  /// Throws unless stable and noisy are disjoint and cover 0..p-1.
  void validate(Index p) const;
};

/// One training environment plus labelled test environments.
struct EnvironmentSuite {
  BinaryDataset train;
  std::vector<std::pair<std::string, BinaryDataset>> tests;
  std::map<std::string, std::string> provenance;

  /// Shared p and feature names, unique labels.
  void validate() const;
};

/// 1 where the value is >= its column mean, 0 otherwise.
Matrix binarize(const Matrix& values);

/// Keeps the columns whose empirical frequency of ones lies in [lo, hi].
BinaryDataset overlap_filter(const BinaryDataset& data, double lo, double hi);

BinaryDataset load_csv(const std::filesystem::path& path);
void save_csv(const BinaryDataset& data, const std::filesystem::path& path);

/// Reads a suite manifest (or `suite.json` inside a directory); dataset
/// paths are resolved relative to it.
EnvironmentSuite load_suite(const std::filesystem::path& where);

/// Writes train.csv, one CSV per test environment and suite.json into `dir`.
/// Returns the manifest path.
std::filesystem::path save_suite(const EnvironmentSuite& suite,
                                 const std::filesystem::path& dir);

/// Writes through a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace dgbr
