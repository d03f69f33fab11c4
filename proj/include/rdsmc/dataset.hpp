#pragma once

#include <string>
#include <vector>

#include "rdsmc/core.hpp"

namespace rdsmc {

struct Dataset {
  Eigen::MatrixXd features;
  Vector labels;

  Index rows() const { return features.rows(); }
};

struct DatasetSplits {
  Dataset train, validation, test;
  /// Columns left unstandardized because they are constant on the training split.
  std::vector<Index> constant_columns;
};

/// Parses a delimiter-separated numeric table whose last column is a 0/1
/// label. Lines starting with '#' are skipped; the delimiter (',', ';', tab
/// or whitespace) and an optional header row are detected from the content.
Dataset read_table(const std::string& path);

/// Shuffles rows with `split_seed` and splits them 60/20/20
/// (floor(0.6 n), floor(0.2 n), remainder). Features are standardized with
/// training-split statistics; constant columns are left as they are.
DatasetSplits split_and_standardize(const Dataset& data, std::uint64_t split_seed);

inline DatasetSplits load_dataset(const std::string& path, std::uint64_t split_seed) {
  return split_and_standardize(read_table(path), split_seed);
}

}  // namespace rdsmc
