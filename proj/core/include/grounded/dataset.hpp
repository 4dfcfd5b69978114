#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "grounded/common.hpp"

namespace grounded {

// One tabular study sample. Immutable by convention after construction;
// all operations return new datasets.
struct Dataset {
  Eigen::MatrixXd features;                   // n x d
  std::vector<std::string> feature_names;     // d, unique
  Eigen::VectorXd treatment;                  // n, each value exactly 0 or 1
  Eigen::VectorXd outcome;                    // n
  std::optional<Eigen::VectorXd> propensity;  // n, each strictly in (0, 1)

  Eigen::Index n() const { return outcome.size(); }
  Eigen::Index d() const { return features.cols(); }

  // Throws DataError if any invariant fails.
  void validate() const;

  // Row subset, preserving the given order.
  Dataset rows(const std::vector<Eigen::Index>& idx) const;

  // Column index by name; throws DataError if absent.
  Eigen::Index feature_index(const std::string& name) const;
};

struct ColumnSchema {
  std::string treatment_col;
  std::string outcome_col;
  std::optional<std::string> propensity_col;
  std::vector<std::string> categorical_cols;
  std::vector<std::string> drop_cols;
};

enum class OneHotPolicy {
  full,        // one column per level; rows sum to exactly 1
  drop_first,  // reference level (lexicographically first) dropped
};

struct OneHotResult {
  Eigen::MatrixXd columns;          // n x k
  std::vector<std::string> levels;  // k, lexicographic
};

// Levels are ordered lexicographically for determinism. Encoding a value not
// seen among `values` is impossible here; prediction-time unseen levels are a
// concern for load-time encoding only (they map to all-zero rows and warn).
OneHotResult one_hot_encode(const std::vector<std::string>& values, OneHotPolicy policy);

// Parses an RFC-4180-style CSV (header row required, "." decimal point,
// UTF-8 passed through). drop_cols are removed before encoding; categorical
// columns are one-hot expanded in place with names "col=level". Missing or
// non-numeric cells are hard errors naming row and column.
Dataset load_csv(const std::string& path, const ColumnSchema& schema,
                 OneHotPolicy policy = OneHotPolicy::full);

// Writes features + treatment,outcome[,propensity][,extra]. Doubles are
// written shortest-round-trip, so load_csv(write_csv(ds)) reproduces every
// parsed value bit for bit.
void write_csv(const Dataset& ds, const std::string& path,
               const std::string& extra_col = {},
               const std::vector<double>& extra_values = {});

// Reads a single numeric column from a CSV file.
std::vector<double> read_csv_column(const std::string& path, const std::string& column);

// Disjoint row partition: the first part gets round(fraction * n) rows
// (round half away from zero), drawn by seeded shuffle; row order within each
// part follows the source. Throws DataError if either side would be empty.
std::pair<Dataset, Dataset> split(const Dataset& ds, double fraction, std::uint64_t seed);

// The index form of split(); both sides ascending.
std::pair<std::vector<Eigen::Index>, std::vector<Eigen::Index>> split_indices(
    Eigen::Index n, double fraction, std::uint64_t seed);

struct PairDiagnostics {
  bool unc_has_propensity = false;
  // Fraction of unc rows whose nearest conf row (Euclidean on z-scored
  // features, conf statistics) lies within the conf sample's median
  // nearest-neighbor radius.
  double coverage_fraction = 0.0;
  double median_nn_radius = 0.0;
};

// Checks the two samples are combinable: identical feature names and order
// (hard error otherwise), then computes the one-way overlap diagnostic.
PairDiagnostics validate_pair(const Dataset& conf, const Dataset& unc);

}  // namespace grounded
