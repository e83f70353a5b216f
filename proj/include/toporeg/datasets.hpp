#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "toporeg/field_graph.hpp"

namespace toporeg {

struct Dataset {
  PointSet points;
  std::vector<int> labels;
  std::string name;
  /// Free-form generator description, written as a leading "# ..." CSV line.
  std::string provenance;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dim() const noexcept { return points.dim(); }
  /// max label + 1, at least 2.
  std::size_t num_classes() const noexcept;

  /// Throws StructuralError on mismatched lengths or negative labels.
  void validate() const;
  Dataset subset(std::span<const std::size_t> indices) const;
};

/// Two interleaved half circles: label 0 on the upper unit half circle around
/// (0,0), label 1 on the lower one around (1,0.5). Angles are evenly spaced;
/// `seed` drives the Gaussian jitter and the final shuffle.
Dataset make_moons(std::size_t n, double noise_sd, std::uint64_t seed);

/// Round-robin assignment of n points to `centers` with isotropic Gaussian
/// spread; label = center index.
Dataset make_blobs(std::size_t n, const PointSet& centers, double spread, std::uint64_t seed);

/// Flips floor(fraction * N) distinct labels, each to a uniformly drawn
/// different class.
Dataset flip_labels(const Dataset& ds, double fraction, std::uint64_t seed);

Dataset load_csv(const std::filesystem::path& path);
void save_csv(const Dataset& ds, const std::filesystem::path& path);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double x);

/// Outer fold assignment for the nested cross-validation protocol.
struct FoldPlan {
  std::size_t n_outer = 6;
  std::size_t n_inner = 5;
  std::uint64_t seed = 0;
  std::vector<std::size_t> assignments;
  std::vector<std::string> warnings;

  std::vector<std::size_t> test_indices(std::size_t outer) const;
  std::vector<std::size_t> train_indices(std::size_t outer) const;
};

/// Stratified split: each class is shuffled and dealt round-robin, continuing
/// where the previous class stopped so fold sizes differ by at most one.
/// Classes with fewer than n_outer members are pooled and dealt unstratified.
FoldPlan split_folds(const Dataset& ds, std::uint64_t seed, std::size_t n_outer = 6,
                     std::size_t n_inner = 5);

/// Inner fold (0..n_inner-1) of every entry of plan.train_indices(outer),
/// derived from (seed, outer).
std::vector<std::size_t> inner_assignments(const FoldPlan& plan, const Dataset& ds,
                                           std::size_t outer);

}  // namespace toporeg
