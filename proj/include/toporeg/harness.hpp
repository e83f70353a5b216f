#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "toporeg/datasets.hpp"
#include "toporeg/klr.hpp"

namespace toporeg {

enum class Method { TopoReg, Klr };

struct GeneratorSpec {
  std::string name = "moons";  // moons | blobs
  std::size_t n = 1000;
  double noise = 0.1;          // moons jitter sd
  double flip = 0.0;           // label-noise fraction
  std::size_t classes = 2;     // blobs
  std::size_t dim = 2;         // blobs
  double spread = 0.3;         // blobs
  std::uint64_t seed = 0;
};

/// Points are generated from sub_seed(seed, "generator"), labels flipped from
/// sub_seed(seed, "flip"). Throws UsageError for an unknown generator name.
Dataset generate(const GeneratorSpec& spec);

/// One hyper-grid point.
struct Cell {
  double lambda = 0.0;
  double sigma = 0.1;
  double learning_rate = 0.01;
  std::size_t iterations = 300;

  friend bool operator==(const Cell&, const Cell&) = default;
};

struct ExperimentConfig {
  std::string data_path;
  std::optional<GeneratorSpec> generator;
  Method method = Method::TopoReg;
  std::vector<double> lambdas{1.0};
  std::vector<double> sigmas{0.1};
  std::vector<double> learning_rates{0.01};
  std::vector<std::size_t> iterations{300};
  double grad_tol = 1e-6;
  /// Unset: 300x300 grid for D <= 2, KNN with k = 3 above.
  std::optional<Discretization> discretization;
  std::size_t n_outer = 6;
  std::size_t n_inner = 5;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  double l2 = 0.0;
  std::size_t threads = 1;
  /// Force the multinomial model even for two classes.
  bool multilabel = false;

  void validate() const;
  /// Cartesian product, ordered by (lambda, sigma, learning rate, iterations).
  std::vector<Cell> grid() const;
  Discretization discretization_for(std::size_t dim) const;
};

nlohmann::json to_json(const ExperimentConfig& cfg);
/// Keys absent from `j` keep the values already in `cfg`.
void merge_json(ExperimentConfig& cfg, const nlohmann::json& j);

Dataset load_dataset(const ExperimentConfig& cfg);

/// Trains the model family the data calls for (binary unless more than two
/// classes or cfg.multilabel). `ds` must be normalized.
TrainResult fit(const Dataset& ds, const Cell& cell, const ExperimentConfig& cfg,
                const std::function<void(const IterationRecord&)>& observer = {});

/// Wall-clock seconds per named phase. Never part of a report.
using PhaseTimes = std::map<std::string, double>;

struct FoldResult {
  std::size_t fold = 0;
  double test_error = 0.0;
  Cell selected;
  /// Mean inner-validation error per grid cell (empty for a one-cell grid).
  std::vector<double> inner_errors;
  std::size_t components = 0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
};

struct CvReport {
  std::vector<Cell> grid;
  std::vector<FoldResult> folds;
  double mean_error = 0.0;
  double sd_error = 0.0;
  double mean_components = 0.0;
  std::vector<std::string> warnings;
};

/// Nested cross-validation: each outer fold is the test set once; the grid
/// cell with the lowest mean inner-validation error (ties: smaller lambda,
/// then smaller sigma) is retrained on the whole outer training set.
/// Normalization is fitted on outer training data only.
CvReport run_cv(const Dataset& ds, const ExperimentConfig& cfg, PhaseTimes* times = nullptr);

nlohmann::json to_json(const CvReport& report);

/// Sample mean and standard deviation (n - 1 denominator).
std::pair<double, double> mean_sd(const std::vector<double>& values);

/// Runs fn(0..count-1) on up to `threads` workers.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace toporeg
