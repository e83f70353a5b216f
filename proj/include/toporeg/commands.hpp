#pragma once

#include <filesystem>
#include <functional>
#include <optional>

#include "toporeg/harness.hpp"

namespace toporeg {

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitDivergence = 3, kExitIo = 4 };

/// Runs `body`, mapping library exceptions to exit codes and printing the
/// message to stderr.
int run_guarded(const std::function<int()>& body);

/// Writes the generated dataset to `out` (a CSV file path).
int cmd_synth(const GeneratorSpec& spec, const std::filesystem::path& out);

/// Trains one configuration on the whole dataset. Writes model.json,
/// report.json and timing.json into cfg.out_dir.
int cmd_train(const ExperimentConfig& cfg);

/// Nested cross-validation. Writes report.json and timing.json.
int cmd_cv(const ExperimentConfig& cfg);

/// Decision-field samples on a resolution^D grid over the unit box, one row
/// per vertex in grid order: x0..x{D-1} then `value` (f - 0.5), or psi_k
/// columns for a multilabel model. Writes boundary.csv.
int cmd_dump_boundary(const std::filesystem::path& model, std::size_t resolution,
                      const std::filesystem::path& out_dir);

struct DumpPersistenceOptions {
  /// Exactly one of model / field. A field CSV has coordinate columns and a
  /// final `value` column.
  std::optional<std::filesystem::path> model;
  std::optional<std::filesystem::path> field;
  Discretization discretization;
  std::filesystem::path out_dir = ".";
};

/// Boundary components (persistence.csv), the same components with origin,
/// robustness and exclusion (components.csv), and the raw sublevel pairs of
/// the field (pairs.csv). Multilabel models get one set of files per class.
int cmd_dump_persistence(const DumpPersistenceOptions& options);

void write_persistence_csv(const ComponentSet& set, const std::filesystem::path& path);
void write_component_csv(const ComponentSet& set, const std::filesystem::path& path);
void write_pairs_csv(const PersistenceResult& result, const ScalarField& field,
                     const std::filesystem::path& path);

}  // namespace toporeg
