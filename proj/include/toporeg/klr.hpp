#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "toporeg/boundary.hpp"
#include "toporeg/datasets.hpp"
#include "toporeg/field_graph.hpp"

namespace toporeg {

/// Gaussian-kernel logistic model. Binary models carry one weight column and
/// predict with the sigmoid; multilabel models carry one column per class and
/// predict with the arg-max of the linear scores.
///
/// Points passed to the predict functions are in model space, i.e. already
/// mapped through `transform`.
struct KernelModel {
  PointSet train_points;
  double sigma = 1.0;
  std::size_t num_classes = 2;
  Eigen::MatrixXd weights;
  UnitBoxTransform transform;

  bool multilabel() const noexcept { return weights.cols() > 1; }
  void validate() const;
};

Eigen::VectorXd kernel_vector(std::span<const double> x, const PointSet& train, double sigma);
Eigen::VectorXd kernel_vector(std::span<const double> x, const KernelModel& model);

/// rows(points) x rows(train) Gram block.
Eigen::MatrixXd kernel_matrix(const PointSet& points, const PointSet& train, double sigma);

inline double sigmoid(double z) noexcept { return 1.0 / (1.0 + std::exp(-z)); }

/// f(x) in (0,1). The boundary machinery consumes f(x) - 0.5.
double predict_binary(const KernelModel& model, std::span<const double> x);
Eigen::VectorXd class_scores(const KernelModel& model, std::span<const double> x);
/// Binary: 1 iff f >= 0.5. Multilabel: arg-max score, ties to the smaller class.
int predict_label(const KernelModel& model, std::span<const double> x);
std::vector<int> predict_labels(const KernelModel& model, const PointSet& points);

/// Fraction of misclassified points. Throws StructuralError if ds is empty.
double evaluate(const KernelModel& model, const Dataset& ds);

struct LossGrad {
  double loss = 0.0;
  Eigen::MatrixXd grad;
};

/// Cross-entropy (sigmoid for one weight column, softmax otherwise) and its
/// gradient w.r.t. the weights. `features` is the data-by-train kernel block.
LossGrad data_loss_grad(const Eigen::MatrixXd& features, std::span<const int> labels,
                        const Eigen::MatrixXd& weights);
LossGrad data_loss_grad(const KernelModel& model, const Dataset& ds);

/// Kernel features of every vertex of a discretization. Grids use the
/// per-axis factorization of the Gaussian; other graphs use a dense block
/// when it fits in memory and recompute rows otherwise.
class VertexFeatures {
 public:
  VertexFeatures(const Graph& graph, const PointSet& train, double sigma);

  std::size_t vertex_count() const noexcept { return vertex_count_; }
  /// vertex_count x cols(weights) linear scores.
  Eigen::MatrixXd scores(const Eigen::MatrixXd& weights) const;
  Eigen::VectorXd row(VertexIndex v) const;

 private:
  enum class Mode { Separable, Dense, OnTheFly };

  Mode mode_;
  std::size_t vertex_count_;
  PointSet positions_;
  PointSet train_;
  double sigma_;
  // Separable: axis_[a](step, i) = exp(-(c_step - x_ia)^2 / 2 sigma^2); the
  // vertex row is the product over axes. tail_ is the product over axes 1..D-1.
  std::size_t resolution_ = 0;
  std::vector<Eigen::MatrixXd> axis_;
  Eigen::MatrixXd tail_;
  Eigen::MatrixXd dense_;
};

/// psi^k(v) = max_{t != k} score_t(v) - score_k(v), with the maximizing t.
struct PsiFields {
  std::vector<ScalarField> fields;
  std::vector<std::vector<std::size_t>> rival;
};

PsiFields psi_fields(const Eigen::MatrixXd& scores);
PsiFields psi_fields(const KernelModel& model, const Graph& graph);

/// f(v) - 0.5 on every vertex of a binary model.
ScalarField shifted_field(const KernelModel& model, const Graph& graph);

struct TopoLossGrad {
  double penalty = 0.0;
  Eigen::MatrixXd grad;
  /// One set for a binary model, one per class otherwise.
  std::vector<ComponentSet> components;

  std::size_t component_count() const noexcept;
};

TopoLossGrad topo_loss_grad(const KernelModel& model, const Graph& graph,
                            const VertexFeatures& features);
TopoLossGrad topo_loss_grad(const KernelModel& model, const Graph& graph);

struct Discretization {
  enum class Kind { Grid, Knn };
  Kind kind = Kind::Grid;
  std::size_t resolution = 300;
  std::size_t k = 3;
};

/// Grid over [0,1]^D, or the KNN graph of the training points.
Graph build_discretization(const Discretization& disc, const PointSet& train_points);

struct IterationRecord {
  std::size_t iteration = 0;
  double objective = 0.0;
  double data_loss = 0.0;
  double topo_penalty = 0.0;
  double learning_rate = 0.0;
  double grad_norm = 0.0;
  std::size_t components = 0;
  /// The persistence pairing differs from the previous accepted iterate.
  bool pairing_switch = false;
};

struct TrainConfig {
  double lambda = 0.0;
  double sigma = 0.1;
  double learning_rate = 0.01;
  std::size_t max_iters = 300;
  double grad_tol = 1e-6;
  Discretization discretization;
  std::uint64_t seed = 0;
  /// Optional ridge term for the baseline; 0 leaves the objective untouched.
  double l2 = 0.0;
  /// Consecutive step halvings after which training stops as stalled.
  std::size_t max_halvings = 40;
  std::function<void(const IterationRecord&)> observer;
};

struct TrainResult {
  KernelModel model;
  std::vector<IterationRecord> trace;
  std::string stop_reason;
  double topology_seconds = 0.0;
};

/// Gradient descent from w = 0 on cross-entropy + lambda * topo penalty.
/// Expects normalized inputs. Throws DivergenceError on a non-finite objective.
TrainResult train_binary(const Dataset& ds, const TrainConfig& config);
TrainResult train_multilabel(const Dataset& ds, const TrainConfig& config);

/// Total number of zero-level-set components over all fields of the model.
std::size_t boundary_component_count(const KernelModel& model, const Graph& graph);

}  // namespace toporeg
