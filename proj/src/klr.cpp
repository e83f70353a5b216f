#include "toporeg/klr.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <tuple>

#include "toporeg/errors.hpp"

namespace toporeg {

namespace {

constexpr double kProbFloor = 1e-12;
// Dense vertex blocks above this many entries are recomputed on demand.
constexpr std::size_t kDenseLimit = std::size_t{1} << 24;

double clamp_prob(double p) { return std::clamp(p, kProbFloor, 1.0 - kProbFloor); }

double gaussian(double d2, double sigma) { return std::exp(-d2 / (2.0 * sigma * sigma)); }

}  // namespace

void KernelModel::validate() const {
  if (!(sigma > 0.0)) throw StructuralError("kernel width must be positive");
  if (static_cast<std::size_t>(weights.rows()) != train_points.size())
    throw StructuralError("weight rows do not match training points");
  if (weights.cols() != 1 && static_cast<std::size_t>(weights.cols()) != num_classes)
    throw StructuralError("weight columns do not match class count");
  if (num_classes < 2) throw StructuralError("need at least two classes");
}

Eigen::VectorXd kernel_vector(std::span<const double> x, const PointSet& train, double sigma) {
  if (x.size() != train.dim()) throw StructuralError("point dimension mismatch");
  Eigen::VectorXd phi(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto t = train[i];
    double d2 = 0.0;
    for (std::size_t a = 0; a < x.size(); ++a) {
      const double d = x[a] - t[a];
      d2 += d * d;
    }
    phi[static_cast<Eigen::Index>(i)] = gaussian(d2, sigma);
  }
  return phi;
}

Eigen::VectorXd kernel_vector(std::span<const double> x, const KernelModel& model) {
  return kernel_vector(x, model.train_points, model.sigma);
}

Eigen::MatrixXd kernel_matrix(const PointSet& points, const PointSet& train, double sigma) {
  Eigen::MatrixXd k(points.size(), train.size());
  for (std::size_t r = 0; r < points.size(); ++r)
    k.row(static_cast<Eigen::Index>(r)) = kernel_vector(points[r], train, sigma).transpose();
  return k;
}

double predict_binary(const KernelModel& model, std::span<const double> x) {
  return sigmoid(kernel_vector(x, model).dot(model.weights.col(0)));
}

Eigen::VectorXd class_scores(const KernelModel& model, std::span<const double> x) {
  return model.weights.transpose() * kernel_vector(x, model);
}

namespace {

int label_from_scores(const Eigen::Ref<const Eigen::RowVectorXd>& s, bool multilabel) {
  if (!multilabel) return sigmoid(s[0]) - 0.5 >= 0.0 ? 1 : 0;
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < s.size(); ++k)
    if (s[k] > s[best]) best = k;
  return static_cast<int>(best);
}

}  // namespace

int predict_label(const KernelModel& model, std::span<const double> x) {
  return label_from_scores(class_scores(model, x).transpose(), model.multilabel());
}

std::vector<int> predict_labels(const KernelModel& model, const PointSet& points) {
  const Eigen::MatrixXd s = kernel_matrix(points, model.train_points, model.sigma) * model.weights;
  std::vector<int> out(points.size());
  for (Eigen::Index r = 0; r < s.rows(); ++r)
    out[static_cast<std::size_t>(r)] = label_from_scores(s.row(r), model.multilabel());
  return out;
}

double evaluate(const KernelModel& model, const Dataset& ds) {
  if (ds.size() == 0) throw StructuralError("cannot evaluate on an empty dataset");
  const auto pred = predict_labels(model, ds.points);
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) wrong += pred[i] != ds.labels[i];
  return static_cast<double>(wrong) / static_cast<double>(ds.size());
}

LossGrad data_loss_grad(const Eigen::MatrixXd& features, std::span<const int> labels,
                        const Eigen::MatrixXd& weights) {
  const Eigen::Index n = features.rows();
  if (static_cast<std::size_t>(n) != labels.size())
    throw StructuralError("feature rows do not match labels");
  const Eigen::MatrixXd scores = features * weights;
  Eigen::MatrixXd residual(n, weights.cols());
  LossGrad out;

  if (weights.cols() == 1) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double f = sigmoid(scores(i, 0));
      const double t = labels[static_cast<std::size_t>(i)];
      const double p = clamp_prob(f);
      out.loss -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
      residual(i, 0) = f - t;
    }
  } else {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double top = scores.row(i).maxCoeff();
      const Eigen::RowVectorXd e = (scores.row(i).array() - top).exp().matrix();
      const Eigen::RowVectorXd p = e / e.sum();
      const auto t = static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)]);
      if (t < 0 || t >= weights.cols()) throw StructuralError("label outside class range");
      out.loss -= std::log(clamp_prob(p[t]));
      residual.row(i) = p;
      residual(i, t) -= 1.0;
    }
  }
  out.grad = features.transpose() * residual;
  return out;
}

LossGrad data_loss_grad(const KernelModel& model, const Dataset& ds) {
  return data_loss_grad(kernel_matrix(ds.points, model.train_points, model.sigma), ds.labels,
                        model.weights);
}

VertexFeatures::VertexFeatures(const Graph& graph, const PointSet& train, double sigma)
    : vertex_count_(graph.vertex_count()), train_(train), sigma_(sigma) {
  const auto n = static_cast<Eigen::Index>(train.size());
  if (graph.grid()) {
    const GridSpec& spec = *graph.grid();
    if (spec.dim != train.dim()) throw StructuralError("grid dimension does not match data");
    std::size_t tail_rows = 1;
    for (std::size_t a = 1; a < spec.dim; ++a) tail_rows *= spec.resolution;
    if (tail_rows * train.size() <= kDenseLimit) {
      mode_ = Mode::Separable;
      resolution_ = spec.resolution;
      const auto res = static_cast<Eigen::Index>(spec.resolution);
      for (std::size_t a = 0; a < spec.dim; ++a) {
        Eigen::MatrixXd f(res, n);
        for (Eigen::Index s = 0; s < res; ++s) {
          const double c = spec.coordinate(a, static_cast<std::size_t>(s));
          for (Eigen::Index i = 0; i < n; ++i) {
            const double d = c - train[static_cast<std::size_t>(i)][a];
            f(s, i) = gaussian(d * d, sigma);
          }
        }
        axis_.push_back(std::move(f));
      }
      // Khatri-Rao product of axes 1..D-1; row index has axis D-1 fastest.
      tail_ = Eigen::MatrixXd::Ones(1, n);
      for (std::size_t a = 1; a < spec.dim; ++a) {
        Eigen::MatrixXd next(tail_.rows() * res, n);
        for (Eigen::Index r = 0; r < tail_.rows(); ++r)
          for (Eigen::Index s = 0; s < res; ++s)
            next.row(r * res + s) = tail_.row(r).cwiseProduct(axis_[a].row(s));
        tail_ = std::move(next);
      }
      return;
    }
  }
  positions_ = graph.positions();
  if (positions_.dim() != train.dim()) throw StructuralError("graph dimension does not match data");
  if (vertex_count_ * train.size() <= kDenseLimit) {
    mode_ = Mode::Dense;
    dense_ = kernel_matrix(positions_, train, sigma);
  } else {
    mode_ = Mode::OnTheFly;
  }
}

Eigen::MatrixXd VertexFeatures::scores(const Eigen::MatrixXd& weights) const {
  const auto v = static_cast<Eigen::Index>(vertex_count_);
  switch (mode_) {
    case Mode::Separable: {
      // vertex (s0, tail) sits at s0 * tail_rows + tail, so column-major
      // tail_rows x res storage of  tail_ * diag(w) * axis_0^T  is vertex order.
      Eigen::MatrixXd out(v, weights.cols());
      for (Eigen::Index c = 0; c < weights.cols(); ++c) {
        const Eigen::MatrixXd block =
            tail_ * weights.col(c).asDiagonal() * axis_[0].transpose();
        out.col(c) = Eigen::Map<const Eigen::VectorXd>(block.data(), v);
      }
      return out;
    }
    case Mode::Dense:
      return dense_ * weights;
    case Mode::OnTheFly: {
      Eigen::MatrixXd out(v, weights.cols());
      for (Eigen::Index r = 0; r < v; ++r)
        out.row(r) = (weights.transpose() * row(static_cast<VertexIndex>(r))).transpose();
      return out;
    }
  }
  return {};
}

Eigen::VectorXd VertexFeatures::row(VertexIndex v) const {
  switch (mode_) {
    case Mode::Separable: {
      const std::size_t tail_rows = static_cast<std::size_t>(tail_.rows());
      const auto s0 = static_cast<Eigen::Index>(v / tail_rows);
      const auto t = static_cast<Eigen::Index>(v % tail_rows);
      return tail_.row(t).cwiseProduct(axis_[0].row(s0)).transpose();
    }
    case Mode::Dense:
      return dense_.row(static_cast<Eigen::Index>(v)).transpose();
    case Mode::OnTheFly:
      return kernel_vector(positions_[v], train_, sigma_);
  }
  return {};
}

PsiFields psi_fields(const Eigen::MatrixXd& scores) {
  const Eigen::Index v_count = scores.rows();
  const Eigen::Index k_count = scores.cols();
  if (k_count < 2) throw StructuralError("psi fields need at least two classes");
  PsiFields out;
  out.rival.assign(static_cast<std::size_t>(k_count),
                   std::vector<std::size_t>(static_cast<std::size_t>(v_count)));
  std::vector<std::vector<double>> values(static_cast<std::size_t>(k_count),
                                          std::vector<double>(static_cast<std::size_t>(v_count)));
  for (Eigen::Index v = 0; v < v_count; ++v) {
    // Best and runner-up classes give max_{t != k} for every k at once.
    Eigen::Index first = 0, second = 1;
    if (scores(v, 1) > scores(v, 0)) std::swap(first, second);
    for (Eigen::Index t = 2; t < k_count; ++t) {
      if (scores(v, t) > scores(v, first)) {
        second = first;
        first = t;
      } else if (scores(v, t) > scores(v, second)) {
        second = t;
      }
    }
    for (Eigen::Index k = 0; k < k_count; ++k) {
      const Eigen::Index t = k == first ? second : first;
      const auto ku = static_cast<std::size_t>(k);
      const auto vu = static_cast<std::size_t>(v);
      values[ku][vu] = scores(v, t) - scores(v, k);
      out.rival[ku][vu] = static_cast<std::size_t>(t);
    }
  }
  for (auto& vals : values) out.fields.emplace_back(std::move(vals));
  return out;
}

PsiFields psi_fields(const KernelModel& model, const Graph& graph) {
  VertexFeatures features(graph, model.train_points, model.sigma);
  return psi_fields(features.scores(model.weights));
}

namespace {

ScalarField shifted_from_scores(const Eigen::MatrixXd& scores) {
  std::vector<double> v(static_cast<std::size_t>(scores.rows()));
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = sigmoid(scores(static_cast<Eigen::Index>(i), 0)) - 0.5;
  return ScalarField(std::move(v));
}

}  // namespace

ScalarField shifted_field(const KernelModel& model, const Graph& graph) {
  VertexFeatures features(graph, model.train_points, model.sigma);
  return shifted_from_scores(features.scores(model.weights.leftCols(1)));
}

std::size_t TopoLossGrad::component_count() const noexcept {
  std::size_t n = 0;
  for (const auto& c : components) n += c.size();
  return n;
}

TopoLossGrad topo_loss_grad(const KernelModel& model, const Graph& graph,
                            const VertexFeatures& features) {
  if (features.vertex_count() != graph.vertex_count())
    throw StructuralError("vertex features do not match graph");
  const Eigen::MatrixXd scores = features.scores(model.weights);
  TopoLossGrad out;
  out.grad = Eigen::MatrixXd::Zero(model.weights.rows(), model.weights.cols());

  // (vertex, class, coefficient) contributions, reduced in sorted order.
  struct Contribution {
    VertexIndex vertex;
    std::size_t cls;
    double coefficient;
  };
  std::vector<Contribution> contributions;

  if (!model.multilabel()) {
    const ScalarField field = shifted_from_scores(scores);
    out.components.push_back(boundary_components(graph, field));
    out.penalty = topo_penalty(out.components.back());
    for (const auto& seed : penalty_seeds(out.components.back())) {
      // d(f - 0.5)/dw = f (1 - f) phi
      const double f = field[seed.vertex] + 0.5;
      contributions.push_back({seed.vertex, 0, seed.coefficient * f * (1.0 - f)});
    }
  } else {
    const PsiFields psi = psi_fields(scores);
    for (std::size_t k = 0; k < psi.fields.size(); ++k) {
      out.components.push_back(boundary_components(graph, psi.fields[k]));
      out.penalty += topo_penalty(out.components.back());
      for (const auto& seed : penalty_seeds(out.components.back())) {
        contributions.push_back({seed.vertex, psi.rival[k][seed.vertex], seed.coefficient});
        contributions.push_back({seed.vertex, k, -seed.coefficient});
      }
    }
  }

  std::stable_sort(contributions.begin(), contributions.end(),
                   [](const Contribution& a, const Contribution& b) {
                     return std::tie(a.vertex, a.cls) < std::tie(b.vertex, b.cls);
                   });
  for (std::size_t i = 0; i < contributions.size();) {
    const VertexIndex v = contributions[i].vertex;
    const Eigen::VectorXd phi = features.row(v);
    for (; i < contributions.size() && contributions[i].vertex == v; ++i)
      out.grad.col(static_cast<Eigen::Index>(contributions[i].cls)) +=
          contributions[i].coefficient * phi;
  }
  return out;
}

TopoLossGrad topo_loss_grad(const KernelModel& model, const Graph& graph) {
  VertexFeatures features(graph, model.train_points, model.sigma);
  return topo_loss_grad(model, graph, features);
}

Graph build_discretization(const Discretization& disc, const PointSet& train_points) {
  if (disc.kind == Discretization::Kind::Knn) return build_knn_graph(train_points, disc.k);
  return build_grid_graph(GridSpec::unit(disc.resolution, train_points.dim()));
}

std::size_t boundary_component_count(const KernelModel& model, const Graph& graph) {
  VertexFeatures features(graph, model.train_points, model.sigma);
  const Eigen::MatrixXd scores = features.scores(model.weights);
  if (!model.multilabel()) return boundary_components(graph, shifted_from_scores(scores)).size();
  std::size_t n = 0;
  for (const auto& field : psi_fields(scores).fields) n += boundary_components(graph, field).size();
  return n;
}

namespace {

struct ObjectiveState {
  double objective = 0.0;
  double data_loss = 0.0;
  double penalty = 0.0;
  Eigen::MatrixXd grad;
  std::vector<ComponentSet> components;
  std::size_t component_count = 0;
};

bool same_pairings(const std::vector<ComponentSet>& a, const std::vector<ComponentSet>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!same_pairing(a[i], b[i])) return false;
  return true;
}

TrainResult train(const Dataset& ds, const TrainConfig& config, std::size_t columns) {
  ds.validate();
  if (ds.size() == 0) throw StructuralError("empty training set");
  if (!(config.sigma > 0.0) || !(config.learning_rate > 0.0) || config.max_iters == 0 ||
      config.lambda < 0.0)
    throw StructuralError("invalid training configuration");

  TrainResult result;
  KernelModel& model = result.model;
  model.train_points = ds.points;
  model.sigma = config.sigma;
  model.num_classes = std::max(ds.num_classes(), columns);
  model.weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ds.size()),
                                        static_cast<Eigen::Index>(columns));

  const Eigen::MatrixXd gram = kernel_matrix(ds.points, ds.points, config.sigma);
  const bool topology = config.lambda > 0.0;
  Graph graph;
  std::optional<VertexFeatures> features;
  if (topology) {
    const auto t0 = std::chrono::steady_clock::now();
    graph = build_discretization(config.discretization, ds.points);
    features.emplace(graph, ds.points, config.sigma);
    result.topology_seconds +=
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

  auto evaluate_at = [&](const Eigen::MatrixXd& w) {
    ObjectiveState s;
    LossGrad data = data_loss_grad(gram, ds.labels, w);
    s.data_loss = data.loss;
    s.objective = data.loss;
    s.grad = std::move(data.grad);
    if (config.l2 > 0.0) {
      s.objective += config.l2 * w.squaredNorm();
      s.grad += 2.0 * config.l2 * w;
    }
    if (topology) {
      const auto t0 = std::chrono::steady_clock::now();
      model.weights = w;
      TopoLossGrad topo = topo_loss_grad(model, graph, *features);
      s.penalty = topo.penalty;
      s.objective += config.lambda * topo.penalty;
      s.grad += config.lambda * topo.grad;
      s.component_count = topo.component_count();
      s.components = std::move(topo.components);
      result.topology_seconds +=
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    return s;
  };

  double lr = config.learning_rate;
  Eigen::MatrixXd w = model.weights;
  ObjectiveState current = evaluate_at(w);
  if (!std::isfinite(current.objective)) throw DivergenceError(0, lr);

  auto record = [&](std::size_t it, bool switched) {
    IterationRecord r{it,
                      current.objective,
                      current.data_loss,
                      current.penalty,
                      lr,
                      current.grad.norm(),
                      current.component_count,
                      switched};
    result.trace.push_back(r);
    if (config.observer) config.observer(r);
  };
  record(0, false);

  result.stop_reason = "max_iters";
  for (std::size_t it = 1; it <= config.max_iters; ++it) {
    if (current.grad.norm() < config.grad_tol) {
      result.stop_reason = "grad_tol";
      break;
    }
    bool accepted = false;
    for (std::size_t halvings = 0; halvings <= config.max_halvings; ++halvings) {
      Eigen::MatrixXd candidate = w - lr * current.grad;
      ObjectiveState next = evaluate_at(candidate);
      if (!std::isfinite(next.objective)) throw DivergenceError(it, lr);
      const bool switched = topology && !same_pairings(next.components, current.components);
      if (next.objective > current.objective && !switched) {
        lr *= 0.5;
        continue;
      }
      w = std::move(candidate);
      current = std::move(next);
      record(it, switched);
      accepted = true;
      break;
    }
    if (!accepted) {
      result.stop_reason = "stalled";
      break;
    }
  }
  model.weights = std::move(w);
  return result;
}

}  // namespace

TrainResult train_binary(const Dataset& ds, const TrainConfig& config) {
  for (int t : ds.labels)
    if (t != 0 && t != 1) throw StructuralError("binary training needs labels in {0,1}");
  return train(ds, config, 1);
}

TrainResult train_multilabel(const Dataset& ds, const TrainConfig& config) {
  return train(ds, config, ds.num_classes());
}

}  // namespace toporeg
