#include "toporeg/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <thread>

#include "toporeg/errors.hpp"
#include "toporeg/rng.hpp"

namespace toporeg {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

PointSet blob_centers(std::size_t classes, std::size_t dim) {
  PointSet centers(dim);
  std::vector<double> c(dim, 0.0);
  for (std::size_t k = 0; k < classes; ++k) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) /
                         static_cast<double>(classes);
    c[0] = std::cos(angle);
    if (dim > 1) c[1] = std::sin(angle);
    centers.push_back(c);
  }
  return centers;
}

}  // namespace

Dataset generate(const GeneratorSpec& spec) {
  Dataset ds;
  const std::uint64_t points_seed = sub_seed(spec.seed, "generator");
  if (spec.name == "moons") {
    ds = make_moons(spec.n, spec.noise, points_seed);
  } else if (spec.name == "blobs") {
    if (spec.classes < 2 || spec.dim == 0) throw UsageError("blobs need >= 2 classes and dim >= 1");
    ds = make_blobs(spec.n, blob_centers(spec.classes, spec.dim), spec.spread, points_seed);
  } else {
    throw UsageError("unknown generator '" + spec.name + "' (expected moons or blobs)");
  }
  if (spec.flip > 0.0) ds = flip_labels(ds, spec.flip, sub_seed(spec.seed, "flip"));
  ds.provenance += " flip=" + format_double(spec.flip) + " base_seed=" + std::to_string(spec.seed);
  return ds;
}

void ExperimentConfig::validate() const {
  if (lambdas.empty() || sigmas.empty() || learning_rates.empty() || iterations.empty())
    throw UsageError("hyper-parameter grids must be non-empty");
  for (double l : lambdas)
    if (!(l >= 0.0)) throw UsageError("lambda must be non-negative");
  for (double s : sigmas)
    if (!(s > 0.0)) throw UsageError("sigma must be positive");
  for (double r : learning_rates)
    if (!(r > 0.0)) throw UsageError("learning rate must be positive");
  for (std::size_t it : iterations)
    if (it == 0) throw UsageError("iterations must be positive");
  if (discretization) {
    if (discretization->kind == Discretization::Kind::Grid && discretization->resolution < 2)
      throw UsageError("grid resolution must be at least 2");
    if (discretization->kind == Discretization::Kind::Knn && discretization->k < 1)
      throw UsageError("knn k must be at least 1");
  }
  if (n_outer < 2 || n_inner < 2) throw UsageError("need at least two folds");
  if (data_path.empty() && !generator) throw UsageError("no dataset: pass --data or a generator");
}

std::vector<Cell> ExperimentConfig::grid() const {
  std::vector<double> ls = method == Method::Klr ? std::vector<double>{0.0} : lambdas;
  std::vector<double> ss = sigmas;
  std::sort(ls.begin(), ls.end());
  ls.erase(std::unique(ls.begin(), ls.end()), ls.end());
  std::sort(ss.begin(), ss.end());
  ss.erase(std::unique(ss.begin(), ss.end()), ss.end());
  std::vector<Cell> cells;
  for (double l : ls)
    for (double s : ss)
      for (double r : learning_rates)
        for (std::size_t it : iterations) cells.push_back({l, s, r, it});
  return cells;
}

Discretization ExperimentConfig::discretization_for(std::size_t dim) const {
  if (discretization) return *discretization;
  Discretization d;
  if (dim > 2) {
    d.kind = Discretization::Kind::Knn;
    d.k = 3;
  } else {
    d.kind = Discretization::Kind::Grid;
    d.resolution = 300;
  }
  return d;
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  if (!cfg.data_path.empty()) j["data"] = cfg.data_path;
  if (cfg.generator) {
    const auto& g = *cfg.generator;
    j["generator"] = {{"name", g.name},   {"n", g.n},           {"noise", g.noise},
                      {"flip", g.flip},   {"classes", g.classes}, {"dim", g.dim},
                      {"spread", g.spread}, {"seed", g.seed}};
  }
  j["method"] = cfg.method == Method::Klr ? "klr" : "toporeg";
  j["lambda"] = cfg.lambdas;
  j["sigma"] = cfg.sigmas;
  j["learning_rate"] = cfg.learning_rates;
  j["iterations"] = cfg.iterations;
  j["grad_tol"] = cfg.grad_tol;
  if (cfg.discretization) {
    if (cfg.discretization->kind == Discretization::Kind::Grid)
      j["grid"] = cfg.discretization->resolution;
    else
      j["knn"] = cfg.discretization->k;
  }
  j["folds"] = {{"outer", cfg.n_outer}, {"inner", cfg.n_inner}};
  j["seed"] = cfg.seed;
  j["l2"] = cfg.l2;
  j["multilabel"] = cfg.multilabel;
  return j;
}

namespace {

template <typename T>
std::vector<T> scalar_or_list(const nlohmann::json& j) {
  if (j.is_array()) return j.get<std::vector<T>>();
  return {j.get<T>()};
}

}  // namespace

void merge_json(ExperimentConfig& cfg, const nlohmann::json& j) {
  try {
    if (j.contains("data")) cfg.data_path = j["data"].get<std::string>();
    if (j.contains("generator")) {
      GeneratorSpec g = cfg.generator.value_or(GeneratorSpec{});
      const auto& s = j["generator"];
      g.name = s.value("name", g.name);
      g.n = s.value("n", g.n);
      g.noise = s.value("noise", g.noise);
      g.flip = s.value("flip", g.flip);
      g.classes = s.value("classes", g.classes);
      g.dim = s.value("dim", g.dim);
      g.spread = s.value("spread", g.spread);
      g.seed = s.value("seed", g.seed);
      cfg.generator = g;
    }
    if (j.contains("method")) {
      const auto m = j["method"].get<std::string>();
      if (m == "toporeg")
        cfg.method = Method::TopoReg;
      else if (m == "klr")
        cfg.method = Method::Klr;
      else
        throw UsageError("unknown method '" + m + "'");
    }
    if (j.contains("lambda")) cfg.lambdas = scalar_or_list<double>(j["lambda"]);
    if (j.contains("sigma")) cfg.sigmas = scalar_or_list<double>(j["sigma"]);
    if (j.contains("learning_rate")) cfg.learning_rates = scalar_or_list<double>(j["learning_rate"]);
    if (j.contains("iterations")) cfg.iterations = scalar_or_list<std::size_t>(j["iterations"]);
    if (j.contains("grad_tol")) cfg.grad_tol = j["grad_tol"].get<double>();
    if (j.contains("grid"))
      cfg.discretization = Discretization{Discretization::Kind::Grid, j["grid"].get<std::size_t>(), 3};
    if (j.contains("knn"))
      cfg.discretization = Discretization{Discretization::Kind::Knn, 300, j["knn"].get<std::size_t>()};
    if (j.contains("folds")) {
      cfg.n_outer = j["folds"].value("outer", cfg.n_outer);
      cfg.n_inner = j["folds"].value("inner", cfg.n_inner);
    }
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("out")) cfg.out_dir = j["out"].get<std::string>();
    if (j.contains("l2")) cfg.l2 = j["l2"].get<double>();
    if (j.contains("threads")) cfg.threads = j["threads"].get<std::size_t>();
    if (j.contains("multilabel")) cfg.multilabel = j["multilabel"].get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("bad config: ") + e.what());
  }
}

Dataset load_dataset(const ExperimentConfig& cfg) {
  if (!cfg.data_path.empty()) return load_csv(cfg.data_path);
  if (cfg.generator) return generate(*cfg.generator);
  throw UsageError("no dataset: pass --data or a generator");
}

TrainResult fit(const Dataset& ds, const Cell& cell, const ExperimentConfig& cfg,
                const std::function<void(const IterationRecord&)>& observer) {
  TrainConfig tc;
  tc.lambda = cell.lambda;
  tc.sigma = cell.sigma;
  tc.learning_rate = cell.learning_rate;
  tc.max_iters = cell.iterations;
  tc.grad_tol = cfg.grad_tol;
  tc.discretization = cfg.discretization_for(ds.dim());
  tc.seed = sub_seed(cfg.seed, "train");
  tc.l2 = cfg.l2;
  tc.observer = observer;
  if (cfg.multilabel || ds.num_classes() > 2) return train_multilabel(ds, tc);
  return train_binary(ds, tc);
}

std::pair<double, double> mean_sd(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 0.0};
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

namespace {

struct NormalizedSplit {
  Dataset train;
  Dataset test;
};

NormalizedSplit normalize_split(const Dataset& train_raw, const Dataset& test_raw) {
  auto [points, transform] = normalize_unit_box(train_raw.points);
  NormalizedSplit out{train_raw, test_raw};
  out.train.points = std::move(points);
  out.test.points = transform.apply(test_raw.points);
  return out;
}

}  // namespace

CvReport run_cv(const Dataset& ds, const ExperimentConfig& cfg, PhaseTimes* times) {
  cfg.validate();
  ds.validate();
  const auto t_start = Clock::now();
  CvReport report;
  report.grid = cfg.grid();
  const FoldPlan plan = split_folds(ds, sub_seed(cfg.seed, "folds"), cfg.n_outer, cfg.n_inner);
  report.warnings = plan.warnings;

  const std::size_t n_cells = report.grid.size();
  const std::size_t n_outer = plan.n_outer;
  const std::size_t n_inner = n_cells > 1 ? plan.n_inner : 0;

  std::vector<NormalizedSplit> outer(n_outer);
  std::vector<std::vector<std::size_t>> inner_of(n_outer);
  for (std::size_t o = 0; o < n_outer; ++o) {
    const auto train_idx = plan.train_indices(o);
    const auto test_idx = plan.test_indices(o);
    outer[o] = normalize_split(ds.subset(train_idx), ds.subset(test_idx));
    if (n_inner > 0) inner_of[o] = inner_assignments(plan, ds, o);
  }

  // Inner selection: one task per (outer, inner, cell).
  const auto t_inner = Clock::now();
  std::vector<double> inner_error(n_outer * n_inner * n_cells, 0.0);
  std::vector<std::string> inner_warnings(inner_error.size());
  parallel_for(inner_error.size(), cfg.threads, [&](std::size_t task) {
    const std::size_t c = task % n_cells;
    const std::size_t i = (task / n_cells) % n_inner;
    const std::size_t o = task / (n_cells * n_inner);
    std::vector<std::size_t> fit_idx, val_idx;
    for (std::size_t r = 0; r < inner_of[o].size(); ++r)
      (inner_of[o][r] == i ? val_idx : fit_idx).push_back(r);
    const Dataset fit_set = outer[o].train.subset(fit_idx);
    const Dataset val_set = outer[o].train.subset(val_idx);
    try {
      const TrainResult r = fit(fit_set, report.grid[c], cfg);
      inner_error[task] = evaluate(r.model, val_set);
    } catch (const DivergenceError& e) {
      inner_error[task] = std::numeric_limits<double>::infinity();
      inner_warnings[task] = "outer " + std::to_string(o) + " inner " + std::to_string(i) +
                             " cell " + std::to_string(c) + ": " + e.what();
    }
  });
  for (auto& w : inner_warnings)
    if (!w.empty()) report.warnings.push_back(std::move(w));
  if (times) (*times)["inner_selection"] += seconds_since(t_inner);

  report.folds.resize(n_outer);
  for (std::size_t o = 0; o < n_outer; ++o) {
    FoldResult& fr = report.folds[o];
    fr.fold = o;
    fr.train_size = outer[o].train.size();
    fr.test_size = outer[o].test.size();
    std::size_t best = 0;
    if (n_inner > 0) {
      fr.inner_errors.resize(n_cells);
      for (std::size_t c = 0; c < n_cells; ++c) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n_inner; ++i) sum += inner_error[(o * n_inner + i) * n_cells + c];
        fr.inner_errors[c] = sum / static_cast<double>(n_inner);
      }
      // Grid is sorted by (lambda, sigma, ...), so the first minimum wins ties.
      for (std::size_t c = 1; c < n_cells; ++c)
        if (fr.inner_errors[c] < fr.inner_errors[best]) best = c;
    }
    fr.selected = report.grid[best];
  }

  const auto t_outer = Clock::now();
  parallel_for(n_outer, cfg.threads, [&](std::size_t o) {
    FoldResult& fr = report.folds[o];
    const TrainResult r = fit(outer[o].train, fr.selected, cfg);
    fr.test_error = evaluate(r.model, outer[o].test);
    const Graph g = build_discretization(cfg.discretization_for(ds.dim()), r.model.train_points);
    fr.components = boundary_component_count(r.model, g);
  });
  if (times) (*times)["outer_fits"] += seconds_since(t_outer);

  std::vector<double> errors;
  double comps = 0.0;
  for (const auto& fr : report.folds) {
    errors.push_back(fr.test_error);
    comps += static_cast<double>(fr.components);
  }
  std::tie(report.mean_error, report.sd_error) = mean_sd(errors);
  report.mean_components = comps / static_cast<double>(n_outer);
  if (times) (*times)["total"] += seconds_since(t_start);
  return report;
}

namespace {

nlohmann::json to_json(const Cell& c) {
  return {{"lambda", c.lambda},
          {"sigma", c.sigma},
          {"learning_rate", c.learning_rate},
          {"iterations", c.iterations}};
}

}  // namespace

nlohmann::json to_json(const CvReport& report) {
  nlohmann::json j;
  j["grid"] = nlohmann::json::array();
  for (const auto& c : report.grid) j["grid"].push_back(to_json(c));
  j["folds"] = nlohmann::json::array();
  for (const auto& f : report.folds) {
    nlohmann::json inner = nlohmann::json::array();
    for (double e : f.inner_errors) inner.push_back(std::isfinite(e) ? nlohmann::json(e) : nlohmann::json());
    j["folds"].push_back({{"fold", f.fold},
                          {"test_error", f.test_error},
                          {"selected", to_json(f.selected)},
                          {"inner_errors", inner},
                          {"components", f.components},
                          {"train_size", f.train_size},
                          {"test_size", f.test_size}});
  }
  j["mean_error"] = report.mean_error;
  j["sd_error"] = report.sd_error;
  j["mean_components"] = report.mean_components;
  j["warnings"] = report.warnings;
  return j;
}

}  // namespace toporeg
