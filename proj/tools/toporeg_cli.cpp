// toporeg: synthesize data, train and cross-validate topologically
// regularized kernel classifiers, and dump boundary diagnostics.

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "toporeg/commands.hpp"
#include "toporeg/errors.hpp"
#include "toporeg/model_io.hpp"

namespace {

using namespace toporeg;

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* flag) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::istringstream is(item);
    T v{};
    if (!(is >> v) || !(is >> std::ws).eof())
      throw UsageError(std::string("bad value '") + item + "' for " + flag);
    out.push_back(v);
  }
  if (out.empty()) throw UsageError(std::string("empty list for ") + flag);
  return out;
}

// Flags shared by train and cv. Strings stay empty unless given, so the
// config file only gets overridden by flags that were actually passed.
struct ExperimentFlags {
  std::string config, data, method, lambda, sigma, lr, iters, out;
  std::size_t grid = 0, knn = 0, threads = 0;
  std::uint64_t seed = 0;
  double l2 = -1.0;
  bool multilabel = false;
  CLI::Option* seed_opt = nullptr;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON experiment manifest");
    app->add_option("--data", data, "dataset CSV");
    app->add_option("--method", method, "toporeg or klr")->check(CLI::IsMember({"toporeg", "klr"}));
    app->add_option("--lambda", lambda, "topological weight(s), comma separated");
    app->add_option("--sigma", sigma, "kernel width(s), comma separated");
    app->add_option("--lr", lr, "learning rate(s), comma separated");
    app->add_option("--iters", iters, "iteration budget(s), comma separated");
    auto* g = app->add_option("--grid", grid, "grid resolution per axis");
    auto* k = app->add_option("--knn", knn, "KNN graph with k neighbours");
    g->excludes(k);
    seed_opt = app->add_option("--seed", seed, "experiment seed");
    app->add_option("--out", out, "output directory");
    app->add_option("--threads", threads, "worker threads");
    app->add_option("--l2", l2, "ridge weight for the klr baseline");
    app->add_flag("--multilabel", multilabel, "use the multinomial model for two classes");
  }

  ExperimentConfig resolve() const {
    ExperimentConfig cfg;
    if (!config.empty()) merge_json(cfg, read_json(config));
    if (!data.empty()) cfg.data_path = data;
    if (!method.empty()) cfg.method = method == "klr" ? Method::Klr : Method::TopoReg;
    if (!lambda.empty()) cfg.lambdas = parse_list<double>(lambda, "--lambda");
    if (!sigma.empty()) cfg.sigmas = parse_list<double>(sigma, "--sigma");
    if (!lr.empty()) cfg.learning_rates = parse_list<double>(lr, "--lr");
    if (!iters.empty()) cfg.iterations = parse_list<std::size_t>(iters, "--iters");
    if (grid) cfg.discretization = Discretization{Discretization::Kind::Grid, grid, 3};
    if (knn) cfg.discretization = Discretization{Discretization::Kind::Knn, 300, knn};
    if (seed_opt->count()) cfg.seed = seed;
    if (!out.empty()) cfg.out_dir = out;
    if (threads) cfg.threads = threads;
    if (l2 >= 0.0) cfg.l2 = l2;
    if (multilabel) cfg.multilabel = true;
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Topologically regularized kernel logistic regression"};
  app.require_subcommand(1);

  GeneratorSpec gen;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset CSV");
  synth->add_option("--generator", gen.name, "moons or blobs")->required();
  synth->add_option("--n", gen.n, "number of points");
  synth->add_option("--noise", gen.noise, "moons jitter standard deviation");
  synth->add_option("--flip", gen.flip, "fraction of labels to flip");
  synth->add_option("--classes", gen.classes, "blobs: number of classes");
  synth->add_option("--dim", gen.dim, "blobs: dimension");
  synth->add_option("--spread", gen.spread, "blobs: standard deviation");
  synth->add_option("--seed", gen.seed, "generator seed");
  synth->add_option("--out", synth_out, "output CSV path")->required();

  ExperimentFlags train_flags, cv_flags;
  auto* train = app.add_subcommand("train", "train one configuration on a whole dataset");
  train_flags.attach(train);
  auto* cv = app.add_subcommand("cv", "nested cross-validation over a hyper-parameter grid");
  cv_flags.attach(cv);

  std::string boundary_model, boundary_out = ".";
  std::size_t boundary_grid = 300;
  auto* dump_boundary = app.add_subcommand("dump-boundary", "sample the decision field on a grid");
  dump_boundary->add_option("--model", boundary_model, "model.json")->required();
  dump_boundary->add_option("--grid", boundary_grid, "grid resolution per axis");
  dump_boundary->add_option("--out", boundary_out, "output directory");

  std::string pers_model, pers_field, pers_out = ".";
  std::size_t pers_grid = 0, pers_knn = 0;
  auto* dump_pers = app.add_subcommand("dump-persistence", "dump boundary components and pairs");
  dump_pers->add_option("--model", pers_model, "model.json");
  dump_pers->add_option("--field", pers_field, "CSV of coordinates and a value column");
  auto* pg = dump_pers->add_option("--grid", pers_grid, "grid resolution per axis");
  auto* pk = dump_pers->add_option("--knn", pers_knn, "KNN graph with k neighbours");
  pg->excludes(pk);
  dump_pers->add_option("--out", pers_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  return run_guarded([&]() -> int {
    if (*synth) return cmd_synth(gen, synth_out);
    if (*train) return cmd_train(train_flags.resolve());
    if (*cv) return cmd_cv(cv_flags.resolve());
    if (*dump_boundary) return cmd_dump_boundary(boundary_model, boundary_grid, boundary_out);
    DumpPersistenceOptions opts;
    if (!pers_model.empty()) opts.model = pers_model;
    if (!pers_field.empty()) opts.field = pers_field;
    if (pers_knn) {
      opts.discretization = {Discretization::Kind::Knn, 300, pers_knn};
    } else if (pers_grid) {
      opts.discretization = {Discretization::Kind::Grid, pers_grid, 3};
    } else if (opts.field) {
      opts.discretization = {Discretization::Kind::Knn, 300, 1};
    }
    opts.out_dir = pers_out;
    return cmd_dump_persistence(opts);
  });
}
