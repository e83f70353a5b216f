#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "toporeg/commands.hpp"
#include "toporeg/errors.hpp"
#include "toporeg/harness.hpp"
#include "toporeg/model_io.hpp"
#include "toporeg/rng.hpp"

using namespace toporeg;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "toporeg_harness" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(TOPOREG_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.generator = GeneratorSpec{"moons", 120, 0.15, 0.1, 2, 2, 0.3, 4};
  cfg.lambdas = {0.5};
  cfg.sigmas = {0.15};
  cfg.learning_rates = {0.1};
  cfg.iterations = {30};
  cfg.discretization = Discretization{Discretization::Kind::Grid, 20, 3};
  cfg.seed = 13;
  return cfg;
}

}  // namespace

TEST_SUITE_BEGIN("harness");

TEST_CASE("model json round trip preserves predictions exactly") {
  Dataset ds = make_moons(40, 0.1, 2);
  auto [points, transform] = normalize_unit_box(ds.points);
  ds.points = points;
  TrainConfig tc;
  tc.sigma = 0.2;
  tc.learning_rate = 0.3;
  tc.max_iters = 25;
  for (bool multi : {false, true}) {
    TrainResult r = multi ? train_multilabel(ds, tc) : train_binary(ds, tc);
    r.model.transform = transform;
    const fs::path p = scratch("model") / "model.json";
    save_model(r.model, p);
    const KernelModel back = load_model(p);
    CHECK(back.weights == r.model.weights);
    CHECK(back.train_points.data() == r.model.train_points.data());
    CHECK(back.sigma == r.model.sigma);
    CHECK(back.transform.ranges.size() == 2);
    CHECK(evaluate(back, ds) == evaluate(r.model, ds));
    const Graph g = build_grid_graph(GridSpec::unit(17, 2));
    if (!multi) CHECK(shifted_field(back, g).values() == shifted_field(r.model, g).values());
  }
  const fs::path bad = scratch("model") / "bad.json";
  std::ofstream(bad) << "{\"sigma\": 1}";
  CHECK_THROWS(load_model(bad));
}

TEST_CASE("config grid and json merge") {
  ExperimentConfig cfg;
  cfg.lambdas = {10, 0.1, 1, 0.1};
  cfg.sigmas = {0.3, 0.1};
  const auto grid = cfg.grid();
  REQUIRE(grid.size() == 6);
  CHECK(grid[0] == Cell{0.1, 0.1, 0.01, 300});
  CHECK(grid[1] == Cell{0.1, 0.3, 0.01, 300});
  CHECK(grid[5] == Cell{10, 0.3, 0.01, 300});

  cfg.method = Method::Klr;
  CHECK(cfg.grid().size() == 2);
  CHECK(cfg.grid()[0].lambda == 0.0);

  ExperimentConfig merged;
  merge_json(merged, nlohmann::json{{"lambda", 2.0}, {"knn", 4}, {"seed", 9}});
  CHECK(merged.lambdas == std::vector<double>{2.0});
  CHECK(merged.sigmas == std::vector<double>{0.1});
  REQUIRE(merged.discretization);
  CHECK(merged.discretization->kind == Discretization::Kind::Knn);
  CHECK(merged.discretization->k == 4);
  CHECK(merged.seed == 9);

  ExperimentConfig again;
  merge_json(again, to_json(merged));
  CHECK(to_json(again) == to_json(merged));

  CHECK(ExperimentConfig{}.discretization_for(2).kind == Discretization::Kind::Grid);
  CHECK(ExperimentConfig{}.discretization_for(2).resolution == 300);
  CHECK(ExperimentConfig{}.discretization_for(5).kind == Discretization::Kind::Knn);

  ExperimentConfig empty;
  empty.sigmas.clear();
  CHECK_THROWS_AS(empty.validate(), UsageError);
  ExperimentConfig bad_grid;
  bad_grid.discretization = Discretization{Discretization::Kind::Grid, 1, 3};
  CHECK_THROWS_AS(bad_grid.validate(), UsageError);
}

TEST_CASE("mean_sd and parallel_for") {
  const auto [m, s] = mean_sd({1.0, 2.0, 3.0, 4.0});
  CHECK(m == 2.5);
  CHECK(s == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-15));
  CHECK(mean_sd({7.0}).second == 0.0);

  std::vector<int> hits(100, 0);
  parallel_for(100, 4, [&](std::size_t i) { hits[i] += 1; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                    if (i == 5) throw StructuralError("boom");
                  }),
                  StructuralError);
}

TEST_CASE("one-cell cv equals six plain train/test runs") {
  const ExperimentConfig cfg = small_config();
  const Dataset ds = load_dataset(cfg);
  const CvReport report = run_cv(ds, cfg);
  REQUIRE(report.folds.size() == 6);

  const FoldPlan plan = split_folds(ds, sub_seed(cfg.seed, "folds"));
  double sum = 0.0;
  for (std::size_t o = 0; o < 6; ++o) {
    Dataset train = ds.subset(plan.train_indices(o));
    Dataset test = ds.subset(plan.test_indices(o));
    auto [points, t] = normalize_unit_box(train.points);
    train.points = points;
    test.points = t.apply(test.points);
    TrainConfig tc;
    tc.lambda = 0.5;
    tc.sigma = 0.15;
    tc.learning_rate = 0.1;
    tc.max_iters = 30;
    tc.discretization = *cfg.discretization;
    const double err = evaluate(train_binary(train, tc).model, test);
    CHECK(report.folds[o].test_error == err);
    CHECK(report.folds[o].inner_errors.empty());
    sum += err;
  }
  CHECK(report.mean_error == sum / 6.0);
}

TEST_CASE("cv is deterministic and independent of the worker count") {
  ExperimentConfig cfg = small_config();
  cfg.lambdas = {0.0, 1.0};
  cfg.sigmas = {0.1, 0.2};
  cfg.iterations = {15};
  const Dataset ds = load_dataset(cfg);
  const auto a = to_json(run_cv(ds, cfg));
  cfg.threads = 4;
  const auto b = to_json(run_cv(ds, cfg));
  CHECK(a.dump() == b.dump());
  CHECK(a["folds"][0]["inner_errors"].size() == 4);
}

TEST_CASE("selection ties prefer the smaller lambda") {
  // far-apart blobs: a single boundary component, so lambda has no effect
  ExperimentConfig cfg;
  cfg.generator = GeneratorSpec{"blobs", 60, 0.0, 0.0, 2, 2, 0.05, 3};
  cfg.lambdas = {5.0, 1.0};
  cfg.sigmas = {0.3};
  cfg.learning_rates = {0.5};
  cfg.iterations = {20};
  cfg.discretization = Discretization{Discretization::Kind::Grid, 15, 3};
  const CvReport report = run_cv(load_dataset(cfg), cfg);
  for (const auto& f : report.folds) {
    CHECK(f.inner_errors[0] == f.inner_errors[1]);
    CHECK(f.selected.lambda == 1.0);
  }
}

TEST_CASE("test-fold data never reaches selection") {
  ExperimentConfig cfg = small_config();
  cfg.lambdas = {0.0, 2.0};
  cfg.sigmas = {0.08, 0.3};
  cfg.iterations = {15};
  const Dataset ds = load_dataset(cfg);
  const CvReport base = run_cv(ds, cfg);

  // Scramble the features of outer fold 0 only. Labels stay put because the
  // stratified split itself depends on them.
  const FoldPlan plan = split_folds(ds, sub_seed(cfg.seed, "folds"));
  std::vector<double> coords = ds.points.data();
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (std::size_t i : plan.test_indices(0))
    for (std::size_t d = 0; d < ds.dim(); ++d) coords[i * ds.dim() + d] = u(rng);
  Dataset canary = ds;
  canary.points = PointSet(ds.dim(), std::move(coords));
  const CvReport moved = run_cv(canary, cfg);
  CHECK(moved.folds[0].selected == base.folds[0].selected);
  CHECK(moved.folds[0].inner_errors == base.folds[0].inner_errors);
}

TEST_CASE("generator specs") {
  GeneratorSpec spec{"moons", 1000, 0.1, 0.2, 2, 2, 0.3, 7};
  const Dataset flipped = generate(spec);
  spec.flip = 0.0;
  const Dataset clean = generate(spec);
  std::size_t diff = 0;
  for (std::size_t i = 0; i < clean.size(); ++i) diff += clean.labels[i] != flipped.labels[i];
  CHECK(diff == 200);
  CHECK(clean.points.data() == flipped.points.data());
  CHECK(generate(GeneratorSpec{"blobs", 90, 0, 0, 3, 4, 0.3, 1}).dim() == 4);
  CHECK_THROWS_AS(generate(GeneratorSpec{"spirals"}), UsageError);
}

TEST_CASE("cli synth") {
  const fs::path dir = scratch("synth");
  CHECK(cli("synth --generator moons --n 1000 --noise 0.1 --seed 7 --out " +
            (dir / "m.csv").string()) == 0);
  const Dataset ds = load_csv(dir / "m.csv");
  CHECK(ds.size() == 1000);
  CHECK(lines(dir / "m.csv")[0][0] == '#');

  CHECK(cli("synth --generator moons --n 1000 --noise 0.1 --seed 7 --flip 0.2 --out " +
            (dir / "f.csv").string()) == 0);
  const Dataset f = load_csv(dir / "f.csv");
  std::size_t diff = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) diff += ds.labels[i] != f.labels[i];
  CHECK(diff == 200);

  CHECK(cli("synth --generator spirals --out " + (dir / "x.csv").string()) == 2);
  CHECK(cli("synth --n 10") == 2);
  CHECK(cli("frobnicate") == 2);
}

TEST_CASE("cli train") {
  const fs::path dir = scratch("train");
  const std::string data = (dir / "d.csv").string();
  REQUIRE(cli("synth --generator moons --n 150 --noise 0.1 --flip 0.1 --seed 3 --out " + data) ==
          0);

  const std::string base = "train --data " + data + " --sigma 0.15 --lr 0.1 --iters 25 --grid 20 ";
  CHECK(cli(base + "--lambda 0 --out " + (dir / "klr").string()) == 0);
  const auto timing = read_json(dir / "klr" / "timing.json");
  CHECK(timing["train_topology"].get<double>() == 0.0);
  CHECK(fs::exists(dir / "klr" / "model.json"));

  CHECK(cli(base + "--lambda 2 --out " + (dir / "a").string()) == 0);
  CHECK(cli(base + "--lambda 2 --out " + (dir / "b").string()) == 0);
  const auto report = read_json(dir / "a" / "report.json");
  CHECK(report["status"] == "ok");
  CHECK(report["descent_holds"] == true);
  CHECK(report["trace"].size() >= 2);
  for (const char* name : {"model.json", "report.json"})
    CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));

  CHECK(cli("train --data " + (dir / "missing.csv").string() + " --out " + dir.string()) == 4);
  CHECK(cli(base + "--lambda 1,2 --out " + dir.string()) == 2);
  CHECK(cli(base + "--grid 10 --knn 3") == 2);

  // the ridge term overflows and training reports divergence
  CHECK(cli("train --data " + data + " --lambda 0 --lr 1e300 --l2 1 --out " +
            (dir / "div").string()) == 3);
  CHECK(read_json(dir / "div" / "report.json")["status"] == "diverged");
}

TEST_CASE("cli cv") {
  const fs::path dir = scratch("cv");
  const std::string data = (dir / "d.csv").string();
  REQUIRE(cli("synth --generator moons --n 90 --noise 0.1 --seed 5 --out " + data) == 0);
  nlohmann::json manifest{{"data", data},     {"lambda", {0.0, 1.0}}, {"sigma", 0.2},
                          {"learning_rate", 0.1}, {"iterations", 10},  {"grid", 15},
                          {"seed", 2}};
  write_json(manifest, dir / "cfg.json");
  for (const char* out : {"a", "b"})
    REQUIRE(cli("cv --config " + (dir / "cfg.json").string() + " --threads 2 --out " +
                (dir / out).string()) == 0);
  CHECK(slurp(dir / "a" / "report.json") == slurp(dir / "b" / "report.json"));
  const auto report = read_json(dir / "a" / "report.json");
  REQUIRE(report["folds"].size() == 6);
  std::vector<double> errors;
  for (const auto& f : report["folds"]) errors.push_back(f["test_error"].get<double>());
  CHECK(report["mean_error"].get<double>() == mean_sd(errors).first);
  CHECK(report["sd_error"].get<double>() == mean_sd(errors).second);

  // flags override the manifest
  REQUIRE(cli("cv --config " + (dir / "cfg.json").string() + " --lambda 3 --out " +
              (dir / "c").string()) == 0);
  const auto c = read_json(dir / "c" / "report.json");
  CHECK(c["grid"].size() == 1);
  CHECK(c["grid"][0]["lambda"].get<double>() == 3.0);
}

TEST_CASE("cli dump-boundary") {
  const fs::path dir = scratch("dump_boundary");
  KernelModel m;
  m.train_points = PointSet(2, {0.2, 0.2, 0.8, 0.8});
  m.sigma = 0.3;
  m.weights = Eigen::MatrixXd::Zero(2, 1);
  m.transform.ranges = {{0.0, 1.0}, {0.0, 1.0}};
  save_model(m, dir / "flat.json");
  REQUIRE(cli("dump-boundary --model " + (dir / "flat.json").string() + " --grid 7 --out " +
              dir.string()) == 0);
  auto rows = lines(dir / "boundary.csv");
  REQUIRE(rows.size() == 50);
  CHECK(rows[0] == "x0,x1,value");
  for (std::size_t i = 1; i < rows.size(); ++i)
    CHECK(rows[i].substr(rows[i].rfind(',') + 1) == "0");

  // sign changes along one grid row match the component count on that slice
  m.weights(0, 0) = 3.0;
  m.weights(1, 0) = -3.0;
  save_model(m, dir / "tilted.json");
  REQUIRE(cli("dump-boundary --model " + (dir / "tilted.json").string() + " --grid 9 --out " +
              dir.string()) == 0);
  const auto grid_rows = lines(dir / "boundary.csv");
  {
    // middle row of the grid as a 1-D field: x1 and value columns
    std::ofstream out(dir / "row.csv");
    out << "x0,value\n";
    for (std::size_t i = 1 + 9 * 4; i < 1 + 9 * 5; ++i) {
      const auto& r = grid_rows[i];
      out << r.substr(r.find(',') + 1) << '\n';
    }
  }
  auto slice = lines(dir / "row.csv");
  std::size_t changes = 0;
  double prev = 0.0;
  for (std::size_t i = 1; i < slice.size(); ++i) {
    const double v = std::stod(slice[i].substr(slice[i].rfind(',') + 1));
    if (i > 1) changes += (prev < 0) != (v < 0);
    prev = v;
  }
  REQUIRE(cli("dump-persistence --field " + (dir / "row.csv").string() + " --knn 1 --out " +
              dir.string()) == 0);
  CHECK(lines(dir / "persistence.csv").size() - 1 == changes);
  CHECK(changes >= 1);
}

TEST_CASE("cli dump-persistence") {
  const fs::path dir = scratch("dump_persistence");
  std::ofstream(dir / "path.csv") << "x0,value\n0,-1.0\n1,0.21\n2,-0.55\n3,0.9\n4,-2.0\n5,1.5\n";
  REQUIRE(cli("dump-persistence --field " + (dir / "path.csv").string() + " --knn 1 --out " +
              dir.string()) == 0);
  const auto rows = lines(dir / "persistence.csv");
  REQUIRE(rows.size() == 6);
  CHECK(rows[0] == "birth_vertex,death_vertex,birth_value,death_value,essential");
  CHECK(std::count_if(rows.begin(), rows.end(), [](const std::string& r) {
          return r.back() == '1';
        }) == 1);
  CHECK(std::find(rows.begin(), rows.end(), "4,5,-2,1.5,1") != rows.end());
  CHECK(std::find(rows.begin(), rows.end(), "2,1,-0.55,0.21,0") != rows.end());
  const auto pairs = lines(dir / "pairs.csv");
  CHECK(pairs.size() == 4);  // header, two finite pairs of f, one essential

  KernelModel m;
  m.train_points = PointSet(2, {0.5, 0.5});
  m.sigma = 0.3;
  m.weights = Eigen::MatrixXd::Constant(1, 1, 4.0);
  m.transform.ranges = {{0.0, 1.0}, {0.0, 1.0}};
  save_model(m, dir / "positive.json");
  REQUIRE(cli("dump-persistence --model " + (dir / "positive.json").string() +
              " --grid 12 --out " + dir.string()) == 0);
  CHECK(lines(dir / "persistence.csv").size() == 1);

  CHECK(cli("dump-persistence --out " + dir.string()) == 2);
  CHECK(cli("dump-persistence --model " + (dir / "nope.json").string() + " --out " +
            dir.string()) == 4);
}

TEST_SUITE_END();
