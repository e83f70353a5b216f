#include "toporeg/commands.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>

#include "toporeg/errors.hpp"
#include "toporeg/model_io.hpp"

namespace toporeg {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

nlohmann::json times_json(const PhaseTimes& times) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : times) j[k] = v;
  return j;
}

nlohmann::json trace_json(const std::vector<IterationRecord>& trace) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : trace)
    rows.push_back({{"iteration", r.iteration},
                    {"objective", r.objective},
                    {"data_loss", r.data_loss},
                    {"topo_penalty", r.topo_penalty},
                    {"learning_rate", r.learning_rate},
                    {"grad_norm", r.grad_norm},
                    {"components", r.components},
                    {"pairing_switch", r.pairing_switch}});
  return rows;
}

/// Objective never rises between accepted iterates except at pairing switches.
bool descent_holds(const std::vector<IterationRecord>& trace) {
  for (std::size_t i = 1; i < trace.size(); ++i)
    if (trace[i].objective > trace[i - 1].objective && !trace[i].pairing_switch) return false;
  return true;
}

}  // namespace

int run_guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

int cmd_synth(const GeneratorSpec& spec, const fs::path& out) {
  const Dataset ds = generate(spec);
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  save_csv(ds, out);
  return kExitOk;
}

int cmd_train(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto cells = cfg.grid();
  if (cells.size() != 1) throw UsageError("train takes a single lambda/sigma/learning-rate/iterations");
  const Cell cell = cells.front();
  const fs::path out_dir = cfg.out_dir;
  ensure_dir(out_dir);

  PhaseTimes times;
  auto t0 = Clock::now();
  const Dataset raw = load_dataset(cfg);
  raw.validate();
  auto [points, transform] = normalize_unit_box(raw.points);
  Dataset ds = raw;
  ds.points = std::move(points);
  times["load"] = seconds_since(t0);

  nlohmann::json report;
  report["command"] = "train";
  report["config"] = to_json(cfg);
  report["dataset"] = {{"name", raw.name}, {"size", raw.size()}, {"dim", raw.dim()},
                       {"provenance", raw.provenance}};
  std::vector<IterationRecord> trace;

  t0 = Clock::now();
  TrainResult result;
  try {
    result = fit(ds, cell, cfg, [&](const IterationRecord& r) { trace.push_back(r); });
  } catch (const DivergenceError& e) {
    report["status"] = "diverged";
    report["error"] = e.what();
    report["trace"] = trace_json(trace);
    write_json(report, out_dir / "report.json");
    throw;
  }
  times["train"] = seconds_since(t0);
  times["train_topology"] = result.topology_seconds;

  result.model.transform = transform;
  t0 = Clock::now();
  const Graph g = build_discretization(cfg.discretization_for(ds.dim()), ds.points);
  const std::size_t components = boundary_component_count(result.model, g);
  times["final_components"] = seconds_since(t0);

  report["status"] = "ok";
  report["stop_reason"] = result.stop_reason;
  report["trace"] = trace_json(result.trace);
  report["descent_holds"] = descent_holds(result.trace);
  report["pairing_switches"] = std::count_if(result.trace.begin(), result.trace.end(),
                                             [](const IterationRecord& r) { return r.pairing_switch; });
  report["final_objective"] = result.trace.back().objective;
  report["train_error"] = evaluate(result.model, ds);
  report["final_components"] = components;

  save_model(result.model, out_dir / "model.json");
  write_json(report, out_dir / "report.json");
  write_json(times_json(times), out_dir / "timing.json");
  return kExitOk;
}

int cmd_cv(const ExperimentConfig& cfg) {
  cfg.validate();
  const fs::path out_dir = cfg.out_dir;
  ensure_dir(out_dir);
  PhaseTimes times;
  const Dataset ds = load_dataset(cfg);
  const CvReport report = run_cv(ds, cfg, &times);
  nlohmann::json j = to_json(report);
  j["command"] = "cv";
  j["config"] = to_json(cfg);
  write_json(j, out_dir / "report.json");
  write_json(times_json(times), out_dir / "timing.json");
  return kExitOk;
}

int cmd_dump_boundary(const fs::path& model_path, std::size_t resolution, const fs::path& out_dir) {
  const KernelModel model = load_model(model_path);
  const std::size_t dim = model.train_points.dim();
  const Graph g = build_grid_graph(GridSpec::unit(resolution, dim));
  ensure_dir(out_dir);
  auto out = open_out(out_dir / "boundary.csv");

  for (std::size_t a = 0; a < dim; ++a) out << 'x' << a << ',';
  std::vector<std::vector<double>> columns;
  if (model.multilabel()) {
    const PsiFields psi = psi_fields(model, g);
    for (std::size_t k = 0; k < psi.fields.size(); ++k) {
      out << "psi_" << k << (k + 1 < psi.fields.size() ? "," : "\n");
      columns.push_back(psi.fields[k].values());
    }
  } else {
    out << "value\n";
    columns.push_back(shifted_field(model, g).values());
  }
  for (VertexIndex v = 0; v < g.vertex_count(); ++v) {
    for (double x : g.positions()[v]) out << format_double(x) << ',';
    for (std::size_t c = 0; c < columns.size(); ++c)
      out << format_double(columns[c][v]) << (c + 1 < columns.size() ? "," : "\n");
  }
  if (!out) throw IoError("failed writing boundary.csv");
  return kExitOk;
}

void write_component_csv(const ComponentSet& set, const fs::path& path) {
  auto out = open_out(path);
  out << "origin,birth_vertex,death_vertex,birth_value,death_value,robustness,weak_vertex,excluded\n";
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& c = set.components[i];
    out << origin_name(c.origin) << ',' << c.pair.birth_vertex << ',' << c.pair.death_vertex << ','
        << format_double(c.pair.birth_value) << ',' << format_double(c.pair.death_value) << ','
        << format_double(c.robustness) << ',' << c.weak_vertex << ','
        << (set.excluded_index == i ? 1 : 0) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

void write_persistence_csv(const ComponentSet& set, const fs::path& path) {
  auto out = open_out(path);
  out << "birth_vertex,death_vertex,birth_value,death_value,essential\n";
  for (const auto& c : set.components)
    out << c.pair.birth_vertex << ',' << c.pair.death_vertex << ','
        << format_double(c.pair.birth_value) << ',' << format_double(c.pair.death_value) << ','
        << (c.origin == ComponentOrigin::Essential ? 1 : 0) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

void write_pairs_csv(const PersistenceResult& result, const ScalarField& field, const fs::path& path) {
  auto out = open_out(path);
  out << "birth_vertex,death_vertex,birth_value,death_value,essential\n";
  for (const auto& p : result.pairs)
    out << p.birth_vertex << ',' << p.death_vertex << ',' << format_double(p.birth_value) << ','
        << format_double(p.death_value) << ",0\n";
  for (std::size_t i = 0; i < result.essential_roots.size(); ++i) {
    const VertexIndex lo = result.essential_roots[i];
    const VertexIndex hi = result.component_max[i];
    out << lo << ',' << hi << ',' << format_double(field[lo]) << ',' << format_double(field[hi])
        << ",1\n";
  }
  if (!out) throw IoError("failed writing " + path.string());
}

namespace {

struct LoadedField {
  Graph graph;
  ScalarField field;
};

LoadedField load_field(const fs::path& path, const Discretization& disc) {
  // Same layout as a dataset CSV, with `value` in place of `label`.
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0, columns = 0;
  PointSet points;
  std::vector<double> values, row;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (std::size_t comma; (comma = line.find(',', start)) != std::string::npos; start = comma + 1)
      cells.push_back(line.substr(start, comma - start));
    cells.push_back(line.substr(start));
    if (columns == 0) {
      if (cells.size() < 2 || cells.back().rfind("value", 0) != 0)
        throw ParseError("field header must end with a 'value' column", line_no);
      columns = cells.size();
      points = PointSet(columns - 1);
      continue;
    }
    if (cells.size() != columns) throw ParseError("ragged field row", line_no);
    row.clear();
    for (const auto& c : cells) {
      std::size_t used = 0;
      double x = 0;
      try {
        x = std::stod(c, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || !std::isfinite(x)) throw ParseError("non-numeric cell '" + c + "'", line_no);
      row.push_back(x);
    }
    values.push_back(row.back());
    row.pop_back();
    points.push_back(row);
  }
  if (columns == 0) throw ParseError("missing header row", 0);

  if (disc.kind == Discretization::Kind::Knn) return {build_knn_graph(points, disc.k), ScalarField(values)};
  Graph g = build_grid_graph(GridSpec::unit(disc.resolution, points.dim()));
  if (g.vertex_count() != values.size())
    throw UsageError("field has " + std::to_string(values.size()) + " rows but the grid has " +
                     std::to_string(g.vertex_count()) + " vertices");
  return {std::move(g), ScalarField(values)};
}

}  // namespace

int cmd_dump_persistence(const DumpPersistenceOptions& options) {
  if (options.model.has_value() == options.field.has_value())
    throw UsageError("dump-persistence takes exactly one of --model or --field");
  ensure_dir(options.out_dir);

  std::vector<std::pair<std::string, ScalarField>> fields;
  Graph graph;
  if (options.field) {
    LoadedField lf = load_field(*options.field, options.discretization);
    graph = std::move(lf.graph);
    fields.emplace_back("", std::move(lf.field));
  } else {
    const KernelModel model = load_model(*options.model);
    graph = build_discretization(options.discretization, model.train_points);
    if (model.multilabel()) {
      PsiFields psi = psi_fields(model, graph);
      for (std::size_t k = 0; k < psi.fields.size(); ++k)
        fields.emplace_back("_class" + std::to_string(k), std::move(psi.fields[k]));
    } else {
      fields.emplace_back("", shifted_field(model, graph));
    }
  }

  for (const auto& [suffix, field] : fields) {
    const ComponentSet set = boundary_components(graph, field);
    write_persistence_csv(set, options.out_dir / ("persistence" + suffix + ".csv"));
    write_component_csv(set, options.out_dir / ("components" + suffix + ".csv"));
    write_pairs_csv(merge_pairs(graph, field), field, options.out_dir / ("pairs" + suffix + ".csv"));
  }
  return kExitOk;
}

}  // namespace toporeg
