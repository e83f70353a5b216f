#include "toporeg/datasets.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

#include "toporeg/errors.hpp"
#include "toporeg/rng.hpp"

namespace toporeg {

std::size_t Dataset::num_classes() const noexcept {
  int top = 1;
  for (int t : labels) top = std::max(top, t);
  return static_cast<std::size_t>(top) + 1;
}

void Dataset::validate() const {
  if (points.size() != labels.size())
    throw StructuralError("dataset has " + std::to_string(points.size()) + " points but " +
                          std::to_string(labels.size()) + " labels");
  for (int t : labels)
    if (t < 0) throw StructuralError("negative label");
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.points = PointSet(points.dim());
  out.points.reserve(indices.size());
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    out.points.push_back(points[i]);
    out.labels.push_back(labels[i]);
  }
  out.name = name;
  out.provenance = provenance;
  return out;
}

namespace {

template <typename T>
void shuffle_in_place(std::vector<T>& v, Rng& rng) {
  // Explicit Fisher-Yates: std::shuffle's draw sequence is library-specific.
  for (std::size_t i = v.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(v[i - 1], v[pick(rng)]);
  }
}

}  // namespace

Dataset make_moons(std::size_t n, double noise_sd, std::uint64_t seed) {
  if (n < 2) throw StructuralError("moons need at least two points");
  const std::size_t n_out = n / 2;
  const std::size_t n_in = n - n_out;
  auto angle = [](std::size_t i, std::size_t count) {
    return count > 1 ? std::numbers::pi * static_cast<double>(i) / static_cast<double>(count - 1)
                     : 0.0;
  };

  std::vector<std::pair<std::array<double, 2>, int>> rows;
  rows.reserve(n);
  for (std::size_t i = 0; i < n_out; ++i) {
    const double t = angle(i, n_out);
    rows.push_back({{std::cos(t), std::sin(t)}, 0});
  }
  for (std::size_t i = 0; i < n_in; ++i) {
    const double t = angle(i, n_in);
    rows.push_back({{1.0 - std::cos(t), 0.5 - std::sin(t)}, 1});
  }

  if (noise_sd > 0.0) {
    Rng rng(sub_seed(seed, "moons-noise"));
    std::normal_distribution<double> jitter(0.0, noise_sd);
    for (auto& r : rows)
      for (double& c : r.first) c += jitter(rng);
  }
  Rng rng(sub_seed(seed, "moons-shuffle"));
  shuffle_in_place(rows, rng);

  Dataset ds;
  ds.points = PointSet(2);
  ds.points.reserve(n);
  for (const auto& r : rows) {
    ds.points.push_back(r.first);
    ds.labels.push_back(r.second);
  }
  ds.name = "moons";
  std::ostringstream prov;
  prov << "generator=moons n=" << n << " noise_sd=" << format_double(noise_sd)
       << " seed=" << seed;
  ds.provenance = prov.str();
  return ds;
}

Dataset make_blobs(std::size_t n, const PointSet& centers, double spread, std::uint64_t seed) {
  if (centers.size() < 2) throw StructuralError("blobs need at least two centers");
  if (spread < 0.0) throw StructuralError("blob spread must be non-negative");
  Rng rng(sub_seed(seed, "blobs"));
  std::normal_distribution<double> jitter(0.0, 1.0);
  Dataset ds;
  ds.points = PointSet(centers.dim());
  ds.points.reserve(n);
  std::vector<double> p(centers.dim());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % centers.size();
    for (std::size_t a = 0; a < p.size(); ++a) p[a] = centers[c][a] + spread * jitter(rng);
    ds.points.push_back(p);
    ds.labels.push_back(static_cast<int>(c));
  }
  ds.name = "blobs";
  std::ostringstream prov;
  prov << "generator=blobs n=" << n << " centers=" << centers.size()
       << " spread=" << format_double(spread) << " seed=" << seed;
  ds.provenance = prov.str();
  return ds;
}

Dataset flip_labels(const Dataset& ds, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw StructuralError("flip fraction outside [0,1]");
  Dataset out = ds;
  const std::size_t n = ds.size();
  // The small slack keeps e.g. 0.29 * 100 from flooring to 28.
  const auto count = std::min(
      n, static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9)));
  if (count == 0) return out;

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(sub_seed(seed, "flip"));
  shuffle_in_place(idx, rng);

  const int k = static_cast<int>(ds.num_classes());
  std::uniform_int_distribution<int> offset(1, k - 1);
  for (std::size_t i = 0; i < count; ++i) {
    int& t = out.labels[idx[i]];
    t = (t + offset(rng)) % k;
  }
  return out;
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  Dataset ds;
  ds.name = path.stem().string();
  std::string line;
  std::size_t line_no = 0;
  std::size_t columns = 0;
  std::vector<double> row;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    if (view.front() == '#') {
      if (columns == 0 && ds.provenance.empty()) ds.provenance = std::string(trim(view.substr(1)));
      continue;
    }
    const auto cells = split_commas(view);
    if (columns == 0) {
      if (cells.size() < 2 || cells.back() != "label")
        throw ParseError("header must end with a 'label' column", line_no);
      columns = cells.size();
      ds.points = PointSet(columns - 1);
      continue;
    }
    if (cells.size() != columns)
      throw ParseError("expected " + std::to_string(columns) + " cells, found " +
                           std::to_string(cells.size()),
                       line_no);
    row.resize(columns - 1);
    for (std::size_t c = 0; c + 1 < columns; ++c) {
      const auto cell = cells[c];
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), row[c]);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(row[c]))
        throw ParseError("non-numeric cell '" + std::string(cell) + "'", line_no);
    }
    int label = 0;
    const auto lc = cells.back();
    const auto res = std::from_chars(lc.data(), lc.data() + lc.size(), label);
    if (res.ec != std::errc() || res.ptr != lc.data() + lc.size() || label < 0)
      throw ParseError("label '" + std::string(lc) + "' is not a non-negative integer", line_no);
    ds.points.push_back(row);
    ds.labels.push_back(label);
  }
  if (columns == 0) throw ParseError("missing header row", 0);
  return ds;
}

void save_csv(const Dataset& ds, const std::filesystem::path& path) {
  ds.validate();
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  if (!ds.provenance.empty()) out << "# " << ds.provenance << '\n';
  for (std::size_t a = 0; a < ds.dim(); ++a) out << 'x' << a << ',';
  out << "label\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (double x : ds.points[i]) out << format_double(x) << ',';
    out << ds.labels[i] << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

namespace {

// Assigns folds to positions 0..labels.size()-1.
std::vector<std::size_t> stratified_deal(std::span<const int> labels, std::size_t n_folds,
                                         std::uint64_t seed, std::vector<std::string>& warnings) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

  Rng rng(seed);
  std::vector<std::size_t> folds(labels.size());
  std::vector<std::size_t> pool;
  std::size_t next = 0;
  for (auto& [label, members] : by_class) {
    if (members.size() < n_folds) {
      warnings.push_back("class " + std::to_string(label) + " has " +
                         std::to_string(members.size()) + " members (< " +
                         std::to_string(n_folds) + "); split unstratified");
      pool.insert(pool.end(), members.begin(), members.end());
      continue;
    }
    shuffle_in_place(members, rng);
    for (std::size_t i : members) folds[i] = next++ % n_folds;
  }
  std::sort(pool.begin(), pool.end());
  shuffle_in_place(pool, rng);
  for (std::size_t i : pool) folds[i] = next++ % n_folds;
  return folds;
}

}  // namespace

std::vector<std::size_t> FoldPlan::test_indices(std::size_t outer) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i)
    if (assignments[i] == outer) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldPlan::train_indices(std::size_t outer) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i)
    if (assignments[i] != outer) out.push_back(i);
  return out;
}

FoldPlan split_folds(const Dataset& ds, std::uint64_t seed, std::size_t n_outer,
                     std::size_t n_inner) {
  ds.validate();
  if (n_outer < 2 || n_inner < 2) throw StructuralError("need at least two folds");
  if (ds.size() < n_outer)
    throw StructuralError("need at least " + std::to_string(n_outer) + " points to split");
  FoldPlan plan;
  plan.n_outer = n_outer;
  plan.n_inner = n_inner;
  plan.seed = seed;
  plan.assignments = stratified_deal(ds.labels, n_outer, sub_seed(seed, "outer"), plan.warnings);
  return plan;
}

std::vector<std::size_t> inner_assignments(const FoldPlan& plan, const Dataset& ds,
                                           std::size_t outer) {
  const auto train = plan.train_indices(outer);
  if (train.size() < plan.n_inner)
    throw StructuralError("outer training set too small for inner folds");
  std::vector<int> labels;
  labels.reserve(train.size());
  for (std::size_t i : train) labels.push_back(ds.labels[i]);
  std::vector<std::string> ignored;
  return stratified_deal(labels, plan.n_inner, sub_seed(plan.seed, "inner", outer), ignored);
}

}  // namespace toporeg
