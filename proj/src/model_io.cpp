#include "toporeg/model_io.hpp"

#include <fstream>

#include "toporeg/errors.hpp"

namespace toporeg {

nlohmann::json model_to_json(const KernelModel& model) {
  nlohmann::json j;
  j["sigma"] = model.sigma;
  j["num_classes"] = model.num_classes;
  j["dim"] = model.train_points.dim();
  j["train_points"] = model.train_points.data();
  auto& w = j["weights"] = nlohmann::json::array();
  for (Eigen::Index c = 0; c < model.weights.cols(); ++c) {
    const Eigen::VectorXd col = model.weights.col(c);
    w.push_back(std::vector<double>(col.data(), col.data() + col.size()));
  }
  auto& t = j["transform"] = nlohmann::json::array();
  for (const auto& r : model.transform.ranges) t.push_back({r.lo, r.hi});
  return j;
}

KernelModel model_from_json(const nlohmann::json& j) {
  try {
    KernelModel m;
    m.sigma = j.at("sigma").get<double>();
    m.num_classes = j.at("num_classes").get<std::size_t>();
    m.train_points = PointSet(j.at("dim").get<std::size_t>(),
                              j.at("train_points").get<std::vector<double>>());
    const auto& w = j.at("weights");
    const auto n = static_cast<Eigen::Index>(m.train_points.size());
    m.weights.resize(n, static_cast<Eigen::Index>(w.size()));
    for (std::size_t c = 0; c < w.size(); ++c) {
      const auto col = w[c].get<std::vector<double>>();
      if (static_cast<Eigen::Index>(col.size()) != n)
        throw ParseError("weight column length does not match training points", 0);
      m.weights.col(static_cast<Eigen::Index>(c)) =
          Eigen::Map<const Eigen::VectorXd>(col.data(), n);
    }
    for (const auto& r : j.at("transform"))
      m.transform.ranges.push_back({r.at(0).get<double>(), r.at(1).get<double>()});
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed model: ") + e.what(), 0);
  } catch (const StructuralError& e) {
    throw ParseError(std::string("malformed model: ") + e.what(), 0);
  }
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

void save_model(const KernelModel& model, const std::filesystem::path& path) {
  write_json(model_to_json(model), path);
}

KernelModel load_model(const std::filesystem::path& path) {
  return model_from_json(read_json(path));
}

}  // namespace toporeg
