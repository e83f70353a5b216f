#pragma once

#include <filesystem>

#include "json.hpp"
#include "toporeg/klr.hpp"

namespace toporeg {

/// {sigma, num_classes, train_points (row-major), dim, weights (one array
/// per column), transform: [[lo, hi], ...]}
nlohmann::json model_to_json(const KernelModel& model);
KernelModel model_from_json(const nlohmann::json& j);

void save_model(const KernelModel& model, const std::filesystem::path& path);
KernelModel load_model(const std::filesystem::path& path);

void write_json(const nlohmann::json& j, const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace toporeg
