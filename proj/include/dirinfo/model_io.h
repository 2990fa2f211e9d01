#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "dirinfo/model.h"

namespace dirinfo {

/// A model file holds either a first-order channel or a memory-J channel;
/// the latter is also returned in augmented first-order form.
struct LoadedModel {
  ChannelModel model;
  std::optional<MemoryJModel> memory;
};

/// Matrices are row-major nested arrays; a bare number is a 1x1 matrix.
/// Unknown keys and malformed values throw dirinfo::Error. The result is not
/// validated; call ValidateModel / EnsureValid.
LoadedModel ModelFromJson(const nlohmann::json& doc);
LoadedModel LoadModelFile(const std::string& path);

nlohmann::json MatrixToJson(const MatrixXd& m);
nlohmann::json VectorToJson(const VectorXd& v);
nlohmann::json ModelToJson(const ChannelModel& model);
nlohmann::json MemoryModelToJson(const MemoryJModel& model);

}  // namespace dirinfo
