#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "anovakrr/krr.hpp"

namespace anovakrr {

inline constexpr const char* kModelSchema = "krr-model/1";

// Little-endian IEEE-754 doubles, base64 encoded.
std::string pack_doubles(const double* data, std::size_t count);
std::vector<double> unpack_doubles(const std::string& text);

nlohmann::json config_to_json(const KrrConfig& config);
KrrConfig config_from_json(const nlohmann::json& j);

nlohmann::json model_to_json(const KrrModel& model);
KrrModel model_from_json(const nlohmann::json& j);

// Writes the JSON document with a trailing newline. Output is a pure function
// of the model, so equal models give byte-identical files.
void save_model(const KrrModel& model, const std::filesystem::path& path);
KrrModel load_model(const std::filesystem::path& path);

}  // namespace anovakrr
