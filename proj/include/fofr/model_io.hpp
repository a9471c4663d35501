#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "fofr/pipeline.hpp"

namespace fofr {

using Json = nlohmann::ordered_json;

/// Shape-tagged row-major encoding: {"rows", "cols", "data"}.
Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);

Json config_to_json(const PipelineConfig& config);
/// Fields present in `j` override `base`; absent fields keep base values.
PipelineConfig config_from_json(const Json& j, PipelineConfig base = {});

/// 64-bit FNV-1a digest rendered as 16 hex digits.
std::string content_checksum(std::string_view text);

Json model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const Json& j);

std::string model_to_string(const TrainedModel& model);
/// Throws CorruptArtifact on parse or checksum failure, VersionMismatch on a
/// foreign format version.
TrainedModel model_from_string(const std::string& text);

void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace fofr
