#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include <json.hpp>

#include "phri/est/models.hpp"

namespace phri::est {

/// Header fields common to every model artifact.
struct ArtifactInfo {
    std::string role;  // "detector" or "estimator"
    std::string kind;  // lstm, cnn, gpr, mj, dtw
    std::string target;
    FeatureSpec spec;
    nlohmann::json hyperparameters;
    std::string manifest_hash;  // hex FNV-1a of the training manifest
};

std::string hash_hex(std::uint64_t h);

/// Artifacts are JSON documents; numeric payloads are base64 little-endian float64.
void save_detector(const std::filesystem::path& file, const SubtaskDetector& det, const nlohmann::json& hyper,
                   std::uint64_t manifest_hash);
void save_estimator(const std::filesystem::path& file, const ProgressModel& model, const FeatureSpec& spec,
                    const nlohmann::json& hyper, std::uint64_t manifest_hash);

ArtifactInfo read_artifact_info(const std::filesystem::path& file);

/// Loading throws FormatError on a malformed file and ConfigError when `expected`
/// is given and differs from the artifact's feature spec.
SubtaskDetector load_detector(const std::filesystem::path& file, const FeatureSpec* expected = nullptr);
std::unique_ptr<ProgressModel> load_estimator(const std::filesystem::path& file, const FeatureSpec* expected = nullptr);

/// In-memory forms used by save/load.
nlohmann::json detector_to_json(const SubtaskDetector& det, const nlohmann::json& hyper, std::uint64_t manifest_hash);
nlohmann::json estimator_to_json(const ProgressModel& model, const FeatureSpec& spec, const nlohmann::json& hyper,
                                 std::uint64_t manifest_hash);
SubtaskDetector detector_from_json(const nlohmann::json& j, const FeatureSpec* expected = nullptr);
std::unique_ptr<ProgressModel> estimator_from_json(const nlohmann::json& j, const FeatureSpec* expected = nullptr);

}  // namespace phri::est
