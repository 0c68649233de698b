#include "phri/est/artifact.hpp"

#include <cstdio>
#include <fstream>

#include "phri/core/errors.hpp"

namespace phri::est {

namespace {

constexpr int kFormatVersion = 1;

nlohmann::json header(std::string role, std::string kind, std::string target, const FeatureSpec& spec,
                      const nlohmann::json& hyper, std::uint64_t manifest_hash) {
    return {{"format", "phri-model"},
            {"version", kFormatVersion},
            {"role", std::move(role)},
            {"kind", std::move(kind)},
            {"target", std::move(target)},
            {"feature_spec", spec.to_json()},
            {"hyperparameters", hyper},
            {"manifest_hash", hash_hex(manifest_hash)}};
}

ArtifactInfo info_of(const nlohmann::json& j) {
    if (j.value("format", "") != "phri-model") throw FormatError("not a model artifact");
    if (j.value("version", 0) != kFormatVersion) throw FormatError("unsupported artifact version");
    ArtifactInfo a;
    a.role = j.at("role").get<std::string>();
    a.kind = j.at("kind").get<std::string>();
    a.target = j.at("target").get<std::string>();
    a.spec = FeatureSpec::from_json(j.at("feature_spec"));
    a.hyperparameters = j.at("hyperparameters");
    a.manifest_hash = j.at("manifest_hash").get<std::string>();
    return a;
}

void check_spec(const ArtifactInfo& a, const FeatureSpec* expected) {
    if (expected && !(a.spec == *expected))
        throw ConfigError("model artifact feature spec does not match: artifact " + a.spec.to_json().dump() +
                          ", expected " + expected->to_json().dump());
}

void write_json(const std::filesystem::path& file, const nlohmann::json& j) {
    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary);
    if (!out) throw FormatError("cannot write " + file.string());
    out << j.dump(1) << '\n';
}

nlohmann::json read_json(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw FormatError("cannot open model artifact " + file.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(file.string() + ": " + e.what());
    }
}

}  // namespace

std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

nlohmann::json detector_to_json(const SubtaskDetector& det, const nlohmann::json& hyper, std::uint64_t manifest_hash) {
    auto j = header("detector", "lstm", "subtask", det.spec(), hyper, manifest_hash);
    j["payload"] = {{"standardization", det.standardizer().to_json()}, {"network", det.network().to_json()}};
    return j;
}

nlohmann::json estimator_to_json(const ProgressModel& model, const FeatureSpec& spec, const nlohmann::json& hyper,
                                 std::uint64_t manifest_hash) {
    auto j = header("estimator", model.kind(), std::string(to_string(model.target())), spec, hyper, manifest_hash);
    j["payload"] = model.payload();
    return j;
}

SubtaskDetector detector_from_json(const nlohmann::json& j, const FeatureSpec* expected) {
    try {
        const auto a = info_of(j);
        if (a.role != "detector") throw FormatError("artifact is not a subtask detector");
        check_spec(a, expected);
        const auto& p = j.at("payload");
        return SubtaskDetector(a.spec, Standardizer::from_json(p.at("standardization")),
                               nn::Network::from_json(p.at("network")));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed detector artifact: ") + e.what());
    }
}

std::unique_ptr<ProgressModel> estimator_from_json(const nlohmann::json& j, const FeatureSpec* expected) {
    try {
        const auto a = info_of(j);
        if (a.role != "estimator") throw FormatError("artifact is not a progress estimator");
        check_spec(a, expected);
        const auto target = parse_target(a.target);
        const auto& p = j.at("payload");
        if (a.kind == "cnn")
            return std::make_unique<CnnProgress>(target, Standardizer::from_json(p.at("standardization")),
                                                 nn::Network::from_json(p.at("network")));
        if (a.kind == "gpr")
            return std::make_unique<GprProgress>(target, Standardizer::from_json(p.at("standardization")),
                                                 GPRModel::from_json(p.at("gpr")));
        if (a.kind == "dtw")
            return std::make_unique<DtwProgress>(target, DTWTemplate::from_json(p.at("template")),
                                                 p.at("query_stride").get<int>());
        if (a.kind == "mj") {
            MJFitSettings s;
            s.grid = p.at("grid").get<int>();
            s.lower_factor = p.at("lower_factor").get<double>();
            s.upper_factor = p.at("upper_factor").get<double>();
            s.min_samples = p.at("min_samples").get<std::size_t>();
            return std::make_unique<MjProgress>(target, s);
        }
        throw FormatError("unknown estimator kind in artifact: " + a.kind);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed estimator artifact: ") + e.what());
    }
}

void save_detector(const std::filesystem::path& file, const SubtaskDetector& det, const nlohmann::json& hyper,
                   std::uint64_t manifest_hash) {
    write_json(file, detector_to_json(det, hyper, manifest_hash));
}

void save_estimator(const std::filesystem::path& file, const ProgressModel& model, const FeatureSpec& spec,
                    const nlohmann::json& hyper, std::uint64_t manifest_hash) {
    write_json(file, estimator_to_json(model, spec, hyper, manifest_hash));
}

ArtifactInfo read_artifact_info(const std::filesystem::path& file) {
    try {
        return info_of(read_json(file));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(file.string() + ": " + e.what());
    }
}

SubtaskDetector load_detector(const std::filesystem::path& file, const FeatureSpec* expected) {
    return detector_from_json(read_json(file), expected);
}

std::unique_ptr<ProgressModel> load_estimator(const std::filesystem::path& file, const FeatureSpec* expected) {
    return estimator_from_json(read_json(file), expected);
}

}  // namespace phri::est
