#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "phri/est/pipeline.hpp"
#include "phri/est/training.hpp"
#include "phri/eval/metrics.hpp"
#include "phri/exp/simulator.hpp"

namespace phri::exp {

/// Flat `key = value` document. `include = file` pulls in another document
/// (relative to the including file) at that point; later assignments win.
/// `#` starts a comment line.
class KeyValueDoc {
public:
    static KeyValueDoc load(const std::filesystem::path& file);
    static KeyValueDoc parse(std::string_view text, const std::filesystem::path& base_dir = {});

    void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
    const std::map<std::string, std::string>& values() const { return values_; }

private:
    void parse_into(std::string_view text, const std::filesystem::path& base_dir, int depth);
    void load_into(const std::filesystem::path& file, int depth);

    std::map<std::string, std::string> values_;
};

/// Conditions swept by one experiment.
struct ConditionGrid {
    int profiles = 5;
    std::vector<double> lp;
    std::vector<int> corners;
    std::vector<double> iod;
    int repetitions = 1;

    std::size_t size() const;
};

struct ServeConfig {
    std::string bind = "127.0.0.1";
    int port = 8765;
    double coupling_k = 300.0;  // N/m
    double coupling_b = 20.0;   // Ns/m
    double frame_hz = 60.0;
    double overrun_warn_fraction = 0.1;
    double push_rate = 0.05;    // m/s pointer advance along the approach axis while grabbed after GO
};

struct ExperimentConfig {
    std::string kind = "A";
    std::uint64_t seed = 1;
    std::filesystem::path out = "out";
    std::filesystem::path dataset;          // defaults to <out>/dataset
    std::filesystem::path detector_model;   // defaults to <out>/models/detector.json
    std::filesystem::path estimator_model;  // defaults to <out>/models/estimator.json

    ConditionGrid grid_a{5, {0.12, 0.16, 0.20, 0.24}, {0, 1, 2, 3}, {3.0, 5.0}, 5};
    ConditionGrid grid_b{3, {0.18}, {0, 1, 2, 3}, {4.0}, 2};
    int max_attempts = 3;
    std::vector<ControllerId> controllers{ControllerId::C1, ControllerId::C2, ControllerId::C3};

    SimSettings sim;
    est::FeatureSpec features;
    est::PipelineSettings pipeline;
    est::DetectorTraining detector;
    est::EstimatorTraining estimator;
    eval::OscillationSettings oscillation;
    double transition_window_s = 0.5;
    std::string cv = "none";
    ServeConfig serve;

    std::filesystem::path dataset_dir() const { return dataset.empty() ? out / "dataset" : dataset; }
    std::filesystem::path detector_path() const { return detector_model.empty() ? out / "models" / "detector.json" : detector_model; }
    std::filesystem::path estimator_path() const {
        return estimator_model.empty() ? out / "models" / "estimator.json" : estimator_model;
    }

    void validate() const;
};

/// Applies every key of the document; unknown keys and bad values throw ConfigError.
void apply(ExperimentConfig& cfg, const KeyValueDoc& doc);
/// Every setting as `key = value` lines in a fixed order.
std::string dump(const ExperimentConfig& cfg);

/// Built-in defaults, overlaid with `file` when given, else with the file named
/// by INTENT_ADMIT_CONFIG when set.
ExperimentConfig load_config(const std::optional<std::filesystem::path>& file);

}  // namespace phri::exp
