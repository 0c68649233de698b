#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "phri/est/models.hpp"

namespace phri::est {

/// Trial logs with their precomputed feature streams.
struct Corpus {
    FeatureSpec spec;
    std::vector<TrialLog> logs;
    std::vector<TrialSignals> signals;

    std::size_t size() const { return logs.size(); }
};

Corpus make_corpus(std::vector<TrialLog> logs, const FeatureSpec& spec = {});

struct DetectorTraining {
    int hidden = 32;
    nn::TrainConfig train{.batch = 128};
    double l1 = 0.0;
    double l2 = 0.0;
    long max_windows = 24000;
};

enum class ModelKind { Cnn, Gpr, Mj, Dtw };
std::string_view to_string(ModelKind k);
ModelKind parse_model_kind(std::string_view s);

struct EstimatorTraining {
    ModelKind kind = ModelKind::Cnn;
    ProgressTarget target = ProgressTarget::Lambda;
    nn::TrainConfig train{.batch = 64};
    double l1 = 1e-4;
    double l2 = 1e-4;
    long max_windows = 20000;
    GPRSettings gpr;
    long gpr_max_windows = 4000;
    long gpr_optimize_windows = 500;
    int dtw_length = 200;
    int dtw_query_stride = 10;
    MJFitSettings mj;
};

/// (trial, tick) pairs chosen uniformly without replacement from the given
/// per-trial tick ranges [first, last], at most `cap` in total, sorted.
struct TickRef {
    std::size_t trial = 0;
    std::size_t tick = 0;
};
std::vector<TickRef> sample_ticks(const std::vector<std::size_t>& trials, const std::vector<std::pair<std::size_t, std::size_t>>& ranges,
                                  long cap, std::uint64_t seed);

/// Standardization statistics over the listed trials only.
Standardizer fit_detector_standardizer(const Corpus& c, const std::vector<std::size_t>& trials);
Standardizer fit_estimator_standardizer(const Corpus& c, const std::vector<std::size_t>& trials);

/// Detector windows labelled with the ground-truth subtask, over every tick of the trials.
nn::Dataset detector_dataset(const Corpus& c, const std::vector<std::size_t>& trials, const Standardizer& st,
                             long cap, std::uint64_t seed);
/// Estimator windows over Driving ticks [t_d, t_c] with the chosen progress target.
nn::Dataset estimator_dataset(const Corpus& c, const std::vector<std::size_t>& trials, const Standardizer& st,
                              ProgressTarget target, long cap, std::uint64_t seed);

struct TrainingSummary {
    nn::TrainResult nn;
    nlohmann::json details;  // kind-specific (GPR hyperparameters, window counts)
};

SubtaskDetector train_detector(const Corpus& c, const std::vector<std::size_t>& trials, const DetectorTraining& s,
                               TrainingSummary* summary = nullptr);
std::unique_ptr<ProgressModel> train_progress_model(const Corpus& c, const std::vector<std::size_t>& trials,
                                                    const EstimatorTraining& s, TrainingSummary* summary = nullptr);

/// Hyperparameters recorded alongside trained artifacts.
nlohmann::json to_json(const DetectorTraining& s);
nlohmann::json to_json(const EstimatorTraining& s);

}  // namespace phri::est
