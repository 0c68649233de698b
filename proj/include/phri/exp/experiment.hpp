#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "phri/core/trial_log.hpp"
#include "phri/est/artifact.hpp"
#include "phri/eval/aggregate.hpp"
#include "phri/eval/folds.hpp"
#include "phri/eval/metrics.hpp"
#include "phri/exp/config.hpp"
#include "phri/human/profile.hpp"

namespace phri::exp {

using Progress = std::function<void(const std::string&)>;

/// Subject population of an experiment (the first `count` profiles drawn from the config seed).
std::vector<human::SubjectProfile> subject_profiles(const ExperimentConfig& cfg, int count);

/// Stable file name for a trial, e.g. "C2_S1_lp0.12_c0_iod3_r0.csv".
std::string trial_file_name(const TrialMeta& m);

struct Dataset {
    std::filesystem::path dir;
    Manifest manifest;
    std::vector<TrialLog> logs;  // same order as manifest entries
};

struct GenerateStats {
    std::size_t conditions = 0;
    std::size_t regenerated = 0;  // extra attempts used
    std::size_t excluded = 0;     // conditions without a valid trial after every attempt
};

/// Experiment A: every condition of the generate grid under C2 with the
/// ground-truth subtask. Invalid trials are retried with fresh seeds; only
/// valid trials are written. Writes <dir>/trials/*.csv, manifest.csv,
/// config.conf and generation.json.
Dataset generate(const ExperimentConfig& cfg, const std::filesystem::path& dir, GenerateStats* stats = nullptr,
                 const Progress& progress = {});

Dataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const Dataset& d);

/// Offline inference over a logged trial: a copy whose subtask_pred and
/// progress_pred columns come from the given models. Dynamics are not re-run.
TrialLog replay_log(const TrialLog& log, const est::SubtaskDetector& detector, const est::ProgressModel& estimator,
                    const est::PipelineSettings& s);

/// Per-trial metrics and pooled scores of a set of logs.
struct Evaluation {
    std::vector<eval::MetricRecord> records;
    std::vector<eval::SummaryRow> summary;
    eval::DetectionReport detection;  // pooled over all trials
    eval::PooledRegression regression;
    std::size_t valid = 0;
    std::size_t invalid = 0;
};

enum class GroupBy { Controller, Subject, None };

/// Scores every valid log using its logged predictions. Regression metrics use
/// the estimator's target (lambda or tau).
Evaluation evaluate_logs(const std::vector<TrialLog>& logs, const ExperimentConfig& cfg, GroupBy group,
                         est::ProgressTarget target);
nlohmann::json evaluation_json(const Evaluation& e);
/// Writes records.csv, summary.csv and summary.json into `dir`.
void write_evaluation(const Evaluation& e, const std::filesystem::path& dir);

struct TrainedModels {
    est::SubtaskDetector detector;
    std::unique_ptr<est::ProgressModel> estimator;
    nlohmann::json report;
};

/// Trains a detector and an estimator on the listed dataset trials.
TrainedModels train_models(const ExperimentConfig& cfg, const est::Corpus& corpus, const std::vector<std::size_t>& trials);

/// `train`: without a category, one deployment model pair under <out>/models
/// plus a train-split report; with a category, one model pair and one report
/// per fold under <out>/cv/<category>/<value>. A failing fold is reported and
/// the remaining folds still run. Returns the combined report.
nlohmann::json train(const ExperimentConfig& cfg, const Dataset& data, std::optional<eval::FoldCategory> cv,
                     const Progress& progress = {});

struct ClosedLoopResult {
    Dataset dataset;
    Evaluation evaluation;
};

/// Experiment B: the run grid under every configured controller with the
/// detector and estimator in the loop. Writes trials, inference audit files
/// and reports under `dir`.
ClosedLoopResult run_closed_loop(const ExperimentConfig& cfg, const est::SubtaskDetector& detector,
                                 const est::ProgressModel& estimator, const std::filesystem::path& dir,
                                 const Progress& progress = {});

/// Re-scores a dataset with the given models (FeatureSpec must match) and writes
/// reports plus the replayed logs under `dir`.
Evaluation replay(const ExperimentConfig& cfg, const Dataset& data, const est::SubtaskDetector& detector,
                  const est::ProgressModel& estimator, const std::filesystem::path& dir);

/// Inference audit lines: tick,source_tick,detector_hash,estimator_hash.
void write_audit(const std::vector<est::InferenceRecord>& audit, const std::filesystem::path& file);
std::vector<est::InferenceRecord> read_audit(const std::filesystem::path& file);

}  // namespace phri::exp
