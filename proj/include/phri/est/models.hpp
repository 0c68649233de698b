#pragma once

#include <Eigen/Core>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "phri/core/subtask.hpp"
#include "phri/est/dtw.hpp"
#include "phri/est/features.hpp"
#include "phri/est/gpr.hpp"
#include "phri/est/mj.hpp"
#include "phri/est/nn.hpp"

namespace phri::est {

enum class ProgressTarget { Tau, Lambda };
std::string_view to_string(ProgressTarget t);
ProgressTarget parse_target(std::string_view s);

/// Four-way subtask classifier over standardized detector windows.
class SubtaskDetector {
public:
    SubtaskDetector(FeatureSpec spec, Standardizer standardizer, nn::Network net);
    SubtaskDetector(const SubtaskDetector& other);
    SubtaskDetector(SubtaskDetector&&) = default;

    /// Class distribution for the window ending at `tick`.
    Eigen::VectorXd probabilities(const TrialSignals& signals, std::size_t tick) const;
    /// Class distribution for an already extracted raw window (channels x steps).
    Eigen::VectorXd probabilities(Eigen::MatrixXd raw_window) const;
    Subtask detect(const TrialSignals& signals, std::size_t tick) const;

    const FeatureSpec& spec() const { return spec_; }
    const Standardizer& standardizer() const { return standardizer_; }
    nn::Network& network() { return *net_; }
    const nn::Network& network() const { return *net_; }

private:
    FeatureSpec spec_;
    Standardizer standardizer_;
    std::unique_ptr<nn::Network> net_;  // forward() caches activations
};

/// Builds the detector architecture: LSTM(hidden) -> dense(4) -> softmax.
nn::Network make_detector_network(const FeatureSpec& spec, int hidden = 32);
/// Builds the regressor: conv(16,5) -> relu -> subsample(2) -> conv(32,5) -> relu ->
/// flatten -> dense(64) -> relu -> dense(1).
nn::Network make_regressor_network(const FeatureSpec& spec);

/// Online progress estimator. predict() returns the raw (unclamped) value for
/// the window/trajectory ending at `tick`; `onset` is the tick at which Driving
/// was voted (used by trajectory-matching models).
class ProgressModel {
public:
    virtual ~ProgressModel() = default;
    virtual std::string kind() const = 0;
    virtual ProgressTarget target() const = 0;
    virtual std::unique_ptr<ProgressModel> clone() const = 0;
    virtual void reset() {}
    virtual double predict(const TrialSignals& signals, std::size_t tick, std::optional<std::size_t> onset) = 0;
    virtual nlohmann::json payload() const = 0;
    /// True when the last prediction fell back to an earlier estimate.
    virtual bool flagged() const { return false; }
};

class CnnProgress final : public ProgressModel {
public:
    CnnProgress(ProgressTarget target, Standardizer standardizer, nn::Network net);
    std::string kind() const override { return "cnn"; }
    ProgressTarget target() const override { return target_; }
    std::unique_ptr<ProgressModel> clone() const override;
    double predict(const TrialSignals& signals, std::size_t tick, std::optional<std::size_t> onset) override;
    /// Batched prediction over raw windows (channels x steps each).
    std::vector<double> predict_windows(const std::vector<Eigen::MatrixXd>& raw);
    nlohmann::json payload() const override;
    const Standardizer& standardizer() const { return standardizer_; }
    nn::Network& network() { return net_; }

private:
    ProgressTarget target_;
    Standardizer standardizer_;
    nn::Network net_;
};

class GprProgress final : public ProgressModel {
public:
    GprProgress(ProgressTarget target, Standardizer standardizer, GPRModel model);
    std::string kind() const override { return "gpr"; }
    ProgressTarget target() const override { return target_; }
    std::unique_ptr<ProgressModel> clone() const override;
    double predict(const TrialSignals& signals, std::size_t tick, std::optional<std::size_t> onset) override;
    nlohmann::json payload() const override;
    const GPRModel& model() const { return *model_; }

private:
    ProgressTarget target_;
    Standardizer standardizer_;
    std::shared_ptr<const GPRModel> model_;
};

class MjProgress final : public ProgressModel {
public:
    MjProgress(ProgressTarget target, MJFitSettings settings = {}) : target_(target), settings_(settings), est_(settings) {}
    std::string kind() const override { return "mj"; }
    ProgressTarget target() const override { return target_; }
    std::unique_ptr<ProgressModel> clone() const override;
    void reset() override { est_.reset(); }
    double predict(const TrialSignals& signals, std::size_t tick, std::optional<std::size_t> onset) override;
    nlohmann::json payload() const override;
    bool flagged() const override { return flagged_; }

private:
    ProgressTarget target_;
    MJFitSettings settings_;
    MJEstimator est_;
    bool flagged_ = false;
};

class DtwProgress final : public ProgressModel {
public:
    DtwProgress(ProgressTarget target, DTWTemplate tmpl, int query_stride = 10);
    std::string kind() const override { return "dtw"; }
    ProgressTarget target() const override { return target_; }
    std::unique_ptr<ProgressModel> clone() const override;
    void reset() override;
    double predict(const TrialSignals& signals, std::size_t tick, std::optional<std::size_t> onset) override;
    nlohmann::json payload() const override;
    const DTWTemplate& templ() const { return tmpl_; }

private:
    ProgressTarget target_;
    DTWTemplate tmpl_;
    int stride_;
    DTWMatcher matcher_;
    std::optional<std::size_t> onset_;
    std::size_t next_tick_ = 0;
};

}  // namespace phri::est
