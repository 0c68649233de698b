#include "phri/est/models.hpp"

#include "phri/core/errors.hpp"

namespace phri::est {

std::string_view to_string(ProgressTarget t) { return t == ProgressTarget::Tau ? "tau" : "lambda"; }

ProgressTarget parse_target(std::string_view s) {
    if (s == "tau") return ProgressTarget::Tau;
    if (s == "lambda") return ProgressTarget::Lambda;
    throw ConfigError("unknown progress target: " + std::string(s));
}

namespace {

nn::Tensor single(const Eigen::MatrixXd& w) { return {w, static_cast<int>(w.cols())}; }

}  // namespace

// ---- detector ----

SubtaskDetector::SubtaskDetector(FeatureSpec spec, Standardizer standardizer, nn::Network net)
    : spec_(std::move(spec)), standardizer_(std::move(standardizer)), net_(std::make_unique<nn::Network>(std::move(net))) {
    const auto in = net_->input_shape();
    if (in.channels != static_cast<int>(spec_.detector.channels.size()) || in.steps != spec_.detector.timesteps(spec_.rate))
        throw ConfigError("detector network input does not match the feature spec");
    if (net_->output_shape().channels != static_cast<int>(kSubtaskCount))
        throw ConfigError("detector network must have four outputs");
}

SubtaskDetector::SubtaskDetector(const SubtaskDetector& other)
    : spec_(other.spec_),
      standardizer_(other.standardizer_),
      net_(std::make_unique<nn::Network>(nn::Network::from_json(other.net_->to_json()))) {}

Eigen::VectorXd SubtaskDetector::probabilities(Eigen::MatrixXd w) const {
    standardizer_.apply(w);
    return net_->forward(single(w)).value.col(0);
}

Eigen::VectorXd SubtaskDetector::probabilities(const TrialSignals& s, std::size_t tick) const {
    return probabilities(s.detector_window(tick));
}

Subtask SubtaskDetector::detect(const TrialSignals& s, std::size_t tick) const {
    Eigen::Index best = 0;
    probabilities(s, tick).maxCoeff(&best);
    return subtask_from_index(static_cast<int>(best));
}

nn::Network make_detector_network(const FeatureSpec& spec, int hidden) {
    const int c = static_cast<int>(spec.detector.channels.size());
    nn::Network net({c, spec.detector.timesteps(spec.rate)}, nn::Loss::CrossEntropy);
    net.add(std::make_unique<nn::Lstm>(c, hidden));
    net.add(std::make_unique<nn::Dense>(hidden, static_cast<int>(kSubtaskCount)));
    net.add(std::make_unique<nn::Softmax>());
    return net;
}

nn::Network make_regressor_network(const FeatureSpec& spec) {
    const int c = static_cast<int>(spec.estimator.channels.size());
    const int steps = spec.estimator.timesteps(spec.rate);
    nn::Network net({c, steps}, nn::Loss::MeanSquared);
    net.add(std::make_unique<nn::Conv1D>(c, 16, 5));
    net.add(std::make_unique<nn::Relu>());
    net.add(std::make_unique<nn::Subsample>(2));
    net.add(std::make_unique<nn::Conv1D>(16, 32, 5));
    net.add(std::make_unique<nn::Relu>());
    net.add(std::make_unique<nn::Flatten>());
    const int flat = net.output_shape().channels;
    net.add(std::make_unique<nn::Dense>(flat, 64));
    net.add(std::make_unique<nn::Relu>());
    net.add(std::make_unique<nn::Dense>(64, 1));
    return net;
}

// ---- CNN ----

CnnProgress::CnnProgress(ProgressTarget target, Standardizer standardizer, nn::Network net)
    : target_(target), standardizer_(std::move(standardizer)), net_(std::move(net)) {
    if (net_.output_shape().channels != 1) throw ConfigError("regressor network must have one output");
}

std::unique_ptr<ProgressModel> CnnProgress::clone() const {
    return std::make_unique<CnnProgress>(target_, standardizer_, nn::Network::from_json(net_.to_json()));
}

double CnnProgress::predict(const TrialSignals& s, std::size_t tick, std::optional<std::size_t>) {
    Eigen::MatrixXd w = s.estimator_window(tick);
    standardizer_.apply(w);
    return net_.forward(single(w)).value(0, 0);
}

std::vector<double> CnnProgress::predict_windows(const std::vector<Eigen::MatrixXd>& raw) {
    std::vector<double> out;
    out.reserve(raw.size());
    const std::size_t batch = 256;
    for (std::size_t from = 0; from < raw.size(); from += batch) {
        const std::size_t to = std::min(raw.size(), from + batch);
        const auto b = static_cast<Eigen::Index>(to - from);
        const auto c = raw[from].rows();
        const auto steps = raw[from].cols();
        nn::Tensor x{Eigen::MatrixXd(c, steps * b), static_cast<int>(steps)};
        for (std::size_t i = from; i < to; ++i) {
            Eigen::MatrixXd w = raw[i];
            standardizer_.apply(w);
            for (Eigen::Index t = 0; t < steps; ++t) x.value.col(t * b + static_cast<Eigen::Index>(i - from)) = w.col(t);
        }
        const auto y = net_.forward(x).value;
        for (Eigen::Index j = 0; j < b; ++j) out.push_back(y(0, j));
    }
    return out;
}

nlohmann::json CnnProgress::payload() const {
    return {{"standardization", standardizer_.to_json()}, {"network", net_.to_json()}};
}

// ---- GPR ----

GprProgress::GprProgress(ProgressTarget target, Standardizer standardizer, GPRModel model)
    : target_(target), standardizer_(std::move(standardizer)), model_(std::make_shared<GPRModel>(std::move(model))) {}

std::unique_ptr<ProgressModel> GprProgress::clone() const { return std::make_unique<GprProgress>(*this); }

double GprProgress::predict(const TrialSignals& s, std::size_t tick, std::optional<std::size_t>) {
    Eigen::MatrixXd w = s.estimator_window(tick);
    standardizer_.apply(w);
    return model_->predict_mean(Eigen::Map<const Eigen::VectorXd>(w.data(), w.size()));
}

nlohmann::json GprProgress::payload() const {
    return {{"standardization", standardizer_.to_json()}, {"gpr", model_->to_json()}};
}

// ---- minimum jerk ----

std::unique_ptr<ProgressModel> MjProgress::clone() const { return std::make_unique<MjProgress>(target_, settings_); }

double MjProgress::predict(const TrialSignals& s, std::size_t tick, std::optional<std::size_t> onset) {
    flagged_ = false;
    if (!onset || *onset > tick) return 0.0;
    const auto& pos = s.positions();
    const auto est = est_.update(std::span<const Vec3>(pos.data() + *onset, tick - *onset + 1), 1.0 / s.spec().rate);
    flagged_ = est.flagged;
    return target_ == ProgressTarget::Tau ? est.tau : est.lambda;
}

nlohmann::json MjProgress::payload() const {
    return {{"grid", settings_.grid},
            {"lower_factor", settings_.lower_factor},
            {"upper_factor", settings_.upper_factor},
            {"min_samples", settings_.min_samples}};
}

// ---- DTW ----

DtwProgress::DtwProgress(ProgressTarget target, DTWTemplate tmpl, int query_stride)
    : target_(target), tmpl_(std::move(tmpl)), stride_(std::max(1, query_stride)), matcher_(tmpl_.sequence) {}

std::unique_ptr<ProgressModel> DtwProgress::clone() const {
    return std::make_unique<DtwProgress>(target_, tmpl_, stride_);
}

void DtwProgress::reset() {
    matcher_.reset();
    onset_.reset();
    next_tick_ = 0;
}

double DtwProgress::predict(const TrialSignals& s, std::size_t tick, std::optional<std::size_t> onset) {
    if (!onset || *onset > tick) {
        if (onset_) reset();
        return 0.0;
    }
    if (onset_ != onset) {
        matcher_.reset();
        onset_ = onset;
        next_tick_ = *onset;
    }
    const auto& est = s.estimator();
    for (; next_tick_ <= tick; next_tick_ += static_cast<std::size_t>(stride_)) {
        const auto sample = est.sample(next_tick_);
        matcher_.push(tmpl_.normalize(Eigen::Map<const Eigen::VectorXd>(sample.data(), static_cast<Eigen::Index>(sample.size()))));
    }
    if (matcher_.size() == 0) return 0.0;
    const int j = matcher_.best_index();
    if (target_ == ProgressTarget::Lambda) return tmpl_.lambda[static_cast<std::size_t>(j)];
    return static_cast<double>(j) / static_cast<double>(tmpl_.length() - 1);
}

nlohmann::json DtwProgress::payload() const { return {{"template", tmpl_.to_json()}, {"query_stride", stride_}}; }

}  // namespace phri::est
