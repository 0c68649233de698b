#include "phri/est/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "phri/core/hash.hpp"

namespace phri::est {

std::uint64_t window_hash(const Eigen::MatrixXd& w) {
    Fnv1a h;
    h.update(w.data(), static_cast<std::size_t>(w.size()) * sizeof(double));
    return h.digest();
}

IntentPipeline::IntentPipeline(SubtaskDetector detector, std::unique_ptr<ProgressModel> estimator, PipelineSettings s)
    : detector_(std::move(detector)),
      estimator_(std::move(estimator)),
      settings_(s),
      signals_(detector_.spec()),
      votes_(s.vote_capacity) {
    settings_.inference_every = std::max(1, settings_.inference_every);
}

void IntentPipeline::reset() {
    signals_ = TrialSignals(detector_.spec());
    votes_.reset();
    detected_ = Subtask::Idle;
    raw_ = kNoEvent;
    onset_.reset();
    audit_.clear();
    if (estimator_) estimator_->reset();
}

IntentOutput IntentPipeline::step(const TickRecord& row, std::size_t tick) {
    signals_.push(row);
    const std::size_t k = signals_.size() - 1;
    const bool infer = tick % static_cast<std::size_t>(settings_.inference_every) == 0;
    InferenceRecord rec;
    if (infer) {
        const auto w = signals_.detector_window(k);
        detected_ = detector_.detect(signals_, k);
        rec.detector_hash = keep_audit ? window_hash(w) : 0;
    }
    const Subtask voted = votes_.vote(detected_);
    if (voted == Subtask::Driving) {
        if (!onset_) onset_ = k;
    } else if (voted != Subtask::Contact) {
        onset_.reset();
    }
    if (infer && estimator_) {
        raw_ = estimator_->predict(signals_, k, onset_);
        if (keep_audit) rec.estimator_hash = window_hash(signals_.estimator_window(k));
    }
    if (infer && keep_audit) {
        rec.tick = tick;
        rec.source_tick = tick;
        rec.detected = detected_;
        rec.progress_raw = raw_;
        audit_.push_back(rec);
    }
    IntentOutput out;
    out.voted = voted;
    out.progress_raw = raw_;
    if (voted == Subtask::Driving && std::isfinite(raw_)) out.progress = std::clamp(raw_, 0.0, 1.0);
    return out;
}

AsyncIntent::AsyncIntent(SubtaskDetector detector, std::unique_ptr<ProgressModel> estimator, PipelineSettings s,
                         double rate)
    : pipeline_(std::move(detector), std::move(estimator), s), settings_(s), rate_(rate) {
    pipeline_.keep_audit = false;
    worker_ = std::thread([this] { run(); });
}

AsyncIntent::~AsyncIntent() {
    {
        std::lock_guard lk(mu_);
        stop_ = true;
    }
    cv_.notify_all();
    worker_.join();
}

void AsyncIntent::reset() {
    std::unique_lock lk(mu_);
    ++generation_;
    queue_.clear();
    idle_cv_.wait(lk, [&] { return !busy_; });
    pipeline_.reset();
    published_ = {};
    published_tick_.reset();
    stale_count_ = 0;
}

IntentOutput AsyncIntent::step(const TickRecord& row, std::size_t tick) {
    IntentOutput out;
    std::optional<std::size_t> at;
    {
        std::lock_guard lk(mu_);
        queue_.push_back({row, tick, generation_});
        out = published_;
        at = published_tick_;
    }
    cv_.notify_one();
    const double age = at ? static_cast<double>(tick - std::min(tick, *at)) / rate_ : static_cast<double>(tick) / rate_;
    out.stale = age > settings_.stale_after_s;
    if (out.stale) {
        ++stale_count_;
        out.progress.reset();
    }
    return out;
}

void AsyncIntent::drain() {
    std::unique_lock lk(mu_);
    idle_cv_.wait(lk, [&] { return queue_.empty() && !busy_; });
}

void AsyncIntent::run() {
    std::unique_lock lk(mu_);
    while (true) {
        cv_.wait(lk, [&] { return stop_ || !queue_.empty(); });
        if (stop_) return;
        auto item = queue_.front();
        queue_.pop_front();
        busy_ = true;
        lk.unlock();
        const auto out = pipeline_.step(item.row, item.tick);
        lk.lock();
        busy_ = false;
        if (item.generation == generation_) {
            published_ = out;
            published_tick_ = item.tick;
        }
        idle_cv_.notify_all();
    }
}

}  // namespace phri::est
