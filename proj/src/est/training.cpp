#include "phri/est/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "phri/core/errors.hpp"
#include "phri/core/hash.hpp"

namespace phri::est {

Corpus make_corpus(std::vector<TrialLog> logs, const FeatureSpec& spec) {
    Corpus c;
    c.spec = spec;
    c.logs = std::move(logs);
    c.signals.reserve(c.logs.size());
    for (const auto& log : c.logs) {
        if (std::abs(log.meta.rate - spec.rate) > 1e-9)
            throw ConfigError("trial rate " + std::to_string(log.meta.rate) + " does not match the feature rate");
        c.signals.push_back(build_signals(log, spec));
    }
    return c;
}

std::string_view to_string(ModelKind k) {
    switch (k) {
        case ModelKind::Cnn: return "cnn";
        case ModelKind::Gpr: return "gpr";
        case ModelKind::Mj: return "mj";
        case ModelKind::Dtw: return "dtw";
    }
    return "?";
}

ModelKind parse_model_kind(std::string_view s) {
    if (s == "cnn") return ModelKind::Cnn;
    if (s == "gpr") return ModelKind::Gpr;
    if (s == "mj") return ModelKind::Mj;
    if (s == "dtw") return ModelKind::Dtw;
    throw ConfigError("unknown estimator kind: " + std::string(s));
}

std::vector<TickRef> sample_ticks(const std::vector<std::size_t>& trials,
                                  const std::vector<std::pair<std::size_t, std::size_t>>& ranges, long cap,
                                  std::uint64_t seed) {
    std::vector<TickRef> all;
    for (std::size_t i = 0; i < trials.size(); ++i) {
        const auto [first, last] = ranges[i];
        for (std::size_t k = first; k <= last; ++k) all.push_back({trials[i], k});
    }
    if (cap <= 0 || static_cast<long>(all.size()) <= cap) return all;
    // Partial Fisher-Yates with a fixed engine keeps the draw reproducible.
    std::mt19937_64 rng(seed);
    const auto n = all.size();
    for (std::size_t i = 0; i < static_cast<std::size_t>(cap); ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(all[i], all[pick(rng)]);
    }
    all.resize(static_cast<std::size_t>(cap));
    std::sort(all.begin(), all.end(), [](const TickRef& a, const TickRef& b) {
        return a.trial != b.trial ? a.trial < b.trial : a.tick < b.tick;
    });
    return all;
}

Standardizer fit_detector_standardizer(const Corpus& c, const std::vector<std::size_t>& trials) {
    std::vector<const TimeSeries*> s;
    for (auto i : trials) s.push_back(&c.signals[i].detector());
    return Standardizer::fit(s);
}

Standardizer fit_estimator_standardizer(const Corpus& c, const std::vector<std::size_t>& trials) {
    std::vector<const TimeSeries*> s;
    for (auto i : trials) s.push_back(&c.signals[i].estimator());
    return Standardizer::fit(s);
}

namespace {

std::pair<std::size_t, std::size_t> driving_range(const TrialLog& log) {
    const auto d = log.tick_of(log.meta.t_d);
    const auto cc = std::min(log.tick_of(log.meta.t_c), log.ticks.size() - 1);
    if (d > cc) throw FormatError("trial has an empty Driving range");
    return {d, cc};
}

nn::Dataset allocate(const nn::Shape& shape, long rows_out, std::size_t n) {
    nn::Dataset d;
    d.shape = shape;
    d.inputs.resize(static_cast<Eigen::Index>(shape.channels) * shape.steps, static_cast<Eigen::Index>(n));
    d.targets.setZero(rows_out, static_cast<Eigen::Index>(n));
    d.groups.resize(n);
    return d;
}

void store(nn::Dataset& d, Eigen::Index col, Eigen::MatrixXd w, const Standardizer& st) {
    st.apply(w);
    d.inputs.col(col) = Eigen::Map<const Eigen::VectorXd>(w.data(), w.size());
}

std::vector<std::size_t> valid_only(const Corpus& c, const std::vector<std::size_t>& trials) {
    std::vector<std::size_t> out;
    for (auto i : trials)
        if (c.logs[i].meta.valid && !c.logs[i].ticks.empty()) out.push_back(i);
    if (out.empty()) throw FitError("no valid training trials");
    return out;
}

}  // namespace

nn::Dataset detector_dataset(const Corpus& c, const std::vector<std::size_t>& trials, const Standardizer& st, long cap,
                             std::uint64_t seed) {
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    for (auto i : trials) ranges.emplace_back(0, c.logs[i].ticks.size() - 1);
    const auto picks = sample_ticks(trials, ranges, cap, seed);
    const nn::Shape shape{static_cast<int>(c.spec.detector.channels.size()), c.spec.detector.timesteps(c.spec.rate)};
    auto d = allocate(shape, kSubtaskCount, picks.size());
    for (std::size_t j = 0; j < picks.size(); ++j) {
        const auto& p = picks[j];
        const auto col = static_cast<Eigen::Index>(j);
        store(d, col, c.signals[p.trial].detector_window(p.tick), st);
        d.targets(index_of(c.logs[p.trial].ticks[p.tick].subtask_true), col) = 1.0;
        d.groups[j] = static_cast<int>(p.trial);
    }
    return d;
}

nn::Dataset estimator_dataset(const Corpus& c, const std::vector<std::size_t>& trials, const Standardizer& st,
                              ProgressTarget target, long cap, std::uint64_t seed) {
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    for (auto i : trials) ranges.push_back(driving_range(c.logs[i]));
    const auto picks = sample_ticks(trials, ranges, cap, seed);
    const nn::Shape shape{static_cast<int>(c.spec.estimator.channels.size()), c.spec.estimator.timesteps(c.spec.rate)};
    auto d = allocate(shape, 1, picks.size());
    for (std::size_t j = 0; j < picks.size(); ++j) {
        const auto& p = picks[j];
        const auto col = static_cast<Eigen::Index>(j);
        store(d, col, c.signals[p.trial].estimator_window(p.tick), st);
        const auto& row = c.logs[p.trial].ticks[p.tick];
        d.targets(0, col) = target == ProgressTarget::Tau ? row.tau_true : row.lambda_true;
        d.groups[j] = static_cast<int>(p.trial);
    }
    return d;
}

SubtaskDetector train_detector(const Corpus& c, const std::vector<std::size_t>& trials_in, const DetectorTraining& s,
                               TrainingSummary* summary) {
    const auto trials = valid_only(c, trials_in);
    auto st = fit_detector_standardizer(c, trials);
    const auto data = detector_dataset(c, trials, st, s.max_windows, mix_seed(s.train.seed, 0xd0));
    auto net = make_detector_network(c.spec, s.hidden);
    net.l1 = s.l1;
    net.l2 = s.l2;
    net.init(mix_seed(s.train.seed, 0xd1));
    auto result = nn::train(net, data, s.train);
    if (summary) {
        summary->nn = result;
        summary->details = {{"windows", data.size()}, {"trials", trials.size()}};
    }
    return SubtaskDetector(c.spec, std::move(st), std::move(net));
}

namespace {

std::unique_ptr<ProgressModel> train_cnn(const Corpus& c, const std::vector<std::size_t>& trials,
                                         const EstimatorTraining& s, TrainingSummary* summary) {
    auto st = fit_estimator_standardizer(c, trials);
    const auto data = estimator_dataset(c, trials, st, s.target, s.max_windows, mix_seed(s.train.seed, 0xe0));
    auto net = make_regressor_network(c.spec);
    net.l1 = s.l1;
    net.l2 = s.l2;
    net.init(mix_seed(s.train.seed, 0xe1));
    auto result = nn::train(net, data, s.train);
    if (summary) {
        summary->nn = result;
        summary->details = {{"windows", data.size()}, {"trials", trials.size()}};
    }
    return std::make_unique<CnnProgress>(s.target, std::move(st), std::move(net));
}

std::unique_ptr<ProgressModel> train_gpr(const Corpus& c, const std::vector<std::size_t>& trials,
                                         const EstimatorTraining& s, TrainingSummary* summary) {
    auto st = fit_estimator_standardizer(c, trials);
    const auto data = estimator_dataset(c, trials, st, s.target, s.gpr_max_windows, mix_seed(s.gpr.seed, 0xf0));
    const Eigen::VectorXd y = data.targets.row(0).transpose();

    ExpKernel kernel{s.gpr.variance_init, s.gpr.length_init};
    nlohmann::json details = {{"windows", data.size()}, {"trials", trials.size()}};
    if (s.gpr.optimize) {
        // Hyperparameters from a uniform subset; the exact posterior uses every window.
        std::vector<long> idx(static_cast<std::size_t>(data.size()));
        std::iota(idx.begin(), idx.end(), 0L);
        std::mt19937_64 rng(mix_seed(s.gpr.seed, 0xf1));
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(static_cast<std::size_t>(std::min<long>(data.size(), s.gpr_optimize_windows)));
        std::sort(idx.begin(), idx.end());
        Eigen::MatrixXd sub(data.inputs.rows(), static_cast<Eigen::Index>(idx.size()));
        Eigen::VectorXd ysub(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t j = 0; j < idx.size(); ++j) {
            sub.col(static_cast<Eigen::Index>(j)) = data.inputs.col(idx[j]);
            ysub(static_cast<Eigen::Index>(j)) = y(idx[j]);
        }
        const auto hyper = optimize_hyperparameters(sub, ysub, s.gpr);
        kernel = hyper.kernel;
        details["optimize_windows"] = idx.size();
        details["lml_initial"] = hyper.lml_initial;
        details["lml"] = hyper.lml;
    }
    auto model = GPRModel::fit(data.inputs, y, kernel, s.gpr.alpha, s.gpr.center_targets);
    details["variance"] = model.kernel().variance;
    details["length_scale"] = model.kernel().length_scale;
    details["jitter"] = model.jitter();
    if (summary) summary->details = details;
    return std::make_unique<GprProgress>(s.target, std::move(st), std::move(model));
}

std::unique_ptr<ProgressModel> train_dtw(const Corpus& c, const std::vector<std::size_t>& trials,
                                         const EstimatorTraining& s, TrainingSummary* summary) {
    std::vector<Eigen::MatrixXd> seqs;
    std::vector<std::vector<double>> targets;
    for (auto i : trials) {
        const auto [d, cc] = driving_range(c.logs[i]);
        const auto& est = c.signals[i].estimator();
        Eigen::MatrixXd m(static_cast<Eigen::Index>(est.channel_count()), static_cast<Eigen::Index>(cc - d + 1));
        std::vector<double> prog;
        for (std::size_t k = d; k <= cc; ++k) {
            const auto smp = est.sample(k);
            for (std::size_t ch = 0; ch < smp.size(); ++ch)
                m(static_cast<Eigen::Index>(ch), static_cast<Eigen::Index>(k - d)) = smp[ch];
            const auto& row = c.logs[i].ticks[k];
            prog.push_back(s.target == ProgressTarget::Tau ? row.tau_true : row.lambda_true);
        }
        seqs.push_back(std::move(m));
        targets.push_back(std::move(prog));
    }
    auto tmpl = build_dtw_template(seqs, targets, s.dtw_length);
    if (summary) summary->details = {{"trials", trials.size()}, {"length", tmpl.length()}};
    return std::make_unique<DtwProgress>(s.target, std::move(tmpl), s.dtw_query_stride);
}

}  // namespace

std::unique_ptr<ProgressModel> train_progress_model(const Corpus& c, const std::vector<std::size_t>& trials_in,
                                                    const EstimatorTraining& s, TrainingSummary* summary) {
    const auto trials = valid_only(c, trials_in);
    switch (s.kind) {
        case ModelKind::Cnn: return train_cnn(c, trials, s, summary);
        case ModelKind::Gpr: return train_gpr(c, trials, s, summary);
        case ModelKind::Dtw: return train_dtw(c, trials, s, summary);
        case ModelKind::Mj:
            if (summary) summary->details = {{"trials", 0}};
            return std::make_unique<MjProgress>(s.target, s.mj);
    }
    throw ConfigError("unknown estimator kind");
}

namespace {
nlohmann::json train_json(const nn::TrainConfig& t) {
    return {{"batch", t.batch},
            {"learning_rate", t.learning_rate},
            {"decay", t.decay},
            {"epochs", t.epochs},
            {"validation_fraction", t.validation_fraction},
            {"patience", t.patience},
            {"optimizer", std::string(nn::to_string(t.optimizer))},
            {"seed", t.seed}};
}
}  // namespace

nlohmann::json to_json(const DetectorTraining& s) {
    return {{"hidden", s.hidden}, {"l1", s.l1}, {"l2", s.l2}, {"max_windows", s.max_windows}, {"train", train_json(s.train)}};
}

nlohmann::json to_json(const EstimatorTraining& s) {
    nlohmann::json j = {{"kind", std::string(to_string(s.kind))}, {"target", std::string(to_string(s.target))}};
    switch (s.kind) {
        case ModelKind::Cnn:
            j["l1"] = s.l1;
            j["l2"] = s.l2;
            j["max_windows"] = s.max_windows;
            j["train"] = train_json(s.train);
            break;
        case ModelKind::Gpr:
            j["alpha"] = s.gpr.alpha;
            j["restarts"] = s.gpr.restarts;
            j["max_windows"] = s.gpr_max_windows;
            j["optimize_windows"] = s.gpr_optimize_windows;
            j["center_targets"] = s.gpr.center_targets;
            j["seed"] = s.gpr.seed;
            break;
        case ModelKind::Dtw:
            j["length"] = s.dtw_length;
            j["query_stride"] = s.dtw_query_stride;
            break;
        case ModelKind::Mj:
            j["grid"] = s.mj.grid;
            break;
    }
    return j;
}

}  // namespace phri::est
