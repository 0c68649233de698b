#include "phri/exp/experiment.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "phri/core/errors.hpp"
#include "phri/core/hash.hpp"
#include "phri/core/numfmt.hpp"
#include "phri/est/pipeline.hpp"
#include "phri/exp/simulator.hpp"

namespace phri::exp {

namespace fs = std::filesystem;

std::vector<human::SubjectProfile> subject_profiles(const ExperimentConfig& cfg, int count) {
    return human::sample_profiles({}, count, mix_seed(cfg.seed, 0x5ULL));
}

std::string trial_file_name(const TrialMeta& m) {
    std::string s = std::string(to_string(m.controller)) + "_" + m.subject + "_lp" + format_double(m.lp) + "_c" +
                    std::to_string(m.corner) + "_iod" + format_double(m.iod) + "_r" + std::to_string(m.repetition) +
                    ".csv";
    return s;
}

namespace {

void write_text(const fs::path& file, const std::string& text) {
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary);
    if (!out) throw FormatError("cannot write " + file.string());
    out << text;
}

template <typename F>
void for_each_condition(const ConditionGrid& g, const std::vector<human::SubjectProfile>& profiles, F&& f) {
    std::size_t idx = 0;
    for (const auto& p : profiles)
        for (double lp : g.lp)
            for (double iod : g.iod)
                for (int corner : g.corners)
                    for (int rep = 0; rep < g.repetitions; ++rep) f(idx++, p, lp, iod, corner, rep);
}

double flag_value(bool b) { return b ? 1.0 : 0.0; }

}  // namespace

Dataset generate(const ExperimentConfig& cfg, const fs::path& dir, GenerateStats* stats, const Progress& progress) {
    if (cfg.kind != "A") throw ConfigError("generate needs an experiment A config (kind = A)");
    Dataset d;
    d.dir = dir;
    GenerateStats st;
    nlohmann::json excluded = nlohmann::json::array();
    const auto profiles = subject_profiles(cfg, cfg.grid_a.profiles);
    for_each_condition(cfg.grid_a, profiles, [&](std::size_t idx, const human::SubjectProfile& p, double lp, double iod,
                                                 int corner, int rep) {
        ++st.conditions;
        const auto base = mix_seed(mix_seed(cfg.seed, 0xAULL), idx);
        std::vector<std::string> reasons;
        for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
            if (attempt > 0) ++st.regenerated;
            TrialSpec spec{p, lp, corner, iod, ControllerId::C2, rep, attempt_seed(base, attempt)};
            est::GroundTruthIntent truth;
            auto log = simulate_trial(spec, cfg.sim, truth);
            if (!log.meta.valid) {
                reasons.push_back(log.meta.flags.empty() ? "invalid" : log.meta.flags.front());
                continue;
            }
            log.meta.extra["attempt"] = std::to_string(attempt);
            const auto name = trial_file_name(log.meta);
            d.manifest.entries.push_back(manifest_entry_for(log.meta, "trials/" + name));
            d.logs.push_back(std::move(log));
            return;
        }
        ++st.excluded;
        excluded.push_back({{"subject", p.id}, {"lp", lp}, {"iod", iod}, {"corner", corner}, {"repetition", rep},
                            {"reasons", reasons}});
        if (progress) progress("excluded " + p.id + " lp=" + format_double(lp) + " corner " + std::to_string(corner));
    });
    save_dataset(d);
    write_text(dir / "config.conf", dump(cfg));
    nlohmann::json gen = {{"conditions", st.conditions}, {"valid", d.logs.size()}, {"regenerated", st.regenerated},
                          {"excluded", excluded}};
    write_text(dir / "generation.json", gen.dump(1) + "\n");
    if (progress) progress("generated " + std::to_string(d.logs.size()) + " valid trials");
    if (stats) *stats = st;
    return d;
}

void save_dataset(const Dataset& d) {
    if (d.logs.size() != d.manifest.entries.size()) throw FormatError("dataset manifest and logs differ in size");
    for (std::size_t i = 0; i < d.logs.size(); ++i) save_trial_log(d.logs[i], d.dir / d.manifest.entries[i].path);
    d.manifest.save(d.dir / "manifest.csv");
}

Dataset load_dataset(const fs::path& dir) {
    Dataset d;
    d.dir = dir;
    d.manifest = Manifest::load(dir / "manifest.csv");
    d.logs.reserve(d.manifest.entries.size());
    for (const auto& e : d.manifest.entries) d.logs.push_back(load_trial_log(dir / e.path));
    return d;
}

TrialLog replay_log(const TrialLog& log, const est::SubtaskDetector& detector, const est::ProgressModel& estimator,
                    const est::PipelineSettings& s) {
    if (std::abs(log.meta.rate - detector.spec().rate) > 1e-9)
        throw ConfigError("log rate does not match the model feature spec");
    est::IntentPipeline pipe(detector, estimator.clone(), s);
    pipe.keep_audit = false;
    TrialLog out = log;
    for (std::size_t k = 0; k < out.ticks.size(); ++k) {
        const auto o = pipe.step(log.ticks[k], k);
        out.ticks[k].subtask_pred = o.voted;
        out.ticks[k].progress_pred = o.progress_raw;
    }
    return out;
}

Evaluation evaluate_logs(const std::vector<TrialLog>& logs, const ExperimentConfig& cfg, GroupBy group,
                         est::ProgressTarget target) {
    Evaluation e;
    std::vector<eval::DetectionReport> dets;
    for (const auto& log : logs) {
        if (!log.meta.valid) {
            ++e.invalid;
            continue;
        }
        ++e.valid;
        std::vector<Subtask> truth, pred;
        truth.reserve(log.ticks.size());
        pred.reserve(log.ticks.size());
        for (const auto& r : log.ticks) {
            truth.push_back(r.subtask_true);
            pred.push_back(r.subtask_pred);
        }
        const auto det = eval::detection_metrics(truth, pred, log.meta.rate, cfg.transition_window_s);
        dets.push_back(det);
        const auto ds = eval::driving_series(log, target == est::ProgressTarget::Lambda);
        const auto reg = eval::regression_metrics(ds.truth, ds.pred);
        for (std::size_t i = 0; i < ds.truth.size(); ++i) e.regression.add(ds.truth[i], ds.pred[i]);
        const auto task = eval::task_metrics(log, cfg.oscillation);

        eval::MetricRecord r;
        r.id = trial_file_name(log.meta);
        switch (group) {
            case GroupBy::Controller: r.group = std::string(to_string(log.meta.controller)); break;
            case GroupBy::Subject: r.group = log.meta.subject; break;
            case GroupBy::None: r.group = "all"; break;
        }
        const bool adapted = std::isfinite(log.meta.t_a);
        r.values = {{"accuracy", det.accuracy},
                    {"weighted_f1", det.weighted_f1},
                    {"concurrency", det.concurrency},
                    {"fluctuation_hz", det.fluctuation},
                    {"rmse", reg.rmse},
                    {"r2", reg.r2},
                    {"theta_max", reg.theta_max},
                    {"mistiming", reg.mistiming},
                    {"f_h_ave", task.f_h_ave},
                    {"v_ave", task.v_ave},
                    {"effort", task.effort},
                    {"oscillation", task.oscillation},
                    {"oscillation_hz", task.oscillation_hz},
                    {"driving_s", task.driving_s},
                    {"contact_s", task.contact_s},
                    {"single_frame", flag_value(task.single_frame)},
                    {"impact_speed", log.ticks.at(log.tick_of(log.meta.t_c)).velocity.norm()},
                    {"adapted", flag_value(adapted)},
                    {"early_adaptation", flag_value(adapted && log.meta.t_a < log.meta.t_c)},
                    {"ta_minus_tc", adapted ? log.meta.t_a - log.meta.t_c : kNoEvent}};
        e.records.push_back(std::move(r));
    }
    e.detection = eval::pool_detection(dets);
    e.summary = e.records.empty() ? std::vector<eval::SummaryRow>{} : eval::aggregate(e.records);
    return e;
}

nlohmann::json evaluation_json(const Evaluation& e) {
    nlohmann::json conf = nlohmann::json::array();
    for (const auto& row : e.detection.confusion) conf.push_back(row);
    return {{"valid_trials", e.valid},
            {"invalid_trials", e.invalid},
            {"pooled",
             {{"accuracy", e.detection.accuracy},
              {"weighted_f1", e.detection.weighted_f1},
              {"concurrency", e.detection.concurrency},
              {"fluctuation_hz", e.detection.fluctuation},
              {"confusion", conf},
              {"rmse", e.regression.rmse()},
              {"r2", e.regression.r2()},
              {"regression_samples", e.regression.n}}},
            {"summary", eval::summary_json(e.summary)}};
}

void write_evaluation(const Evaluation& e, const fs::path& dir) {
    fs::create_directories(dir);
    eval::write_records_csv(e.records, dir / "records.csv");
    eval::write_summary_csv(e.summary, dir / "summary.csv");
    write_text(dir / "summary.json", evaluation_json(e).dump(1) + "\n");
}

namespace {

nlohmann::json history_json(const est::nn::TrainResult& r) {
    nlohmann::json h = nlohmann::json::array();
    for (const auto& x : r.history)
        h.push_back({{"epoch", x.epoch}, {"train_loss", x.train_loss}, {"val_loss", x.val_loss}, {"lr", x.learning_rate}});
    return {{"best_epoch", r.best_epoch}, {"best_val_loss", r.best_val_loss}, {"stopped_early", r.stopped_early},
            {"history", h}};
}

Manifest subset(const Manifest& m, const std::vector<std::size_t>& idx) {
    Manifest out;
    for (auto i : idx) out.entries.push_back(m.entries[i]);
    return out;
}

std::vector<TrialLog> replay_all(const std::vector<TrialLog>& logs, const std::vector<std::size_t>& idx,
                                 const est::SubtaskDetector& det, const est::ProgressModel& estimator,
                                 const est::PipelineSettings& s) {
    std::vector<TrialLog> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(replay_log(logs[i], det, estimator, s));
    return out;
}

}  // namespace

TrainedModels train_models(const ExperimentConfig& cfg, const est::Corpus& corpus, const std::vector<std::size_t>& trials) {
    auto ds = cfg.detector;
    ds.train.seed = mix_seed(cfg.seed, 0xde7ULL);
    auto es = cfg.estimator;
    es.train.seed = mix_seed(cfg.seed, 0xe57ULL);
    es.gpr.seed = mix_seed(cfg.seed, 0x69aULL);
    est::TrainingSummary dsum, esum;
    auto det = est::train_detector(corpus, trials, ds, &dsum);
    auto estimator = est::train_progress_model(corpus, trials, es, &esum);
    nlohmann::json report = {{"detector", {{"hyperparameters", est::to_json(ds)}, {"details", dsum.details},
                                           {"training", history_json(dsum.nn)}}},
                             {"estimator", {{"hyperparameters", est::to_json(es)}, {"details", esum.details}}}};
    if (es.kind == est::ModelKind::Cnn) report["estimator"]["training"] = history_json(esum.nn);
    return {std::move(det), std::move(estimator), std::move(report)};
}

nlohmann::json train(const ExperimentConfig& cfg, const Dataset& data, std::optional<eval::FoldCategory> cv,
                     const Progress& progress) {
    const auto corpus = est::make_corpus(data.logs, cfg.features);
    const auto target = cfg.estimator.target;
    if (!cv) {
        std::vector<std::size_t> all(corpus.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        if (progress) progress("training on " + std::to_string(all.size()) + " trials");
        auto m = train_models(cfg, corpus, all);
        const auto hash = data.manifest.fingerprint();
        est::save_detector(cfg.detector_path(), m.detector, m.report["detector"]["hyperparameters"], hash);
        est::save_estimator(cfg.estimator_path(), *m.estimator, cfg.features, m.report["estimator"]["hyperparameters"],
                            hash);
        const auto replayed = replay_all(data.logs, all, m.detector, *m.estimator, cfg.pipeline);
        const auto ev = evaluate_logs(replayed, cfg, GroupBy::None, target);
        write_evaluation(ev, cfg.out / "train");
        m.report["evaluation"] = evaluation_json(ev);
        m.report["manifest_hash"] = est::hash_hex(hash);
        write_text(cfg.out / "train" / "training.json", m.report.dump(1) + "\n");
        return m.report;
    }

    const auto folds = eval::make_folds(data.manifest, *cv);
    const auto root = cfg.out / "cv" / std::string(eval::to_string(*cv));
    nlohmann::json report = {{"category", std::string(eval::to_string(*cv))}, {"folds", nlohmann::json::array()}};
    std::vector<eval::MetricRecord> fold_records;
    for (const auto& f : folds) {
        const auto fdir = root / f.value;
        nlohmann::json fr = {{"value", f.value}, {"train_trials", f.train.size()}, {"test_trials", f.test.size()}};
        if (progress) progress("fold " + f.value + ": " + std::to_string(f.train.size()) + " train / " +
                               std::to_string(f.test.size()) + " test");
        try {
            auto m = train_models(cfg, corpus, f.train);
            const auto fm = subset(data.manifest, f.train);
            fm.save(fdir / "train_manifest.csv");
            const auto hash = fm.fingerprint();
            est::save_detector(fdir / "detector.json", m.detector, m.report["detector"]["hyperparameters"], hash);
            est::save_estimator(fdir / "estimator.json", *m.estimator, cfg.features,
                                m.report["estimator"]["hyperparameters"], hash);
            const auto replayed = replay_all(data.logs, f.test, m.detector, *m.estimator, cfg.pipeline);
            const auto ev = evaluate_logs(replayed, cfg, GroupBy::None, target);
            write_evaluation(ev, fdir);
            fr["training"] = m.report;
            fr["evaluation"] = evaluation_json(ev);
            eval::MetricRecord rec;
            rec.id = f.value;
            rec.group = std::string(eval::to_string(*cv));
            rec.values = {{"accuracy", ev.detection.accuracy},     {"weighted_f1", ev.detection.weighted_f1},
                          {"concurrency", ev.detection.concurrency}, {"fluctuation_hz", ev.detection.fluctuation},
                          {"rmse", ev.regression.rmse()},            {"r2", ev.regression.r2()}};
            for (const char* k : {"theta_max", "mistiming"})
                rec.values[k] = eval::find_row(ev.summary, "all", k).median;
            fold_records.push_back(std::move(rec));
        } catch (const std::exception& e) {
            fr["error"] = e.what();
            if (progress) progress("fold " + f.value + " failed: " + e.what());
        }
        report["folds"].push_back(fr);
    }
    eval::write_records_csv(fold_records, root / "folds.csv");
    write_text(root / "report.json", report.dump(1) + "\n");
    return report;
}

void write_audit(const std::vector<est::InferenceRecord>& audit, const fs::path& file) {
    std::string s = "tick,source_tick,detector_hash,estimator_hash\n";
    for (const auto& a : audit)
        s += std::to_string(a.tick) + ',' + std::to_string(a.source_tick) + ',' + est::hash_hex(a.detector_hash) + ',' +
             est::hash_hex(a.estimator_hash) + '\n';
    write_text(file, s);
}

std::vector<est::InferenceRecord> read_audit(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw FormatError("cannot open audit " + file.string());
    std::string line;
    std::getline(in, line);
    std::vector<est::InferenceRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string a, b, c, d;
        std::getline(ss, a, ',');
        std::getline(ss, b, ',');
        std::getline(ss, c, ',');
        std::getline(ss, d, ',');
        est::InferenceRecord r;
        r.tick = static_cast<std::size_t>(parse_int(a));
        r.source_tick = static_cast<std::size_t>(parse_int(b));
        r.detector_hash = std::stoull(c, nullptr, 16);
        r.estimator_hash = std::stoull(d, nullptr, 16);
        out.push_back(r);
    }
    return out;
}

ClosedLoopResult run_closed_loop(const ExperimentConfig& cfg, const est::SubtaskDetector& detector,
                                 const est::ProgressModel& estimator, const fs::path& dir, const Progress& progress) {
    if (cfg.kind != "B") throw ConfigError("closed-loop runs need an experiment B config (kind = B)");
    if (!(detector.spec() == cfg.features)) throw ConfigError("detector feature spec does not match the config");
    ClosedLoopResult res;
    res.dataset.dir = dir;
    const auto profiles = subject_profiles(cfg, cfg.grid_b.profiles);
    for (const auto ctrl : cfg.controllers) {
        est::IntentPipeline pipe(detector, estimator.clone(), cfg.pipeline);
        std::size_t done = 0;
        for_each_condition(cfg.grid_b, profiles, [&](std::size_t idx, const human::SubjectProfile& p, double lp,
                                                     double iod, int corner, int rep) {
            TrialSpec spec{p, lp, corner, iod, ctrl, rep, mix_seed(mix_seed(cfg.seed, 0xBULL), idx)};
            auto log = simulate_trial(spec, cfg.sim, pipe);
            const auto name = trial_file_name(log.meta);
            write_audit(pipe.audit(), dir / "audit" / (name.substr(0, name.size() - 4) + ".audit.csv"));
            res.dataset.manifest.entries.push_back(manifest_entry_for(log.meta, "trials/" + name));
            res.dataset.logs.push_back(std::move(log));
            ++done;
        });
        if (progress) progress(std::string(to_string(ctrl)) + ": " + std::to_string(done) + " trials");
    }
    save_dataset(res.dataset);
    write_text(dir / "config.conf", dump(cfg));
    res.evaluation = evaluate_logs(res.dataset.logs, cfg, GroupBy::Controller, estimator.target());
    write_evaluation(res.evaluation, dir / "reports");
    return res;
}

Evaluation replay(const ExperimentConfig& cfg, const Dataset& data, const est::SubtaskDetector& detector,
                  const est::ProgressModel& estimator, const fs::path& dir) {
    if (!(detector.spec() == cfg.features)) throw ConfigError("detector feature spec does not match the config");
    std::vector<std::size_t> all(data.logs.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    Dataset out;
    out.dir = dir;
    out.manifest = data.manifest;
    out.logs = replay_all(data.logs, all, detector, estimator, cfg.pipeline);
    save_dataset(out);
    const bool mixed = std::any_of(data.logs.begin(), data.logs.end(), [&](const TrialLog& l) {
        return l.meta.controller != data.logs.front().meta.controller;
    });
    auto ev = evaluate_logs(out.logs, cfg, mixed ? GroupBy::Controller : GroupBy::None, estimator.target());
    write_evaluation(ev, dir / "reports");
    return ev;
}

}  // namespace phri::exp
