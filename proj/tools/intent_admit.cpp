#include <csignal>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "phri/core/errors.hpp"
#include "phri/core/numfmt.hpp"
#include "phri/est/artifact.hpp"
#include "phri/exp/config.hpp"
#include "phri/exp/experiment.hpp"
#include "phri/exp/serve.hpp"

namespace fs = std::filesystem;
using namespace phri;

namespace {

struct Common {
    std::optional<fs::path> config;
    std::optional<std::uint64_t> seed;
    std::optional<fs::path> out;
    std::vector<std::string> overrides;
    std::optional<fs::path> dataset;
    std::optional<std::string> model;
    std::optional<std::string> cv;
    std::optional<std::string> controller;
    std::optional<std::string> target;
    std::optional<int> port;
};

exp::ExperimentConfig resolve(const Common& c, const char* kind = nullptr) {
    auto cfg = exp::load_config(c.config);
    exp::KeyValueDoc doc;
    if (kind) doc.set("kind", kind);
    for (const auto& o : c.overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got " + o);
        doc.set(std::string(phri::trim(std::string_view(o).substr(0, eq))), std::string(phri::trim(std::string_view(o).substr(eq + 1))));
    }
    if (c.seed) doc.set("seed", std::to_string(*c.seed));
    if (c.out) doc.set("out", c.out->string());
    if (c.dataset) doc.set("dataset", c.dataset->string());
    if (c.cv) doc.set("train.cv", *c.cv);
    if (c.controller) doc.set("run.controllers", *c.controller);
    if (c.target) doc.set("estimator.target", *c.target);
    if (c.port) doc.set("serve.port", std::to_string(*c.port));
    exp::apply(cfg, doc);
    return cfg;
}

/// --model names a directory holding detector.json and estimator.json.
void apply_model_dir(exp::ExperimentConfig& cfg, const Common& c) {
    if (!c.model) return;
    const fs::path dir(*c.model);
    cfg.detector_model = dir / "detector.json";
    cfg.estimator_model = dir / "estimator.json";
}

struct Models {
    est::SubtaskDetector detector;
    std::unique_ptr<est::ProgressModel> estimator;
};

Models load_models(const exp::ExperimentConfig& cfg) {
    auto det = est::load_detector(cfg.detector_path(), &cfg.features);
    auto estimator = est::load_estimator(cfg.estimator_path(), &cfg.features);
    return {std::move(det), std::move(estimator)};
}

void say(const std::string& s) { std::cerr << s << '\n'; }

void print_summary(const exp::Evaluation& e) {
    std::cout << exp::evaluation_json(e)["pooled"].dump(1) << '\n';
}

int serve(const exp::ExperimentConfig& cfg) {
    auto m = load_models(cfg);
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
    exp::TelemetryServer server(cfg, m.detector, *m.estimator, cfg.out / "serve");
    server.start();
    std::cout << "listening on ws://" << cfg.serve.bind << ':' << server.port() << std::endl;
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
    const auto st = server.stats();
    std::cout << "trials completed " << st.trials_completed << ", aborted " << st.trials_aborted << ", frames sent "
              << st.frames_sent << ", overruns " << st.overruns << " of " << st.ticks << " ticks\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Intent-driven variable admittance experiments"};
    app.require_subcommand(1);
    Common c;
    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", c.config, "Config file (default: $INTENT_ADMIT_CONFIG, else built-in defaults)");
        sub->add_option("--seed", c.seed, "Master seed");
        sub->add_option("--out", c.out, "Output directory");
        sub->add_option("--set", c.overrides, "Config override key=value (repeatable)");
    };

    auto* gen = app.add_subcommand("generate", "Experiment A: synthesize the labelled dataset");
    add_common(gen);

    auto* trn = app.add_subcommand("train", "Train the subtask detector and progress estimator");
    add_common(trn);
    trn->add_option("--dataset", c.dataset, "Dataset directory (default: <out>/dataset)");
    trn->add_option("--model", c.model, "Estimator kind: cnn, gpr, mj, dtw");
    trn->add_option("--cv", c.cv, "Cross-validation category: subject, distance, corner, iod, none");
    trn->add_option("--target", c.target, "Progress target: tau or lambda");

    auto* evl = app.add_subcommand("evaluate", "Score logged predictions of a dataset");
    add_common(evl);
    evl->add_option("--dataset", c.dataset, "Dataset directory (default: <out>/dataset)");
    evl->add_option("--target", c.target, "Progress target: tau or lambda");

    auto* run = app.add_subcommand("run", "Experiment B: closed-loop trials with trained models");
    add_common(run);
    run->add_option("--model", c.model, "Directory with detector.json and estimator.json (default: <out>/models)");
    run->add_option("--controller", c.controller, "Comma-separated controllers, e.g. C1,C2,C3");

    auto* rep = app.add_subcommand("replay", "Re-run inference over logged trials and re-score them");
    add_common(rep);
    rep->add_option("--dataset", c.dataset, "Dataset directory (default: <out>/dataset)");
    rep->add_option("--model", c.model, "Directory with detector.json and estimator.json (default: <out>/models)");

    auto* srv = app.add_subcommand("serve", "Live WebSocket session host for the operator console");
    add_common(srv);
    srv->add_option("--model", c.model, "Directory with detector.json and estimator.json (default: <out>/models)");
    srv->add_option("--controller", c.controller, "Controller for live trials (first entry is used)");
    srv->add_option("--port", c.port, "TCP port (0 picks a free one)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            auto cfg = resolve(c, "A");
            exp::GenerateStats st;
            const auto d = exp::generate(cfg, cfg.dataset_dir(), &st, say);
            std::cout << "dataset " << cfg.dataset_dir().string() << ": " << d.logs.size() << " valid of "
                      << st.conditions << " conditions, " << st.regenerated << " regenerated, " << st.excluded
                      << " excluded\n";
        } else if (trn->parsed()) {
            if (c.model) {
                c.overrides.push_back("estimator.kind=" + *c.model);
                c.model.reset();
            }
            auto cfg = resolve(c);
            const auto data = exp::load_dataset(cfg.dataset_dir());
            std::optional<eval::FoldCategory> cv;
            if (cfg.cv != "none") cv = eval::parse_fold_category(cfg.cv);
            const auto report = exp::train(cfg, data, cv, say);
            if (cv) {
                for (const auto& f : report["folds"]) {
                    std::cout << f["value"].get<std::string>() << ": ";
                    if (f.contains("error")) std::cout << "failed: " << f["error"].get<std::string>() << '\n';
                    else std::cout << f["evaluation"]["pooled"].dump() << '\n';
                }
            } else {
                std::cout << "models written to " << cfg.detector_path().string() << " and "
                          << cfg.estimator_path().string() << '\n'
                          << report["evaluation"]["pooled"].dump(1) << '\n';
            }
        } else if (evl->parsed()) {
            auto cfg = resolve(c);
            const auto data = exp::load_dataset(cfg.dataset_dir());
            const bool mixed = std::any_of(data.logs.begin(), data.logs.end(), [&](const TrialLog& l) {
                return l.meta.controller != data.logs.front().meta.controller;
            });
            const auto e = exp::evaluate_logs(data.logs, cfg, mixed ? exp::GroupBy::Controller : exp::GroupBy::None,
                                              cfg.estimator.target);
            exp::write_evaluation(e, cfg.out / "evaluate");
            print_summary(e);
        } else if (run->parsed()) {
            auto cfg = resolve(c, "B");
            apply_model_dir(cfg, c);
            const auto m = load_models(cfg);
            const auto r = exp::run_closed_loop(cfg, m.detector, *m.estimator, cfg.out / "run", say);
            print_summary(r.evaluation);
        } else if (rep->parsed()) {
            auto cfg = resolve(c);
            apply_model_dir(cfg, c);
            const auto m = load_models(cfg);
            const auto data = exp::load_dataset(cfg.dataset_dir());
            const auto e = exp::replay(cfg, data, m.detector, *m.estimator, cfg.out / "replay");
            print_summary(e);
        } else if (srv->parsed()) {
            auto cfg = resolve(c, "B");
            apply_model_dir(cfg, c);
            return serve(cfg);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
