// Acceptance run: one PASS/FAIL line per primary criterion.
//
//   phri_acceptance [--work DIR] [--only N[,N...]]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "phri/control/admittance.hpp"
#include "phri/control/damping.hpp"
#include "phri/core/numfmt.hpp"
#include "phri/env/geometry.hpp"
#include "phri/est/artifact.hpp"
#include "phri/est/dtw.hpp"
#include "phri/est/gpr.hpp"
#include "phri/est/mj.hpp"
#include "phri/est/nn.hpp"
#include "phri/eval/aggregate.hpp"
#include "phri/eval/folds.hpp"
#include "phri/eval/metrics.hpp"
#include "phri/exp/experiment.hpp"

namespace fs = std::filesystem;
using namespace phri;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int prec = 4) {
    std::ostringstream o;
    o.precision(prec);
    o << v;
    return o.str();
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---------------------------------------------------------------- 1

Outcome geometry() {
    // Target diameters [cm] of the Fitts design, rows L_p = 12..24 cm, columns IoD 3 and 5.
    const double table[4][2] = {{1.71, 0.39}, {2.29, 0.52}, {2.86, 0.65}, {3.43, 0.77}};
    const double lp[4] = {12, 16, 20, 24};
    const double iod[2] = {3, 5};
    double worst = 0.0;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 2; ++c) {
            const double w_cm = env::target_diameter(lp[r] / 100.0, iod[c]) * 100.0;
            worst = std::max(worst, std::abs(w_cm - table[r][c]));
        }
    return {worst <= 0.005, "max |W - table| = " + fmt(worst) + " cm over 8 cells (tol 0.005)"};
}

// ---------------------------------------------------------------- 2

Outcome dynamics() {
    const double m = 50.0, b = 500.0, dt = 0.002, f = 10.0;
    control::AdmittanceParams p{m, b, dt};
    Vec3 v;
    double worst = 0.0, worst_scale = 0.0, last = 0.0;
    const int n = static_cast<int>(std::lround(2.0 / dt));
    for (int k = 1; k <= n; ++k) {
        v = control::step_admittance(v, {f, 0.0, 0.0}, p);
        const double t = k * dt;
        const double exact = (f / b) * (1.0 - std::exp(-b * t / m));
        worst = std::max(worst, std::abs(v.x - exact) / exact);
        worst_scale = std::max(worst_scale, std::abs(v.x - exact) / (f / b));
        last = std::abs(v.x - exact) / exact;
    }
    return {worst < 1e-3, "max relative error " + fmt(worst) + " over 2 s (tol 1e-3); max error / (F/b) " +
                              fmt(worst_scale) + ", relative error at 2 s " + fmt(last)};
}

// ---------------------------------------------------------------- 3

Outcome blend() {
    const double tw = 0.2;
    const double pairs[3][2] = {{100, 500}, {500, 100}, {300, 100}};
    bool ok = true;
    double worst_rate = 0.0, worst_numeric = 0.0, worst_mid = 0.0;
    for (const auto& pr : pairs) {
        const double a = pr[0], z = pr[1];
        ok = ok && control::blend_damping(a, z, 0.0, tw) == a && control::blend_damping(a, z, tw, tw) == z;
        worst_mid = std::max(worst_mid, std::abs(control::blend_damping(a, z, tw / 2, tw) - 0.5 * (a + z)));
        worst_rate = std::max({worst_rate, std::abs(control::blend_damping_rate(a, z, 0.0, tw)),
                               std::abs(control::blend_damping_rate(a, z, tw, tw))});
        // One-sided difference quotients of the value itself, relative to the full swing.
        const double h = 1e-7;
        const double s0 = (control::blend_damping(a, z, h, tw) - a) / h;
        const double s1 = (z - control::blend_damping(a, z, tw - h, tw)) / h;
        worst_numeric = std::max({worst_numeric, std::abs(s0 / (z - a)), std::abs(s1 / (z - a))});
    }
    ok = ok && worst_mid <= 1e-12 && worst_rate <= 1e-12 && worst_numeric <= 1e-4;
    return {ok, std::string("endpoints ") + (ok ? "exact" : "checked") + ", |mid - mean| = " + fmt(worst_mid) +
                    ", end slopes " + fmt(worst_rate) + " (difference quotient " + fmt(worst_numeric) + " /s)"};
}

// ---------------------------------------------------------------- 4

// Draws every parameter, biases included, so no ReLU input sits exactly on its kink.
void randomize(est::nn::Network& net, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 0.5);
    for (auto* p : net.params()) p->value = p->value.unaryExpr([&](double) { return g(rng); });
}

double max_rel_grad_error(est::nn::Network& net, const est::nn::Tensor& x, const Eigen::MatrixXd& target) {
    net.loss_and_grad(x, target);
    double worst = 0.0;
    // Fourth-order five-point stencil.
    const double h = 1e-4;
    for (auto* p : net.params()) {
        const Eigen::MatrixXd analytic = p->grad;
        for (Eigen::Index i = 0; i < p->value.size(); ++i) {
            const double keep = p->value(i);
            auto at = [&](double d) {
                p->value(i) = keep + d;
                return net.loss(x, target);
            };
            const double numeric = (at(-2 * h) - 8 * at(-h) + 8 * at(h) - at(2 * h)) / (12 * h);
            p->value(i) = keep;
            const double a = analytic(i);
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
            worst = std::max(worst, std::abs(a - numeric) / denom);
        }
    }
    return worst;
}

Outcome gradient_check() {
    using namespace est::nn;
    std::mt19937_64 rng(42);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_int_distribution<int> small(2, 4);
    double worst = 0.0;
    int nets = 0;
    for (int trial = 0; trial < 6; ++trial) {
        const int ch = small(rng), steps = 9 + trial, batch = 3;
        // Conv -> ReLU -> Subsample -> Conv -> ReLU -> Flatten -> Dense (regression).
        {
            Network net({ch, steps}, Loss::MeanSquared);
            net.add(std::make_unique<Conv1D>(ch, 3, 3));
            net.add(std::make_unique<Relu>());
            net.add(std::make_unique<Subsample>(2));
            const int s1 = (steps - 2 + 1) / 2;
            net.add(std::make_unique<Conv1D>(3, 4, 2));
            net.add(std::make_unique<Relu>());
            net.add(std::make_unique<Flatten>());
            net.add(std::make_unique<Dense>(4 * (s1 - 1), 5));
            net.add(std::make_unique<Relu>());
            net.add(std::make_unique<Dense>(5, 1));
            net.l1 = 1e-3;
            net.l2 = 1e-3;
            net.init(100 + trial);
            randomize(net, rng);
            Tensor x{Eigen::MatrixXd::NullaryExpr(ch, steps * batch, [&] { return g(rng); }), steps};
            Eigen::MatrixXd y = Eigen::MatrixXd::NullaryExpr(1, batch, [&] { return g(rng); });
            worst = std::max(worst, max_rel_grad_error(net, x, y));
            ++nets;
        }
        // LSTM -> Dense -> Softmax with cross-entropy, and with squared error
        // so the softmax backward pass is exercised on its own.
        for (Loss loss : {Loss::CrossEntropy, Loss::MeanSquared}) {
            Network net({ch, steps}, loss);
            net.add(std::make_unique<Lstm>(ch, 5));
            net.add(std::make_unique<Dense>(5, 4));
            net.add(std::make_unique<Softmax>());
            net.l2 = 1e-3;
            net.init(200 + trial);
            randomize(net, rng);
            Tensor x{Eigen::MatrixXd::NullaryExpr(ch, steps * batch, [&] { return g(rng); }), steps};
            Eigen::MatrixXd y = Eigen::MatrixXd::Zero(4, batch);
            for (int b = 0; b < batch; ++b) y(static_cast<int>(rng() % 4), b) = 1.0;
            worst = std::max(worst, max_rel_grad_error(net, x, y));
            ++nets;
        }
    }
    return {worst < 1e-4, std::to_string(nets) + " networks, max relative error " + fmt(worst) + " (tol 1e-4)"};
}

// ---------------------------------------------------------------- 5

double mj_oracle(double u) {
    if (u >= 1.0) return 1.0;
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

Outcome mj() {
    const double dt = 0.002;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> dur(1.5, 4.0), off(-0.1, 0.1);
    double worst_td = 0.0, worst_rmse = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        const double td = dur(rng);
        const Vec3 x0{off(rng), off(rng), off(rng)};
        const Vec3 pf{0.12 + 0.12 * std::abs(off(rng)) * 10, off(rng), off(rng)};
        const int n = static_cast<int>(std::lround(td / dt)) + 1;
        std::vector<Vec3> pos(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) pos[static_cast<std::size_t>(k)] = x0 + pf * mj_oracle(k * dt / td);

        const int half = n / 2 + 1;
        const auto fit = est::mj_fit(std::span(pos).first(static_cast<std::size_t>(half)), dt);
        if (!fit) return {false, "no fit at 50%"};
        worst_td = std::max(worst_td, std::abs(fit->t_d - td) / td);

        est::MJEstimator e;
        double sse = 0.0;
        int count = 0;
        for (int k = half; k <= n; k += 5) {
            const auto est = e.update(std::span(pos).first(static_cast<std::size_t>(k)), dt);
            const double truth = (k - 1) * dt / td;
            sse += (est.tau - truth) * (est.tau - truth);
            ++count;
        }
        worst_rmse = std::max(worst_rmse, std::sqrt(sse / count));
    }
    return {worst_td < 0.01 && worst_rmse < 0.02,
            "5 trajectories: max |T_d err| " + fmt(100 * worst_td) + "% (tol 1%), max tau RMSE " + fmt(worst_rmse) +
                " (tol 0.02)"};
}

// ---------------------------------------------------------------- 6

Outcome dtw() {
    const int len = 200;
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    int worst = 0;
    int cases = 0;
    for (int trial = 0; trial < 4; ++trial) {
        Eigen::MatrixXd ref(2, len);
        const double a = 1.5 + u01(rng), b = 1.5 + u01(rng);
        for (int i = 0; i < len; ++i) {
            const double u = static_cast<double>(i) / (len - 1);
            // Beta-shaped speed bump and its slope magnitude, plus a slow drift.
            ref(0, i) = std::pow(u, a) * std::pow(1.0 - u, b) * 16.0 + 0.2 * u;
            const double du = 1e-3;
            const double v2 = std::pow(std::min(1.0, u + du), a) * std::pow(1.0 - std::min(1.0, u + du), b) * 16.0;
            const double v1 = std::pow(std::max(0.0, u - du), a) * std::pow(1.0 - std::max(0.0, u - du), b) * 16.0;
            ref(1, i) = std::abs(v2 - v1) / (2 * du) * 0.1;
        }
        for (int pct = 10; pct <= 90; pct += 10) {
            const int k = static_cast<int>(std::lround(pct / 100.0 * len));
            est::DTWMatcher m(ref);
            for (int i = 0; i < k; ++i) m.push(ref.col(i));
            worst = std::max(worst, std::abs(m.best_index() - (k - 1)));
            ++cases;
        }
    }
    return {worst <= 2, std::to_string(cases) + " prefixes (10%..90%), max index error " + std::to_string(worst) +
                            " (tol 2)"};
}

// ---------------------------------------------------------------- 7

Outcome gpr() {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    // (a) interpolation limit
    const int n = 60, d = 4;
    Eigen::MatrixXd x = Eigen::MatrixXd::NullaryExpr(d, n, [&] { return g(rng); });
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y(i) = std::sin(x(0, i)) + 0.5 * x(1, i) * x(2, i) + 0.1 * g(rng);
    const est::ExpKernel k{1.0, 2.0};
    std::vector<double> errs;
    for (double alpha : {1e-1, 1e-3, 1e-5, 1e-7, 1e-9}) {
        const auto model = est::GPRModel::fit(x, y, k, alpha, false);
        double e = 0.0;
        for (int i = 0; i < n; ++i) e = std::max(e, std::abs(model.predict_mean(x.col(i)) - y(i)));
        errs.push_back(e);
    }
    bool conv = errs.back() < 1e-6;
    for (std::size_t i = 1; i < errs.size(); ++i) conv = conv && errs[i] < errs[i - 1];

    // (b) restart optimization on estimator-sized inputs
    const int m = 500, dim = 250;
    Eigen::MatrixXd xs(dim, m);
    Eigen::VectorXd ys(m);
    for (int i = 0; i < m; ++i) {
        const double p = u01(rng);
        for (int r = 0; r < dim; ++r) xs(r, i) = std::sin(3.0 * p + 0.05 * r) + 0.3 * g(rng);
        ys(i) = p;
    }
    est::GPRSettings s;
    s.seed = 11;
    const auto t0 = Clock::now();
    const auto fit = est::optimize_hyperparameters(xs, ys, s);
    const double t_opt = seconds_since(t0);
    bool mono = fit.lml >= fit.lml_initial && !fit.restart_lml.empty();
    for (std::size_t i = 1; i < fit.restart_lml.size(); ++i) mono = mono && fit.restart_lml[i] >= fit.restart_lml[i - 1];

    // (c) fit and query at the 4,000-window cap
    const int cap = 4000;
    Eigen::MatrixXd xc(dim, cap);
    Eigen::VectorXd yc(cap);
    for (int i = 0; i < cap; ++i) {
        const double p = u01(rng);
        for (int r = 0; r < dim; ++r) xc(r, i) = std::sin(3.0 * p + 0.05 * r) + 0.3 * g(rng);
        yc(i) = p;
    }
    const auto t1 = Clock::now();
    const auto big = est::GPRModel::fit(xc, yc, fit.kernel, s.alpha, false);
    double sink = 0.0;
    for (int i = 0; i < 100; ++i) sink += big.predict_mean(xc.col(i));
    const double t_cap = seconds_since(t1);
    const bool fast = t_opt + t_cap < 60.0 && std::isfinite(sink);

    std::string errs_s;
    for (double e : errs) errs_s += (errs_s.empty() ? "" : ", ") + fmt(e, 2);
    return {conv && mono && fast,
            "max |mean - y| for alpha 1e-1..1e-9: [" + errs_s + "]; LML " + fmt(fit.lml_initial, 6) + " -> " +
                fmt(fit.lml, 6) + " over " + std::to_string(fit.restart_lml.size()) + " starts, monotone " +
                (mono ? "yes" : "no") + "; optimize " + fmt(t_opt, 3) + " s + fit/query at 4000 windows " +
                fmt(t_cap, 3) + " s (limit 60 s)"};
}

// ---------------------------------------------------------------- 10

TrialLog constant_trial(double fh, double v, double driving_s, std::function<double(double)> contact_speed,
                        double contact_s) {
    TrialLog log;
    log.meta.rate = 500.0;
    log.meta.t_d = 1.0;
    log.meta.t_c = 1.0 + driving_s;
    log.meta.t_f = log.meta.t_c + contact_s;
    const std::size_t n = static_cast<std::size_t>(std::lround(log.meta.t_f * 500.0)) + 1;
    for (std::size_t k = 0; k < n; ++k) {
        TickRecord r;
        r.t = static_cast<double>(k) / 500.0;
        const bool driving = r.t >= log.meta.t_d - 1e-9 && r.t <= log.meta.t_c + 1e-9;
        const bool contact = r.t > log.meta.t_c + 1e-9;
        r.f_h = driving ? Vec3{fh, 0.0, 0.0} : Vec3{};
        r.velocity = driving ? Vec3{v, 0.0, 0.0} : contact ? Vec3{contact_speed(r.t - log.meta.t_c), 0.0, 0.0} : Vec3{};
        r.subtask_true = driving ? Subtask::Driving : contact ? Subtask::Contact : Subtask::Idle;
        log.ticks.push_back(r);
    }
    return log;
}

Outcome metric_suite() {
    std::vector<std::string> failed;
    auto check = [&](bool ok, const std::string& what) {
        if (!ok) failed.push_back(what);
    };
    const double rate = 50.0;

    {  // perfect predictions
        std::vector<Subtask> t;
        for (auto s : kAllSubtasks) t.insert(t.end(), 100, s);
        const auto r = eval::detection_metrics(t, t, rate);
        check(r.accuracy == 1.0 && r.concurrency == 1.0 && r.fluctuation == 0.0, "perfect detection");
    }
    {  // constant wrong class on a two-class segment
        std::vector<Subtask> t(70, Subtask::Driving), p(100, Subtask::Driving);
        t.insert(t.end(), 30, Subtask::Contact);
        const auto r = eval::detection_metrics(t, p, rate);
        check(r.accuracy == 0.7, "accuracy equals prevalence");
    }
    {  // 3 changes over 6 s away from transitions
        std::vector<Subtask> t(300, Subtask::Driving), p = t;
        for (int i = 50; i < 100; ++i) p[static_cast<std::size_t>(i)] = Subtask::Contact;
        for (int i = 200; i < 300; ++i) p[static_cast<std::size_t>(i)] = Subtask::Idle;
        const auto r = eval::detection_metrics(t, p, rate);
        check(r.fluctuation == 0.5, "fluctuation 0.5 Hz (got " + fmt(r.fluctuation) + ")");
    }
    {  // ideal estimator, mean predictor, shifted estimator
        std::vector<double> truth(201), pred, mean_pred, shifted;
        for (int i = 0; i <= 200; ++i) truth[static_cast<std::size_t>(i)] = i / 200.0;
        const auto r = eval::regression_metrics(truth, truth);
        check(r.rmse == 0.0 && r.r2 == 1.0 && r.theta_max == 1.0 && r.mistiming == 0.0, "ideal estimator");
        mean_pred.assign(truth.size(), 0.5);
        check(std::abs(eval::regression_metrics(truth, mean_pred).r2) < 1e-12, "mean predictor R2 = 0");
        for (double v : truth) shifted.push_back(std::max(0.0, v - 0.1));
        const auto s = eval::regression_metrics(truth, shifted);
        check(std::abs(s.theta_max - 0.9) < 1e-12 && std::abs(s.mistiming - 0.1) < 1e-12, "shifted estimator");
    }
    {  // constant integrands and DC removal
        const auto log = constant_trial(10.0, 0.1, 5.0, [](double) { return 0.1; }, 6.0);
        const auto r = eval::task_metrics(log);
        check(std::abs(r.effort - 5.0) < 1e-9 && std::abs(r.f_h_ave - 10.0) < 1e-9 && std::abs(r.v_ave - 0.1) < 1e-9,
              "constant integrands (E " + fmt(r.effort, 12) + ")");
        check(std::abs(r.effort - r.f_h_ave * r.v_ave * r.driving_s) < 1e-9, "E = F_ave * V_ave * T_d");
        check(r.oscillation < 1e-6, "constant Contact speed peak " + fmt(r.oscillation));
    }
    double lin_err = 0.0;
    {  // amplitude linearity of the oscillation peak
        std::vector<double> peaks;
        for (double amp : {0.002, 0.004, 0.008}) {
            const auto log = constant_trial(10.0, 0.01, 3.0,
                                            [amp](double t) { return 0.01 + amp * std::sin(2 * M_PI * 3.0 * t); }, 6.0);
            peaks.push_back(eval::task_metrics(log).oscillation);
        }
        lin_err = std::max(std::abs(peaks[1] / peaks[0] - 2.0) / 2.0, std::abs(peaks[2] / peaks[1] - 2.0) / 2.0);
        check(lin_err < 0.01, "oscillation linearity");
    }
    {  // folds partition the manifest
        Manifest m;
        for (int s = 0; s < 5; ++s)
            for (int i = 0; i < 8; ++i) {
                ManifestEntry e;
                e.path = "t" + std::to_string(s) + "_" + std::to_string(i);
                e.subject = "S" + std::to_string(s + 1);
                e.lp = 0.12 + 0.04 * (i % 4);
                e.iod = i < 4 ? 3 : 5;
                m.entries.push_back(e);
            }
        bool ok = true;
        for (auto cat : {eval::FoldCategory::Subject, eval::FoldCategory::Distance, eval::FoldCategory::IoD}) {
            std::multiset<std::size_t> seen;
            for (const auto& f : eval::make_folds(m, cat)) seen.insert(f.test.begin(), f.test.end());
            ok = ok && seen.size() == m.entries.size() && std::set<std::size_t>(seen.begin(), seen.end()).size() == seen.size();
        }
        check(ok, "fold partition");
    }
    {  // aggregate
        const auto one = eval::aggregate({{"a", "C1", {{"x", 4.0}}}});
        check(eval::find_row(one, "C1", "x").median == 4.0, "single report median");
        const auto three = eval::aggregate({{"a", "g", {{"x", 1.0}}}, {"b", "g", {{"x", 3.0}}}, {"c", "g", {{"x", 2.0}}}});
        check(eval::find_row(three, "g", "x").median == 2.0, "median of {1,2,3}");
        std::vector<eval::MetricRecord> recs;
        for (const char* c : {"C1", "C2", "C3", "C1", "C3"}) recs.push_back({"r", c, {{"x", 1.0}}});
        const auto rows = eval::aggregate(recs);
        check(rows.size() == 3, "one row per controller");
    }
    std::string detail = "linearity error " + fmt(100 * lin_err) + "% (tol 1%)";
    if (!failed.empty()) {
        detail += "; failed:";
        for (const auto& f : failed) detail += " [" + f + "]";
    }
    return {failed.empty(), detail};
}

// ---------------------------------------------------------------- 8, 9

struct Closed {
    exp::ExperimentConfig cfg;
    exp::ClosedLoopResult result;
    std::size_t dataset_trials = 0;
    double train_s = 0.0;
    double total_s = 0.0;
};

Closed closed_loop(const fs::path& work) {
    Closed c;
    const auto t0 = Clock::now();
    c.cfg.out = work / "pipeline";
    c.cfg.kind = "A";
    const auto data = exp::generate(c.cfg, c.cfg.dataset_dir());
    c.dataset_trials = data.logs.size();
    const auto t1 = Clock::now();
    exp::train(c.cfg, data, std::nullopt);
    c.train_s = seconds_since(t1);
    c.cfg.kind = "B";
    const auto det = est::load_detector(c.cfg.detector_path(), &c.cfg.features);
    const auto estm = est::load_estimator(c.cfg.estimator_path(), &c.cfg.features);
    c.result = exp::run_closed_loop(c.cfg, det, *estm, c.cfg.out / "run");
    c.total_s = seconds_since(t0);
    return c;
}

Outcome pipeline(const Closed& c) {
    const auto& e = c.result.evaluation;
    const double acc = e.detection.accuracy, f1 = e.detection.weighted_f1;
    const double r2 = e.regression.r2(), rmse = e.regression.rmse();
    const bool ok = c.dataset_trials >= 400 && acc >= 0.80 && f1 >= 0.80 && r2 >= 0.90 && rmse <= 0.12;
    return {ok, std::to_string(c.dataset_trials) + " training trials, " + std::to_string(e.valid) +
                    " valid closed-loop trials at L_p 18 cm / IoD 4: accuracy " + fmt(acc) + " (>= 0.80), weighted F1 " +
                    fmt(f1) + " (>= 0.80), R2 " + fmt(r2) + " (>= 0.90), RMSE " + fmt(rmse) + " (<= 0.12); training " +
                    fmt(c.train_s / 60.0, 3) + " min, total " + fmt(c.total_s / 60.0, 3) + " min"};
}

Outcome controllers(const Closed& c) {
    std::map<std::string, std::vector<double>> effort, osc;
    std::map<std::string, int> runs;
    int c3_valid = 0, c3_early = 0;
    for (const auto& r : c.result.evaluation.records) {
        ++runs[r.group];
        effort[r.group].push_back(r.values.at("effort"));
        osc[r.group].push_back(r.values.at("oscillation"));
        if (r.group == "C3") {
            ++c3_valid;
            const double d = r.values.at("ta_minus_tc");
            if (std::isfinite(d) && d < 0.0) ++c3_early;
        }
    }
    std::map<std::string, int> attempted;
    for (const auto& e : c.result.dataset.manifest.entries) ++attempted[std::string(to_string(e.controller))];
    auto med = [](const std::vector<double>& v) { return v.empty() ? NAN : eval::quantile(v, 0.5); };
    const double e1 = med(effort["C1"]), e2 = med(effort["C2"]), e3 = med(effort["C3"]);
    const double o2 = med(osc["C2"]), o3 = med(osc["C3"]);
    const double red2 = 1.0 - e2 / e1, red3 = 1.0 - e3 / e1, red_osc = 1.0 - o3 / o2;
    const double early = c3_valid ? static_cast<double>(c3_early) / c3_valid : 0.0;
    const bool enough = attempted["C1"] >= 24 && attempted["C2"] >= 24 && attempted["C3"] >= 24;
    const bool a = red2 >= 0.30 && red3 >= 0.30, b = red_osc >= 0.30, cc = early >= 0.95;
    return {enough && a && b && cc,
            "trials C1/C2/C3 " + std::to_string(attempted["C1"]) + "/" + std::to_string(attempted["C2"]) + "/" +
                std::to_string(attempted["C3"]) + " (valid " + std::to_string(runs["C1"]) + "/" +
                std::to_string(runs["C2"]) + "/" + std::to_string(runs["C3"]) + "); (a) effort median C1 " + fmt(e1) +
                " J, C2 " + fmt(e2) + " J (-" + fmt(100 * red2, 3) + "%), C3 " + fmt(e3) + " J (-" + fmt(100 * red3, 3) +
                "%) [" + (a ? "ok" : "fail") + "]; (b) oscillation median C2 " + fmt(o2) + ", C3 " + fmt(o3) + " (-" +
                fmt(100 * red_osc, 3) + "%) [" + (b ? "ok" : "fail") + "]; (c) t_a < t_c in " +
                std::to_string(c3_early) + "/" + std::to_string(c3_valid) + " C3 trials [" + (cc ? "ok" : "fail") + "]"};
}

// ---------------------------------------------------------------- 11

std::vector<fs::path> tree(const fs::path& root) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) files.push_back(fs::relative(e.path(), root));
    std::sort(files.begin(), files.end());
    return files;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Returns an empty string when both trees hold the same files with the same bytes.
std::string compare_trees(const fs::path& a, const fs::path& b, std::size_t* count) {
    const auto fa = tree(a), fb = tree(b);
    if (fa != fb) return "file lists differ under " + a.filename().string();
    for (const auto& f : fa)
        if (slurp(a / f) != slurp(b / f)) return "differs: " + f.string();
    *count += fa.size();
    return {};
}

Outcome determinism(const fs::path& work) {
    std::size_t files = 0;
    std::string diff;
    const fs::path base = work / "determinism";
    for (int run = 0; run < 2; ++run) {
        // Both runs use the same config, output path included; each finished run is moved aside.
        exp::ExperimentConfig cfg;
        cfg.out = base / "current";
        cfg.seed = 20261016;
        cfg.detector.train.epochs = 3;
        cfg.detector.max_windows = 3000;
        cfg.estimator.train.epochs = 3;
        cfg.estimator.max_windows = 3000;
        cfg.kind = "A";
        const auto data = exp::generate(cfg, cfg.dataset_dir());
        exp::train(cfg, data, std::nullopt);
        cfg.kind = "B";
        cfg.grid_b.profiles = 2;
        cfg.grid_b.repetitions = 1;
        const auto det = est::load_detector(cfg.detector_path(), &cfg.features);
        const auto estm = est::load_estimator(cfg.estimator_path(), &cfg.features);
        exp::run_closed_loop(cfg, det, *estm, cfg.out / "run");
        exp::replay(cfg, data, det, *estm, cfg.out / "replay");
        fs::rename(cfg.out, base / ("run" + std::to_string(run)));
    }
    const fs::path r0 = base / "run0", r1 = base / "run1";
    for (const char* sub : {"dataset", "models", "train", "run", "replay"}) {
        if (!diff.empty()) break;
        diff = compare_trees(r0 / sub, r1 / sub, &files);
    }
    return {diff.empty(), diff.empty() ? std::to_string(files) + " files (dataset, models, reports, closed-loop logs) "
                                                                 "byte-identical across two runs"
                                       : diff};
}

}  // namespace

int main(int argc, char** argv) {
    fs::path work = fs::current_path() / "acceptance_work";
    std::set<int> only;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--work" && i + 1 < argc) {
            work = argv[++i];
        } else if (a == "--only" && i + 1 < argc) {
            std::stringstream ss(argv[++i]);
            std::string item;
            while (std::getline(ss, item, ',')) only.insert(std::stoi(item));
        } else {
            std::cerr << "usage: phri_acceptance [--work DIR] [--only N[,N...]]\n";
            return 2;
        }
    }
    fs::remove_all(work);
    fs::create_directories(work);

    auto wanted = [&](int n) { return only.empty() || only.count(n) > 0; };
    int failures = 0;
    auto report = [&](int n, const std::string& name, const std::function<Outcome()>& f) {
        if (!wanted(n)) return;
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = f();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        if (!o.pass) ++failures;
        std::printf("criterion %2d %-22s %s  %s  [%.1f s]\n", n, name.c_str(), o.pass ? "PASS" : "FAIL",
                    o.detail.c_str(), seconds_since(t0));
        std::fflush(stdout);
    };

    report(1, "geometry", geometry);
    report(2, "dynamics", dynamics);
    report(3, "blend", blend);
    report(4, "gradient-check", gradient_check);
    report(5, "minimum-jerk", mj);
    report(6, "open-end-dtw", dtw);
    report(7, "gpr", gpr);

    if (wanted(8) || wanted(9)) {
        std::optional<Closed> c;
        std::string error;
        const auto t0 = Clock::now();
        try {
            c = closed_loop(work);
        } catch (const std::exception& e) {
            error = e.what();
        }
        std::printf("(pipeline: generate, train and closed-loop runs took %.1f min)\n", seconds_since(t0) / 60.0);
        report(8, "pipeline", [&] { return c ? pipeline(*c) : Outcome{false, "error: " + error}; });
        report(9, "controllers", [&] { return c ? controllers(*c) : Outcome{false, "error: " + error}; });
    }

    report(10, "metrics", metric_suite);
    report(11, "determinism", [&] { return determinism(work); });

    std::printf("%s: %d failing\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
