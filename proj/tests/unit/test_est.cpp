#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numeric>
#include <filesystem>
#include <fstream>
#include <random>

#include "fixtures.hpp"
#include "phri/core/errors.hpp"
#include "phri/est/artifact.hpp"
#include "phri/est/codec.hpp"
#include "phri/est/dtw.hpp"
#include "phri/est/features.hpp"
#include "phri/est/gpr.hpp"
#include "phri/est/mj.hpp"
#include "phri/est/nn.hpp"
#include "phri/est/pipeline.hpp"

using namespace phri;
using namespace phri::est;

TEST_CASE("codec round trip is bit exact") {
    std::vector<double> v = {0.0, -0.0, 1.0 / 3.0, 1e-310, -1e300, std::numeric_limits<double>::infinity(),
                             std::nan("")};
    const auto back = decode_doubles(encode_doubles(v.data(), v.size()));
    REQUIRE(back.size() == v.size());
    CHECK(std::memcmp(back.data(), v.data(), v.size() * sizeof(double)) == 0);
    CHECK(decode_doubles(encode_doubles(nullptr, 0)).empty());
    Eigen::MatrixXd m = Eigen::MatrixXd::Random(3, 5);
    CHECK(decode_matrix(encode_matrix(m)) == m);
    CHECK_THROWS(decode_doubles("abc"));
}

TEST_CASE("zero-weight classifier outputs a uniform distribution") {
    auto det = test::random_detector(1);
    for (auto* p : det.network().params()) p->value.setZero();
    const auto log = test::simulated_log(3);
    const auto sig = build_signals(log);
    const auto p = det.probabilities(sig, 1000);
    REQUIRE(p.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK(p(i) == 0.25);
}

TEST_CASE("small network memorizes a tiny dataset") {
    using namespace nn;
    Network net({2, 6}, Loss::MeanSquared);
    net.add(std::make_unique<Conv1D>(2, 4, 3));
    net.add(std::make_unique<Relu>());
    net.add(std::make_unique<Flatten>());
    net.add(std::make_unique<Dense>(16, 1));
    net.init(9);
    Dataset d;
    d.shape = {2, 6};
    d.inputs = Eigen::MatrixXd::Random(12, 8);
    d.targets = Eigen::MatrixXd::Random(1, 8);
    TrainConfig cfg;
    cfg.batch = 8;
    cfg.learning_rate = 1e-2;
    cfg.decay = 1.0;
    cfg.epochs = 3000;
    cfg.validation_fraction = 0.0;
    cfg.patience = 3000;
    train(net, d, cfg);
    std::vector<long> all(8);
    std::iota(all.begin(), all.end(), 0);
    CHECK(net.loss(make_batch(d, all, 0, 8), d.targets) < 1e-3);
}

TEST_CASE("network json round trip preserves outputs") {
    auto det = test::random_detector(4);
    const auto log = test::simulated_log(4);
    const auto sig = build_signals(log);
    const auto j = det.network().to_json();
    auto copy = nn::Network::from_json(j);
    SubtaskDetector det2(det.spec(), det.standardizer(), std::move(copy));
    for (std::size_t k : {0UL, 500UL, 2000UL, sig.size() - 1}) CHECK(det.probabilities(sig, k) == det2.probabilities(sig, k));
}

TEST_CASE("training aborts on a non-finite loss") {
    using namespace nn;
    Network net({1, 1}, Loss::MeanSquared);
    net.add(std::make_unique<Dense>(1, 1));
    net.init(1);
    Dataset d;
    d.shape = {1, 1};
    d.inputs = Eigen::MatrixXd::Constant(1, 4, 1e200);
    d.targets = Eigen::MatrixXd::Constant(1, 4, -1e200);
    TrainConfig cfg;
    cfg.learning_rate = 1e10;
    cfg.optimizer = Optimizer::Sgd;
    cfg.validation_fraction = 0.0;
    CHECK_THROWS_AS(train(net, d, cfg), TrainingAborted);
}

TEST_CASE("features: shapes, causality and acceleration of uniform motion") {
    TrialLog log;
    for (int k = 0; k < 600; ++k) {
        TickRecord r;
        r.t = k / 500.0;
        r.velocity = {0.1, 0.0, 0.0};
        r.position = {0.1 * r.t, 0.0, 0.0};
        r.f_h = {2.0, 0.0, 0.0};
        r.f_int = r.f_h;
        log.ticks.push_back(r);
    }
    const auto sig = build_signals(log);
    CHECK(sig.size() == 600);
    const auto dw = sig.detector_window(599);
    const auto ew = sig.estimator_window(599);
    CHECK(dw.rows() == 3);
    CHECK(dw.cols() == 63);
    CHECK(ew.rows() == 2);
    CHECK(ew.cols() == 125);
    CHECK(dw(0, 62) == doctest::Approx(0.1));
    CHECK(dw(2, 62) == doctest::Approx(2.0));
    CHECK(std::abs(ew(1, 124)) < 1e-12);
}

TEST_CASE("minimum-jerk shape") {
    CHECK(mj_shape(1.0) == 1.0);
    CHECK(mj_shape(0.5) == doctest::Approx(0.5));
    CHECK(mj_shape(0.0) == 0.0);
    CHECK(mj_shape(2.0) == 1.0);
    std::vector<Vec3> few(5);
    CHECK_FALSE(mj_fit(few, 0.002));
}

TEST_CASE("minimum-jerk fit recovers duration and displacement") {
    const double td = 2.2, dt = 0.01;
    const Vec3 pf{0.15, -0.05, 0.02};
    std::vector<Vec3> pos;
    for (int k = 0; k * dt <= 0.6 * td; ++k) pos.push_back(pf * mj_shape(k * dt / td));
    const auto fit = mj_fit(pos, dt);
    REQUIRE(fit);
    CHECK(fit->t_d == doctest::Approx(td).epsilon(1e-6));
    CHECK((fit->p_f - pf).norm() < 1e-6);
}

TEST_CASE("open-end DTW trivial matches") {
    Eigen::MatrixXd ref(2, 50);
    for (int i = 0; i < 50; ++i) {
        ref(0, i) = std::sin(i / 10.0);
        ref(1, i) = i / 49.0;
    }
    CHECK(dtw_progress(ref, ref) == 1.0);
    CHECK(dtw_progress(ref.leftCols(1), ref) == 0.0);
    DTWMatcher m(ref);
    m.push(ref.col(0));
    m.push(ref.col(1));
    m.push(ref.col(2));
    CHECK(m.best_index() == 2);
    m.reset();
    CHECK(m.size() == 0);
}

TEST_CASE("DTW template averages resampled sequences") {
    std::vector<Eigen::MatrixXd> seqs;
    std::vector<std::vector<double>> lams;
    for (int n : {80, 120, 150}) {
        Eigen::MatrixXd s(1, n);
        std::vector<double> l(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            s(0, i) = std::sin(M_PI * i / (n - 1));
            l[static_cast<std::size_t>(i)] = static_cast<double>(i) / (n - 1);
        }
        seqs.push_back(s);
        lams.push_back(l);
    }
    const auto t = build_dtw_template(seqs, lams, 100);
    CHECK(t.length() == 100);
    CHECK(t.lambda.front() == 0.0);
    CHECK(t.lambda.back() == doctest::Approx(1.0));
    const auto back = DTWTemplate::from_json(t.to_json());
    CHECK(back.sequence == t.sequence);
}

TEST_CASE("exponential kernel and interpolation limit") {
    const ExpKernel k{2.5, 0.7};
    CHECK(k(0.0) == 2.5);
    CHECK(k(0.7) == doctest::Approx(2.5 / M_E));
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 20);
    Eigen::VectorXd y = Eigen::VectorXd::Random(20);
    const auto m = GPRModel::fit(x, y, {1.0, 1.0}, 1e-10, false);
    for (int i = 0; i < 20; ++i) CHECK(m.predict_mean(x.col(i)) == doctest::Approx(y(i)).epsilon(1e-6));
    const auto back = GPRModel::from_json(m.to_json());
    CHECK(back.predict_mean(x.col(3)) == m.predict_mean(x.col(3)));
}

TEST_CASE("log marginal likelihood gradient matches finite differences") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(2, 30);
    Eigen::VectorXd y = Eigen::VectorXd::Random(30);
    const auto d = pairwise_distances(x, x);
    const double lv = std::log(0.8), ll = std::log(0.6), h = 1e-5;
    const auto at = [&](double a, double b) {
        return log_marginal_likelihood(d, y, {std::exp(a), std::exp(b)}, 0.3, false).value;
    };
    const auto g = log_marginal_likelihood(d, y, {std::exp(lv), std::exp(ll)}, 0.3, true);
    CHECK(g.d_log_variance == doctest::Approx((at(lv + h, ll) - at(lv - h, ll)) / (2 * h)).epsilon(1e-6));
    CHECK(g.d_log_length == doctest::Approx((at(lv, ll + h) - at(lv, ll - h)) / (2 * h)).epsilon(1e-6));
}

TEST_CASE("artifact round trip and feature spec checks") {
    const auto dir = std::filesystem::temp_directory_path() / "phri_artifact_test";
    std::filesystem::create_directories(dir);
    const auto det = test::random_detector(8);
    const auto cnn = test::random_cnn(8);
    save_detector(dir / "detector.json", det, {{"hidden", 8}}, 0xabcULL);
    save_estimator(dir / "estimator.json", *cnn, det.spec(), {}, 0xabcULL);

    const auto info = read_artifact_info(dir / "estimator.json");
    CHECK(info.role == "estimator");
    CHECK(info.kind == "cnn");
    CHECK(info.target == "lambda");
    CHECK(info.manifest_hash == hash_hex(0xabcULL));

    const auto log = test::simulated_log(8);
    const auto sig = build_signals(log);
    const FeatureSpec spec;
    const auto det2 = load_detector(dir / "detector.json", &spec);
    CHECK(det2.probabilities(sig, 1200) == det.probabilities(sig, 1200));
    auto est2 = load_estimator(dir / "estimator.json", &spec);
    auto cnn_copy = cnn->clone();
    CHECK(est2->predict(sig, 1200, std::nullopt) == cnn_copy->predict(sig, 1200, std::nullopt));

    FeatureSpec other;
    other.estimator.downsample = 16;
    CHECK_THROWS_AS(load_estimator(dir / "estimator.json", &other), ConfigError);
    CHECK_THROWS_AS(load_detector(dir / "detector.json", &other), ConfigError);

    std::ofstream(dir / "broken.json") << "{\"format\": \"phri-model\", \"version\": 1";
    CHECK_THROWS_AS(load_detector(dir / "broken.json"), FormatError);
    CHECK_THROWS_AS(load_detector(dir / "estimator.json"), FormatError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("pipeline inference sees only past samples") {
    const auto log = test::simulated_log(21);
    PipelineSettings s;
    IntentPipeline p(test::random_detector(2), test::random_cnn(2), s);
    for (std::size_t k = 0; k < log.ticks.size(); ++k) p.step(log.ticks[k], k);
    const auto& audit = p.audit();
    REQUIRE(audit.size() == (log.ticks.size() + 9) / 10);

    // Rebuild every audited window from the prefix that ends at its source tick.
    TrialSignals prefix;
    std::size_t next = 0;
    for (const auto& rec : audit) {
        CHECK(rec.source_tick <= rec.tick);
        CHECK(rec.tick % 10 == 0);
        while (next <= rec.source_tick) prefix.push(log.ticks[next++]);
        CHECK(rec.detector_hash == window_hash(prefix.detector_window(rec.source_tick)));
        CHECK(rec.estimator_hash == window_hash(prefix.estimator_window(rec.source_tick)));
    }
}

TEST_CASE("pipeline withholds progress outside voted Driving") {
    const auto log = test::simulated_log(22);
    // An estimator is consulted from the first inference, before any Driving vote.
    IntentPipeline p(test::random_detector(3), test::random_cnn(3));
    const auto first = p.step(log.ticks[0], 0);
    CHECK(std::isfinite(first.progress_raw));
    for (std::size_t k = 1; k < log.ticks.size(); ++k) {
        const auto out = p.step(log.ticks[k], k);
        if (out.voted != Subtask::Driving) CHECK_FALSE(out.progress);
        else if (out.progress) {
            CHECK(*out.progress >= 0.0);
            CHECK(*out.progress <= 1.0);
        }
    }
}

TEST_CASE("asynchronous intent publishes results without blocking") {
    const auto log = test::simulated_log(23);
    AsyncIntent a(test::random_detector(5), test::random_cnn(5), {}, 500.0);
    IntentPipeline sync(test::random_detector(5), test::random_cnn(5));
    for (std::size_t k = 0; k < 400; ++k) {
        a.step(log.ticks[k], k);
        a.drain();
    }
    IntentOutput expect;
    for (std::size_t k = 0; k < 400; ++k) expect = sync.step(log.ticks[k], k);
    const auto got = a.step(log.ticks[400], 400);
    CHECK(got.voted == expect.voted);
    CHECK_FALSE(got.stale);
    a.reset();
    a.drain();
    CHECK(a.stale_count() == 0);
}
