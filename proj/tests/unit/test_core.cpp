#include <doctest.h>

#include <random>
#include <sstream>

#include "phri/core/errors.hpp"
#include "phri/core/numfmt.hpp"
#include "phri/core/trial_log.hpp"
#include "phri/core/window.hpp"

using namespace phri;

namespace {

TrialLog tiny_log() {
    TrialLog log;
    log.meta.subject = "S2";
    log.meta.lp = 0.16;
    log.meta.corner = 3;
    log.meta.iod = 5;
    log.meta.controller = ControllerId::C3;
    log.meta.seed = 18446744073709551557ULL;
    log.meta.t_d = 0.004;
    log.meta.t_c = 0.008;
    log.meta.t_f = 0.010;
    log.meta.flags = {"stale"};
    log.meta.extra["attempt"] = "2";
    for (int k = 0; k < 6; ++k) {
        TickRecord r;
        r.t = k * 0.002;
        r.position = {0.1 * k, -1.0 / 3.0, 1e-17};
        r.velocity = {0.5, 0.0, -0.25};
        r.f_h = {1.0 / 7.0, 2.0, 3.0};
        r.f_env = {-0.5, 0.0, 0.0};
        r.f_int = r.f_h + r.f_env;
        r.damping = 300.0;
        r.subtask_true = subtask_from_index(std::min(k, 3));
        r.subtask_pred = Subtask::Driving;
        r.tau_true = k / 5.0;
        r.lambda_true = k / 5.0;
        r.progress_pred = k == 0 ? kNoEvent : 0.1 * k;
        log.ticks.push_back(r);
    }
    return log;
}

}  // namespace

TEST_CASE("vector magnitudes") {
    CHECK(Vec3{}.norm() == 0.0);
    CHECK(Vec3{3, 4, 0}.norm() == 5.0);
    const Vec3 f_h{1, 0, 0}, f_env{-1, 0, 0};
    CHECK((f_h + f_env).norm() == 0.0);
}

TEST_CASE("window sizes at 500 Hz") {
    CHECK(detector_window_spec().timesteps(500.0) == 63);
    CHECK(estimator_window_spec().timesteps(500.0) == 125);
    CHECK(detector_window_spec().channels.size() == 3);
    CHECK(estimator_window_spec().channels.size() == 2);
}

TEST_CASE("window at tick 0 is zero padded except the last sample") {
    TimeSeries s({"a", "b"});
    const double v[2] = {2.0, -1.0};
    s.push(v);
    SlidingWindowSpec spec{0.5, 4, {"a", "b"}};
    const auto w = window(s, spec, 0);
    REQUIRE(w.cols() == 63);
    CHECK(w(0, 62) == 2.0);
    CHECK(w(1, 62) == -1.0);
    CHECK(w.leftCols(62).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("window keeps every stride-th sample ending at the current tick") {
    TimeSeries s({"a"});
    for (int k = 0; k < 400; ++k) {
        const double v = k;
        s.push(std::span(&v, 1));
    }
    SlidingWindowSpec spec{0.5, 4, {"a"}};
    const auto w = window(s, spec, 300);
    CHECK(w(0, 62) == 300.0);
    CHECK(w(0, 61) == 296.0);
    CHECK(w(0, 0) == 300.0 - 4 * 62);
}

TEST_CASE("time series rejects bad samples") {
    TimeSeries s({"a", "b"});
    const double one[1] = {1.0};
    CHECK_THROWS_AS(s.push(one), ConfigError);
    const double bad[2] = {1.0, std::nan("")};
    CHECK_THROWS_AS(s.push(bad), ConfigError);
}

TEST_CASE("decimal formatting round-trips every double") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::uint64_t> bits;
    for (int i = 0; i < 2000; ++i) {
        double v;
        const auto b = bits(rng);
        std::memcpy(&v, &b, sizeof v);
        if (!std::isfinite(v)) continue;
        CHECK(parse_double(format_double(v)) == v);
    }
    CHECK(std::isnan(parse_double("nan")));
    CHECK_THROWS_AS(parse_double("1.5x"), FormatError);
}

TEST_CASE("trial log round trip") {
    const auto log = tiny_log();
    std::stringstream ss;
    write_trial_log(log, ss);
    const auto back = read_trial_log(ss);
    CHECK(back.meta.subject == "S2");
    CHECK(back.meta.seed == log.meta.seed);
    CHECK(back.meta.controller == ControllerId::C3);
    CHECK(back.meta.flags == log.meta.flags);
    CHECK(back.meta.extra.at("attempt") == "2");
    CHECK(std::isnan(back.meta.t_a));
    REQUIRE(back.ticks.size() == log.ticks.size());
    for (std::size_t k = 0; k < log.ticks.size(); ++k) {
        CHECK(back.ticks[k].position == log.ticks[k].position);
        CHECK(back.ticks[k].f_int == log.ticks[k].f_int);
        CHECK(back.ticks[k].subtask_true == log.ticks[k].subtask_true);
    }
    CHECK(std::isnan(back.ticks[0].progress_pred));
    CHECK(check_log_invariants(back).empty());
}

TEST_CASE("truncated log names the missing columns") {
    std::stringstream ss;
    write_trial_log(tiny_log(), ss);
    std::string text = ss.str();
    const auto pos = text.find(",tau_true,lambda_true");
    text.erase(pos, std::string(",tau_true,lambda_true").size());
    std::stringstream in(text);
    try {
        read_trial_log(in);
        FAIL("expected a format error");
    } catch (const FormatError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("tau_true") != std::string::npos);
        CHECK(msg.find("lambda_true") != std::string::npos);
    }
}

TEST_CASE("log invariants flag force mismatch and backwards labels") {
    auto log = tiny_log();
    log.ticks[2].f_int.x += 1e-9;
    log.ticks[4].subtask_true = Subtask::Idle;
    const auto bad = check_log_invariants(log);
    CHECK(bad.size() == 2);
}

TEST_CASE("manifest round trip and fingerprint") {
    Manifest m;
    m.entries.push_back(manifest_entry_for(tiny_log().meta, "trials/a.csv"));
    auto e = m.entries[0];
    e.path = "trials/b.csv";
    e.valid = false;
    m.entries.push_back(e);
    const auto dir = std::filesystem::temp_directory_path() / "phri_manifest_test";
    m.save(dir / "manifest.csv");
    const auto back = Manifest::load(dir / "manifest.csv");
    CHECK(back.serialize() == m.serialize());
    CHECK(back.fingerprint() == m.fingerprint());
    CHECK_FALSE(back.entries[1].valid);
    std::filesystem::remove_all(dir);
}
