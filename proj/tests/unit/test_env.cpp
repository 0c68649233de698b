#include <doctest.h>

#include <cmath>

#include "phri/control/admittance.hpp"
#include "phri/core/errors.hpp"
#include "phri/env/geometry.hpp"
#include "phri/env/lifecycle.hpp"
#include "phri/env/progress.hpp"
#include "phri/env/workpiece.hpp"

using namespace phri;
using namespace phri::env;

TEST_CASE("target diameter") {
    CHECK(target_diameter(0.2, 1.0) == 0.2);
    CHECK(target_diameter(0.12, 3.0) == doctest::Approx(0.12 / 7.0));
    CHECK_THROWS_AS(TaskGeometry::make(0.12, 4, 3.0), ConfigError);
    CHECK_THROWS_AS(TaskGeometry::make(-0.12, 0, 3.0), ConfigError);
}

TEST_CASE("targets sit on the plane at the corners") {
    for (int c = 0; c < 4; ++c) {
        const auto g = TaskGeometry::make(0.16, c, 3.0);
        CHECK(g.penetration(g.target_center) == doctest::Approx(0.0));
        CHECK(std::abs(g.target_center.y) == doctest::Approx(0.075));
        CHECK(std::abs(g.target_center.z) == doctest::Approx(0.075));
    }
}

TEST_CASE("spring force") {
    const Vec3 n{1, 0, 0};
    CHECK(environment_force(0.0, n, 8000.0) == Vec3{});
    CHECK(environment_force(-0.01, n, 8000.0) == Vec3{});
    CHECK(environment_force(0.004, n, 8000.0).norm() == doctest::Approx(32.0));
    const Vec3 f = environment_force(0.001, n, 8000.0);
    CHECK(f.x == doctest::Approx(-8.0));
    CHECK(f.y == 0.0);
}

TEST_CASE("contact registers only inside the target circle") {
    const auto g = TaskGeometry::make(0.16, 1, 3.0);
    SpringWorkpiece hit(g), miss(g);
    CHECK(hit.update(g.target_center + Vec3{-0.001, 0, 0}) == ContactState::Free);
    CHECK(hit.update(g.target_center + Vec3{0.001, 0.2 * g.width, 0}) == ContactState::Engaged);
    CHECK(hit.force(g.target_center + Vec3{0.002, 0, 0}).x == doctest::Approx(-16.0));
    CHECK(miss.update(g.target_center + Vec3{0.001, g.width, 0}) == ContactState::Missed);
    CHECK(miss.force(g.target_center + Vec3{0.002, g.width, 0}) == Vec3{});
}

TEST_CASE("steady 32 N push settles at 4 mm") {
    const auto g = TaskGeometry::make(0.16, 0, 3.0);
    SpringWorkpiece wp(g);
    const control::AdmittanceParams p{50.0, 500.0, 0.002};
    Vec3 x = g.target_center + Vec3{-0.001, 0, 0}, v;
    for (int k = 0; k < 10000; ++k) {
        wp.update(x);
        v = control::step_admittance(v, Vec3{32.0, 0, 0} + wp.force(x), p);
        x += v * p.dt;
    }
    CHECK(wp.depth(x) == doctest::Approx(0.004).epsilon(1e-6));
}

TEST_CASE("trial lifecycle") {
    TrialLifecycle lc(500.0, 3.0, 0.004);
    std::size_t k = 0;
    for (; k < 100; ++k) CHECK(lc.update(k, false, ContactState::Free, -0.1) == TrialPhase::AwaitGrab);
    CHECK(lc.ground_truth() == Subtask::Idle);
    lc.update(k++, true, ContactState::Free, -0.1);
    CHECK(lc.phase() == TrialPhase::Hold3s);
    CHECK(lc.ground_truth() == Subtask::ToolAttachment);
    lc.update(k++, false, ContactState::Free, -0.1);
    CHECK(lc.phase() == TrialPhase::AwaitGrab);
    const std::size_t grab = k;
    while (lc.update(k, true, ContactState::Free, -0.1) != TrialPhase::Go) ++k;
    CHECK(k - grab == 1500);
    CHECK(lc.ground_truth() == Subtask::Driving);
    CHECK(prompt_for(TrialPhase::Go) == "GO");
    lc.update(++k, true, ContactState::Engaged, 0.001);
    CHECK(lc.phase() == TrialPhase::InContact);
    CHECK(lc.ground_truth() == Subtask::Contact);
    lc.update(++k, true, ContactState::Engaged, 0.0039);
    CHECK(lc.phase() == TrialPhase::InContact);
    lc.update(++k, true, ContactState::Engaged, 0.004);
    CHECK(lc.phase() == TrialPhase::Done);
    CHECK(prompt_for(TrialPhase::Done) == "RETRACT");
}

TEST_CASE("time progress") {
    CHECK(time_progress(2.0, 2.0, 6.0) == 0.0);
    CHECK(time_progress(6.0, 2.0, 6.0) == 1.0);
    CHECK(time_progress(4.0, 2.0, 6.0) == 0.5);
    CHECK(time_progress(9.0, 2.0, 6.0) == 1.0);
    CHECK_THROWS_AS(time_progress(1.0, 2.0, 2.0), DegenerateTrial);
    double prev = -1.0;
    for (int i = 0; i <= 40; ++i) {
        const double tau = time_progress(2.0 + 0.1 * i, 2.0, 6.0);
        CHECK(tau > prev);
        CHECK(tau == doctest::Approx(i / 40.0));
        prev = tau;
    }
}

TEST_CASE("trajectory progress") {
    const std::vector<double> flat(101, 0.3);
    const auto lam = trajectory_progress(flat, 0.01);
    for (std::size_t i = 0; i < lam.size(); ++i) CHECK(lam[i] == doctest::Approx(i / 100.0));
    CHECK(lam.back() == 1.0);
    std::vector<double> bump(101);
    for (int i = 0; i <= 100; ++i) bump[static_cast<std::size_t>(i)] = std::sin(M_PI * i / 100.0);
    const auto lb = trajectory_progress(bump, 0.01);
    CHECK(lb[50] == doctest::Approx(0.5));
    CHECK(lb[25] < 0.25);
    CHECK_THROWS_AS(trajectory_progress(std::vector<double>(10, 0.0), 0.01), DegenerateTrial);
}
