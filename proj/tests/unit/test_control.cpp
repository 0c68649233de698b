#include <doctest.h>

#include <cmath>

#include "phri/control/admittance.hpp"
#include "phri/control/damping.hpp"
#include "phri/control/voting.hpp"
#include "phri/core/errors.hpp"

using namespace phri;
using namespace phri::control;

TEST_CASE("admittance equilibrium and first step") {
    const AdmittanceParams p{50.0, 500.0, 0.002};
    CHECK(step_admittance({}, {}, p) == Vec3{});
    const Vec3 v = step_admittance({}, {50.0, 0.0, 0.0}, p);
    CHECK(v.x == doctest::Approx(0.1 / 51.0).epsilon(1e-15));
    CHECK(v.y == 0.0);
    CHECK(v.z == 0.0);
}

TEST_CASE("admittance settles at F/b") {
    const AdmittanceParams p{50.0, 500.0, 0.002};
    Vec3 v;
    for (int k = 0; k < 1000; ++k) v = step_admittance(v, {50.0, -25.0, 5.0}, p);
    CHECK(std::abs(v.x - 0.1) / 0.1 < 1e-3);
    CHECK(std::abs(v.y + 0.05) / 0.05 < 1e-3);
    CHECK(std::abs(v.z - 0.01) / 0.01 < 1e-3);
}

TEST_CASE("admittance rejects bad input") {
    const AdmittanceParams p;
    CHECK_THROWS_AS(step_admittance({}, {std::nan(""), 0, 0}, p), DynamicsFault);
    CHECK_THROWS_AS((AdmittanceParams{0.0, 1.0, 0.002}.validate()), ConfigError);
    CHECK_THROWS_AS((AdmittanceParams{50.0, -1.0, 0.002}.validate()), ConfigError);
}

TEST_CASE("smoothstep blend") {
    CHECK(blend_damping(100, 500, 0.0, 0.2) == 100.0);
    CHECK(blend_damping(100, 500, 0.2, 0.2) == 500.0);
    CHECK(blend_damping(100, 500, 0.1, 0.2) == 300.0);
    CHECK(blend_damping(100, 500, 5.0, 0.2) == 500.0);
    CHECK(blend_damping_rate(100, 500, 0.0, 0.2) == 0.0);
    CHECK(blend_damping_rate(100, 500, 0.2, 0.2) == 0.0);
    double prev = 100.0;
    for (int i = 1; i <= 100; ++i) {
        const double b = blend_damping(100, 500, 0.002 * i, 0.2);
        CHECK(b >= prev);
        prev = b;
    }
}

TEST_CASE("voting buffer") {
    VotingBuffer v(100);
    Subtask out = Subtask::Idle;
    for (int i = 0; i < 100; ++i) out = v.vote(Subtask::ToolAttachment);
    CHECK(out == Subtask::ToolAttachment);

    v.reset();
    for (int i = 0; i < 60; ++i) v.vote(Subtask::Driving);
    for (int i = 0; i < 40; ++i) out = v.vote(Subtask::Contact);
    CHECK(out == Subtask::Driving);

    v.reset();
    for (int i = 0; i < 50; ++i) v.vote(Subtask::Driving);
    for (int i = 0; i < 50; ++i) out = v.vote(Subtask::ToolAttachment);
    CHECK(out == Subtask::Driving);

    // Ring eviction: after 100 more entries only those count.
    for (int i = 0; i < 100; ++i) out = v.vote(Subtask::Idle);
    CHECK(out == Subtask::Idle);
    CHECK(v.count(Subtask::Idle) == 100);
}

TEST_CASE("C1 holds the high damping") {
    DampingScheduler s(ControllerId::C1, {});
    double t = 0.0;
    for (auto voted : kAllSubtasks)
        for (int i = 0; i < 200; ++i, t += 0.002) CHECK(s.step(voted, 0.9, t) == 500.0);
    CHECK_FALSE(s.adaptation_time());
}

TEST_CASE("C2 follows the voted subtask") {
    DampingScheduler s(ControllerId::C2, {});
    double t = 0.0;
    CHECK(s.step(Subtask::Idle, std::nullopt, t) == 300.0);
    t += 0.002;
    s.step(Subtask::Driving, 0.99, t);
    for (int i = 0; i < 150; ++i) s.step(Subtask::Driving, 0.99, t += 0.002);
    CHECK(s.current() == 100.0);
    CHECK_FALSE(s.adaptation_time());
    s.step(Subtask::Contact, std::nullopt, t += 0.002);
    const double mid = s.step(Subtask::Contact, std::nullopt, t + 0.1);
    CHECK(mid == doctest::Approx(300.0));
    CHECK(s.step(Subtask::Contact, std::nullopt, t + 0.25) == 500.0);
}

TEST_CASE("C3 adapts once progress reaches the threshold") {
    DampingScheduler s(ControllerId::C3, {});
    double t = 0.0;
    s.step(Subtask::Driving, 0.1, t);
    for (int i = 0; i < 150; ++i) s.step(Subtask::Driving, 0.5, t += 0.002);
    CHECK(s.current() == 100.0);
    s.step(Subtask::Driving, 0.74, t += 0.002);
    CHECK_FALSE(s.adaptation_time());
    s.step(Subtask::Driving, 0.75, t += 0.002);
    REQUIRE(s.adaptation_time());
    CHECK(*s.adaptation_time() == doctest::Approx(t));
    // Latched: a later drop in progress or vote does not undo it.
    for (int i = 0; i < 150; ++i) s.step(Subtask::Driving, 0.1, t += 0.002);
    CHECK(s.current() == 500.0);
    s.step(Subtask::ToolAttachment, std::nullopt, t += 0.002);
    CHECK(s.step(Subtask::ToolAttachment, std::nullopt, t += 0.5) == 500.0);
}

TEST_CASE("C3 ignores progress outside Driving") {
    DampingScheduler s(ControllerId::C3, {});
    double t = 0.0;
    for (int i = 0; i < 100; ++i) s.step(Subtask::ToolAttachment, 0.9, t += 0.002);
    CHECK_FALSE(s.adaptation_time());
    CHECK(s.current() == 300.0);
}
