#pragma once

#include "phri/est/intent.hpp"
#include "phri/est/models.hpp"
#include "phri/exp/simulator.hpp"
#include "phri/human/profile.hpp"

namespace phri::test {

/// One simulated trial under C2 with ideal subtask labels.
inline TrialLog simulated_log(std::uint64_t seed, double lp = 0.16, int corner = 0, double iod = 3.0) {
    exp::TrialSpec spec;
    spec.profile = human::sample_profiles({}, 1, seed)[0];
    spec.lp = lp;
    spec.corner = corner;
    spec.iod = iod;
    spec.seed = seed;
    est::GroundTruthIntent gt;
    return exp::simulate_trial(spec, {}, gt);
}

/// Untrained detector with identity standardization.
inline est::SubtaskDetector random_detector(std::uint64_t seed, const est::FeatureSpec& spec = {}) {
    auto net = est::make_detector_network(spec, 8);
    net.init(seed);
    est::Standardizer st{{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}};
    return {spec, st, std::move(net)};
}

inline std::unique_ptr<est::CnnProgress> random_cnn(std::uint64_t seed, const est::FeatureSpec& spec = {}) {
    auto net = est::make_regressor_network(spec);
    net.init(seed);
    est::Standardizer st{{0.0, 0.0}, {1.0, 1.0}};
    return std::make_unique<est::CnnProgress>(est::ProgressTarget::Lambda, st, std::move(net));
}

}  // namespace phri::test
