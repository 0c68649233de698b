#pragma once

#include <span>
#include <vector>

#include "phri/core/trial_log.hpp"

namespace phri::env {

/// Time progress over Driving: (t - t_d) / (t_c - t_d), clamped to [0, 1].
/// Throws DegenerateTrial when t_c <= t_d.
double time_progress(double t, double t_d, double t_c);

/// Trajectory progress for every sample of a Driving speed trace that starts
/// at t_d and ends at t_c: cumulative trapezoidal path length divided by the
/// total. Throws DegenerateTrial for zero path length.
std::vector<double> trajectory_progress(std::span<const double> speed, double dt);

/// Fills tau_true / lambda_true of every tick from the logged t_d, t_c and
/// speed: 0 before t_d, 1 from t_c on.
void label_progress(TrialLog& log);

}  // namespace phri::env
