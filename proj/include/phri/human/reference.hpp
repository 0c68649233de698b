#pragma once

#include <random>
#include <vector>

#include "phri/core/vec3.hpp"
#include "phri/env/geometry.hpp"
#include "phri/human/profile.hpp"

namespace phri::human {

struct RefState {
    Vec3 position;
    Vec3 velocity;
};

/// Planned Driving motion: a bowed C1 curve from the start point to a point
/// short of the plane, then a straight run along the plane normal through an
/// aim point inside the target circle and past the plane by the profile's
/// overshoot. Arc length follows the normalized beta-shaped speed
/// profile u^a (1-u)^b over the planned duration.
class ReferenceTrajectory {
public:
    static ReferenceTrajectory plan(const SubjectProfile& profile, const env::TaskGeometry& geometry,
                                    const Vec3& start, std::mt19937_64& rng);

    /// Same as plan() but with explicit duration, aim point and bow direction (no randomness).
    static ReferenceTrajectory make(const SubjectProfile& profile, const Vec3& start, const Vec3& aim,
                                    const Vec3& normal, double duration, double bow, const Vec3& bow_dir);

    /// State at time `t` since Driving onset; holds the end point after the duration.
    RefState at(double t) const;

    double duration() const { return duration_; }
    double path_length() const { return total_length_; }
    const Vec3& aim_point() const { return aim_; }
    const Vec3& start() const { return start_; }

    /// Nominal Driving duration for a profile and IoD (no jitter).
    static double nominal_duration(const SubjectProfile& profile, double iod);

private:
    Vec3 curve(double sigma) const;
    Vec3 curve_tangent(double sigma) const;
    /// Position and unit tangent at arc length s.
    std::pair<Vec3, Vec3> along(double s) const;

    Vec3 start_;
    Vec3 aim_;
    Vec3 pre_aim_;
    Vec3 span_;
    Vec3 bow_dir_;
    double bow_ = 0.0;
    Vec3 exit_dir_;
    Vec3 end_tangent_;
    double overshoot_ = 0.0;
    double duration_ = 1.0;
    double shape_a_ = 2.0;
    double shape_b_ = 2.0;
    double beta_norm_ = 1.0;
    double bow_length_ = 0.0;
    double total_length_ = 0.0;
    std::vector<double> arc_table_;    // uniform sigma grid -> arc length
    std::vector<double> cdf_table_;    // uniform u grid -> normalized arc fraction
};

}  // namespace phri::human
