#include "phri/human/reference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "phri/core/errors.hpp"

namespace phri::human {

namespace {

constexpr int kSigmaSamples = 1001;
constexpr int kTimeSamples = 4001;
constexpr double kFinalApproachFraction = 0.35;  // share of the approach distance run straight along the normal

double interp(const std::vector<double>& ys, double x01) {
    const double pos = x01 * static_cast<double>(ys.size() - 1);
    const auto i = std::min(static_cast<std::size_t>(pos), ys.size() - 2);
    const double f = pos - static_cast<double>(i);
    return ys[i] + f * (ys[i + 1] - ys[i]);
}

Vec3 any_perpendicular(const Vec3& v) {
    const Vec3 helper = std::abs(v.normalized().x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    return v.cross(helper).normalized();
}

}  // namespace

double ReferenceTrajectory::nominal_duration(const SubjectProfile& p, double iod) {
    return p.fitts_a + p.fitts_b * iod;
}

ReferenceTrajectory ReferenceTrajectory::make(const SubjectProfile& profile, const Vec3& start, const Vec3& aim,
                                              const Vec3& normal, double duration, double bow,
                                              const Vec3& bow_dir) {
    if (!(duration > 0.0)) throw ConfigError("reference duration must be positive");
    ReferenceTrajectory r;
    r.start_ = start;
    r.aim_ = aim;
    r.exit_dir_ = normal.normalized();
    r.pre_aim_ = aim - r.exit_dir_ * kFinalApproachFraction * (aim - start).dot(r.exit_dir_);
    r.span_ = r.pre_aim_ - start;
    if (!(r.span_.norm() > 0.0)) throw ConfigError("reference start and aim coincide");
    const Vec3 axis = r.span_.normalized();
    Vec3 d = bow_dir - axis * bow_dir.dot(axis);
    r.bow_dir_ = d.norm() > 1e-12 ? d.normalized() : any_perpendicular(axis);
    r.bow_ = bow;
    r.end_tangent_ = r.exit_dir_ * r.span_.norm();
    r.overshoot_ = profile.overshoot;
    r.duration_ = duration;
    r.shape_a_ = profile.shape_a;
    r.shape_b_ = profile.shape_b;

    r.arc_table_.resize(kSigmaSamples);
    r.arc_table_[0] = 0.0;
    double prev = r.curve_tangent(0.0).norm();
    for (int i = 1; i < kSigmaSamples; ++i) {
        const double sigma = static_cast<double>(i) / (kSigmaSamples - 1);
        const double cur = r.curve_tangent(sigma).norm();
        r.arc_table_[static_cast<std::size_t>(i)] =
            r.arc_table_[static_cast<std::size_t>(i - 1)] + 0.5 * (prev + cur) / (kSigmaSamples - 1);
        prev = cur;
    }
    r.bow_length_ = r.arc_table_.back();
    r.total_length_ = r.bow_length_ + (aim - r.pre_aim_).norm() + r.overshoot_;

    r.cdf_table_.resize(kTimeSamples);
    r.cdf_table_[0] = 0.0;
    auto g = [&](double u) { return std::pow(u, r.shape_a_) * std::pow(1.0 - u, r.shape_b_); };
    double gp = g(0.0);
    for (int i = 1; i < kTimeSamples; ++i) {
        const double u = static_cast<double>(i) / (kTimeSamples - 1);
        const double gc = g(u);
        r.cdf_table_[static_cast<std::size_t>(i)] =
            r.cdf_table_[static_cast<std::size_t>(i - 1)] + 0.5 * (gp + gc) / (kTimeSamples - 1);
        gp = gc;
    }
    r.beta_norm_ = r.cdf_table_.back();
    for (auto& c : r.cdf_table_) c /= r.beta_norm_;
    return r;
}

ReferenceTrajectory ReferenceTrajectory::plan(const SubjectProfile& p, const env::TaskGeometry& geo,
                                              const Vec3& start, std::mt19937_64& rng) {
    std::normal_distribution<double> n01(0.0, 1.0);
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    const double duration = nominal_duration(p, geo.iod) * std::exp(p.duration_jitter * n01(rng));

    // Uniform point in a disc inside the target circle.
    const Vec3 e1 = any_perpendicular(geo.normal);
    const Vec3 e2 = geo.normal.cross(e1);
    const double radius = p.aim_fraction * geo.width / 2.0 * std::sqrt(u01(rng));
    const double ang = 2.0 * std::numbers::pi * u01(rng);
    const Vec3 aim = geo.target_center + e1 * (radius * std::cos(ang)) + e2 * (radius * std::sin(ang));

    const double bow = p.curvature * (0.5 + u01(rng));
    const double bow_ang = 2.0 * std::numbers::pi * u01(rng);
    const Vec3 bow_dir = e1 * std::cos(bow_ang) + e2 * std::sin(bow_ang);
    return make(p, start, aim, geo.normal, duration, bow, bow_dir);
}

Vec3 ReferenceTrajectory::curve(double sigma) const {
    // Cubic Hermite from start (tangent = span) to the pre-aim point (tangent = normal), plus a
    // bow that peaks at sigma = 1/3 with unit height and vanishes with zero slope at the pre-aim point.
    const double s2 = sigma * sigma;
    const double s3 = s2 * sigma;
    return start_ * (2 * s3 - 3 * s2 + 1) + span_ * (s3 - 2 * s2 + sigma) + pre_aim_ * (3 * s2 - 2 * s3) +
           end_tangent_ * (s3 - s2) + bow_dir_ * (bow_ * 6.75 * sigma * (1.0 - sigma) * (1.0 - sigma));
}

Vec3 ReferenceTrajectory::curve_tangent(double sigma) const {
    const double s2 = sigma * sigma;
    return start_ * (6 * s2 - 6 * sigma) + span_ * (3 * s2 - 4 * sigma + 1) + pre_aim_ * (6 * sigma - 6 * s2) +
           end_tangent_ * (3 * s2 - 2 * sigma) + bow_dir_ * (bow_ * 6.75 * (1.0 - sigma) * (1.0 - 3.0 * sigma));
}

std::pair<Vec3, Vec3> ReferenceTrajectory::along(double s) const {
    if (s >= bow_length_) return {pre_aim_ + exit_dir_ * (s - bow_length_), exit_dir_};
    const auto it = std::upper_bound(arc_table_.begin(), arc_table_.end(), s);
    const auto i = static_cast<std::size_t>(std::clamp<long>(it - arc_table_.begin(), 1, kSigmaSamples - 1));
    const double s0 = arc_table_[i - 1];
    const double s1 = arc_table_[i];
    const double f = s1 > s0 ? (s - s0) / (s1 - s0) : 0.0;
    const double sigma = (static_cast<double>(i - 1) + f) / (kSigmaSamples - 1);
    return {curve(sigma), curve_tangent(sigma).normalized()};
}

RefState ReferenceTrajectory::at(double t) const {
    if (t >= duration_) return {along(total_length_).first, {}};
    const double u = std::max(t, 0.0) / duration_;
    const double s = total_length_ * interp(cdf_table_, u);
    const double speed =
        total_length_ * std::pow(u, shape_a_) * std::pow(1.0 - u, shape_b_) / (beta_norm_ * duration_);
    const auto [pos, tangent] = along(s);
    return {pos, tangent * speed};
}

}  // namespace phri::human
