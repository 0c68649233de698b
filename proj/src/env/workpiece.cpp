#include "phri/env/workpiece.hpp"

#include "phri/core/errors.hpp"

namespace phri::env {

Vec3 environment_force(double depth, const Vec3& normal, double stiffness) {
    if (depth <= 0.0) return {};
    return normal * (-stiffness * depth);
}

SpringWorkpiece::SpringWorkpiece(TaskGeometry geometry, double stiffness)
    : geometry_(geometry), stiffness_(stiffness) {
    if (!(stiffness_ > 0.0)) throw ConfigError("workpiece stiffness must be positive");
}

ContactState SpringWorkpiece::update(const Vec3& tool) {
    if (state_ == ContactState::Free && geometry_.penetration(tool) > 0.0) {
        crossing_offset_ = geometry_.lateral_offset(tool);
        state_ = crossing_offset_ <= geometry_.width / 2.0 ? ContactState::Engaged : ContactState::Missed;
    }
    return state_;
}

Vec3 SpringWorkpiece::force(const Vec3& tool) const {
    if (state_ != ContactState::Engaged) return {};
    return environment_force(geometry_.penetration(tool), geometry_.normal, stiffness_);
}

}  // namespace phri::env
