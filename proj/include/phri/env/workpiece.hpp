#pragma once

#include "phri/core/vec3.hpp"
#include "phri/env/geometry.hpp"

namespace phri::env {

/// Linear spring force for penetration `depth` along `normal`: -K*depth*normal
/// while depth > 0, zero otherwise.
Vec3 environment_force(double depth, const Vec3& normal, double stiffness);

enum class ContactState { Free, Engaged, Missed };

/// Purely elastic virtual workpiece. Contact is registered on the first plane
/// crossing only if the tool tip is inside the target circle; a crossing
/// outside the circle is a miss and the plane is never rendered.
class SpringWorkpiece {
public:
    explicit SpringWorkpiece(TaskGeometry geometry, double stiffness = 8000.0);

    /// Updates contact registration from the current tool position.
    ContactState update(const Vec3& tool);
    /// Reaction force at `tool` given the current registration.
    Vec3 force(const Vec3& tool) const;

    double depth(const Vec3& tool) const { return geometry_.penetration(tool); }
    ContactState state() const { return state_; }
    const TaskGeometry& geometry() const { return geometry_; }
    double stiffness() const { return stiffness_; }
    /// Lateral offset at the first crossing (meaningful once not Free).
    double crossing_offset() const { return crossing_offset_; }

private:
    TaskGeometry geometry_;
    double stiffness_;
    ContactState state_ = ContactState::Free;
    double crossing_offset_ = 0.0;
};

}  // namespace phri::env
