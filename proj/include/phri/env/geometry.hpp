#pragma once

#include <array>

#include "phri/core/vec3.hpp"

namespace phri::env {

/// Fitts target diameter W = L_p / (2^IoD - 1).
double target_diameter(double lp, double iod);

/// Lateral offsets of the four targets on a square of side `side`, centered on
/// the approach axis. Index order: (-,+), (+,+), (+,-), (-,-) in (y, z).
std::array<Vec3, 4> corner_offsets(double side = 0.15);

/// Task layout. The workpiece is a vertical plane whose normal (the approach
/// axis) is +x; it sits L_p in front of the home position.
struct TaskGeometry {
    Vec3 home;
    Vec3 normal{1.0, 0.0, 0.0};
    double lp = 0.16;
    int corner = 0;
    double iod = 3.0;
    double width = 0.0;       // target diameter [m]
    Vec3 target_center;
    double depth_goal = 0.004; // m
    double square_side = 0.15;

    /// Builds the geometry for (L_p, corner, IoD); throws ConfigError on invalid input.
    static TaskGeometry make(double lp, int corner, double iod, Vec3 home = {}, double depth_goal = 0.004);

    /// Signed distance of `p` past the workpiece plane along the normal.
    double penetration(const Vec3& p) const { return (p - home).dot(normal) - lp; }
    /// Distance of `p` from the target center, measured within the plane.
    double lateral_offset(const Vec3& p) const;
};

}  // namespace phri::env
