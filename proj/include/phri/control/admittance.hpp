#pragma once

#include "phri/core/vec3.hpp"

namespace phri::control {

/// Virtual mass-damper rendered by the admittance controller; identical on all
/// three translational axes.
struct AdmittanceParams {
    double mass = 50.0;     // kg
    double damping = 500.0; // Ns/m
    double dt = 0.002;      // s

    /// Throws ConfigError unless mass, damping and dt are all positive.
    void validate() const;
};

/// One semi-implicit Euler step of m*dv/dt + b*v = F:
///   v' = (m*v + dt*F) / (m + dt*b)
/// Throws DynamicsFault on non-finite input.
Vec3 step_admittance(const Vec3& velocity, const Vec3& f_int, const AdmittanceParams& params);

/// Analytic step response v(t) = (F/b)(1 - exp(-b t / m)) from rest.
double admittance_step_response(double force, double t, double mass, double damping);

}  // namespace phri::control
