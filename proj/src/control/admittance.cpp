#include "phri/control/admittance.hpp"

#include <cmath>

#include "phri/core/errors.hpp"

namespace phri::control {

void AdmittanceParams::validate() const {
    if (!(mass > 0.0) || !(damping > 0.0) || !(dt > 0.0))
        throw ConfigError("admittance parameters must be positive (m, b, dt)");
}

Vec3 step_admittance(const Vec3& velocity, const Vec3& f_int, const AdmittanceParams& p) {
    if (!velocity.finite() || !f_int.finite() || !std::isfinite(p.damping))
        throw DynamicsFault("non-finite input to admittance step");
    const double denom = p.mass + p.dt * p.damping;
    return (velocity * p.mass + f_int * p.dt) / denom;
}

double admittance_step_response(double force, double t, double mass, double damping) {
    return force / damping * (1.0 - std::exp(-damping * t / mass));
}

}  // namespace phri::control
