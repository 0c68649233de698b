#include "phri/env/geometry.hpp"

#include <cmath>
#include <string>

#include "phri/core/errors.hpp"

namespace phri::env {

double target_diameter(double lp, double iod) {
    if (!(lp > 0.0) || !(iod > 0.0)) throw ConfigError("target_diameter needs L_p > 0 and IoD > 0");
    return lp / (std::exp2(iod) - 1.0);
}

std::array<Vec3, 4> corner_offsets(double side) {
    const double h = side / 2.0;
    return {Vec3{0.0, -h, h}, Vec3{0.0, h, h}, Vec3{0.0, h, -h}, Vec3{0.0, -h, -h}};
}

TaskGeometry TaskGeometry::make(double lp, int corner, double iod, Vec3 home, double depth_goal) {
    if (corner < 0 || corner > 3) throw ConfigError("corner index must be in 0..3, got " + std::to_string(corner));
    if (!(depth_goal > 0.0)) throw ConfigError("depth goal must be positive");
    TaskGeometry g;
    g.home = home;
    g.lp = lp;
    g.corner = corner;
    g.iod = iod;
    g.width = target_diameter(lp, iod);
    g.depth_goal = depth_goal;
    g.target_center = home + g.normal * lp + corner_offsets(g.square_side)[static_cast<std::size_t>(corner)];
    return g;
}

double TaskGeometry::lateral_offset(const Vec3& p) const {
    Vec3 d = p - target_center;
    d -= normal * d.dot(normal);
    return d.norm();
}

}  // namespace phri::env
