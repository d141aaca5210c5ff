#pragma once

#include <Eigen/Core>
#include <vector>

namespace szn::oracle {

/**
 * Independent verification routines. Nothing here calls into the library's
 * geometry, dynamics, or network code paths — these re-derive the same
 * quantities from first principles (vertex enumeration + separating axes,
 * explicit ODE integration, finite differences) so they can sit on the other
 * side of an equivalence check.
 */

using Vec2 = Eigen::Vector2d;

/// Convex polygon (CCW) spanned by {c + G b : |b|_inf <= 1}, enumerated by
/// angle-sorting the generator segments.
std::vector<Vec2> zonotope_polygon(const Vec2& center, const Eigen::Matrix2Xd& generators);

/// Separating-axis measure over the edge normals of both polygons: positive
/// = separated by that gap, negative = overlapping with depth |value|.
double sat_separation(const std::vector<Vec2>& a, const std::vector<Vec2>& b);

inline bool sat_intersects(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
    return sat_separation(a, b) <= 0.0;
}

/// sum_i |d . g_i| — support radius of the generator set along unit d.
double support_radius(const Eigen::Matrix2Xd& generators, const Vec2& unit_dir);

/// RK4 integration of x'' = omega^2 (x - u_f) from x(0) = 0, x'(0) = v0
/// over [0, T]; returns (x(T), x'(T)).
struct LipEndpoint {
    double dx = 0.0;
    double v = 0.0;
};
LipEndpoint rk4_lip(double v0, double u_f, double omega, double T, int substeps = 1000);

}  // namespace szn::oracle
