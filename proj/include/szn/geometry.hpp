#pragma once

#include <Eigen/Core>
#include <vector>

namespace szn {

using Vec2 = Eigen::Vector2d;
using Mat2X = Eigen::Matrix2Xd;

/// Generators shorter than this are dropped before half-space conversion;
/// near-zero generators produce ill-conditioned normals.
inline constexpr double kGenTol = 1e-9;

/// Boundary points count as contained (collision checking stays conservative).
inline constexpr double kContainTol = 1e-9;

/**
 * 2-D zonotope {c + G*beta : ||beta||_inf <= 1}: a convex polytope symmetric
 * about its center. Column i of `generators` is generator g_i. Immutable
 * value type; all operations below are pure functions.
 */
struct Zonotope2 {
    Vec2 center = Vec2::Zero();
    Mat2X generators;  // 2 x n_G

    int num_generators() const { return static_cast<int>(generators.cols()); }
};

/// Constructs a zonotope and checks invariants (n_G >= 1, finite entries).
Zonotope2 make_zonotope(const Vec2& center, const Mat2X& generators);

/**
 * Half-space form {x : normals*x <= offsets} of a 2-D zonotope.
 * Rows follow generator order, positive rows first, then their negations
 * (row i + n_G == -row i), so downstream gradients are reproducible.
 */
struct HalfspacePoly {
    Eigen::Matrix<double, Eigen::Dynamic, 2> normals;  // 2 n_G x 2, unit rows
    Eigen::VectorXd offsets;                           // 2 n_G
};

/// Center c1 + c2, generators [G1 G2].
Zonotope2 minkowski_sum(const Zonotope2& a, const Zonotope2& b);

/// Exact conversion via per-generator perpendicular normals.
/// Throws DegenerateGenerator if any generator has norm <= kGenTol.
HalfspacePoly to_halfspace(const Zonotope2& z);

/// max(normals*p - offsets) <= kContainTol. Generators below kGenTol are
/// dropped first; if none survive the zonotope degrades to a point and the
/// test becomes ||p - c|| <= kContainTol.
bool contains_point(const Zonotope2& z, const Vec2& p);

/// Zonotope pair intersection: Z1 and Z2 meet iff c1 is in Z(c2, [G1 G2]).
bool intersects(const Zonotope2& a, const Zonotope2& b);

/// Boundary polygon in CCW order (2*n_G vertices, degenerate generators
/// skipped). Used for rendering; collision tests go through to_halfspace.
std::vector<Vec2> zonotope_vertices(const Zonotope2& z);

}  // namespace szn
