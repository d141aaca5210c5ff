#include "szn/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "szn/errors.hpp"

namespace szn {

namespace {

// Generators with norm > kGenTol, preserving order.
Mat2X keep_usable_generators(const Mat2X& gens) {
    Mat2X out(2, gens.cols());
    Eigen::Index n = 0;
    for (Eigen::Index i = 0; i < gens.cols(); ++i) {
        if (gens.col(i).norm() > kGenTol) out.col(n++) = gens.col(i);
    }
    out.conservativeResize(2, n);
    return out;
}

HalfspacePoly halfspace_from_usable(const Vec2& center, const Mat2X& gens) {
    const Eigen::Index m = gens.cols();
    HalfspacePoly hs;
    hs.normals.resize(2 * m, 2);
    hs.offsets.resize(2 * m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const Vec2 g = gens.col(i);
        const Vec2 n = Vec2(-g.y(), g.x()) / g.norm();
        double span = 0.0;  // sum_j |n . g_j|
        for (Eigen::Index j = 0; j < m; ++j) span += std::abs(n.dot(gens.col(j)));
        hs.normals.row(i) = n.transpose();
        hs.offsets(i) = n.dot(center) + span;
        hs.normals.row(m + i) = -n.transpose();
        hs.offsets(m + i) = -n.dot(center) + span;
    }
    return hs;
}

}  // namespace

Zonotope2 make_zonotope(const Vec2& center, const Mat2X& generators) {
    if (generators.cols() < 1) {
        throw DimensionMismatch("zonotope requires at least one generator column");
    }
    if (!center.allFinite() || !generators.allFinite()) {
        throw DimensionMismatch("zonotope entries must be finite");
    }
    return Zonotope2{center, generators};
}

Zonotope2 minkowski_sum(const Zonotope2& a, const Zonotope2& b) {
    Zonotope2 out;
    out.center = a.center + b.center;
    out.generators.resize(2, a.generators.cols() + b.generators.cols());
    out.generators << a.generators, b.generators;
    return out;
}

HalfspacePoly to_halfspace(const Zonotope2& z) {
    for (Eigen::Index i = 0; i < z.generators.cols(); ++i) {
        if (z.generators.col(i).norm() <= kGenTol) {
            throw DegenerateGenerator("generator " + std::to_string(i) +
                                      " is shorter than the half-space tolerance");
        }
    }
    return halfspace_from_usable(z.center, z.generators);
}

bool contains_point(const Zonotope2& z, const Vec2& p) {
    const Mat2X usable = keep_usable_generators(z.generators);
    if (usable.cols() == 0) {
        return (p - z.center).norm() <= kContainTol;
    }
    const HalfspacePoly hs = halfspace_from_usable(z.center, usable);
    const double worst = (hs.normals * p - hs.offsets).maxCoeff();
    return worst <= kContainTol;
}

bool intersects(const Zonotope2& a, const Zonotope2& b) {
    Zonotope2 combined;
    combined.center = b.center;
    combined.generators.resize(2, a.generators.cols() + b.generators.cols());
    combined.generators << a.generators, b.generators;
    return contains_point(combined, a.center);
}

std::vector<Vec2> zonotope_vertices(const Zonotope2& z) {
    const Mat2X usable = keep_usable_generators(z.generators);
    const Eigen::Index m = usable.cols();
    if (m == 0) return {z.center};

    // Flip each generator into the upper half plane, then sort by angle; the
    // boundary walks +2g_i up one side and -2g_i back down the other.
    std::vector<Vec2> gens(static_cast<size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) {
        Vec2 g = usable.col(i);
        if (g.y() < 0.0 || (g.y() == 0.0 && g.x() < 0.0)) g = -g;
        gens[static_cast<size_t>(i)] = g;
    }
    std::sort(gens.begin(), gens.end(), [](const Vec2& a, const Vec2& b) {
        return std::atan2(a.y(), a.x()) < std::atan2(b.y(), b.x());
    });

    Vec2 v = z.center;
    for (const Vec2& g : gens) v -= g;
    std::vector<Vec2> verts;
    verts.reserve(static_cast<size_t>(2 * m));
    for (const Vec2& g : gens) {
        verts.push_back(v);
        v += 2.0 * g;
    }
    for (const Vec2& g : gens) {
        verts.push_back(v);
        v -= 2.0 * g;
    }
    return verts;
}

}  // namespace szn
