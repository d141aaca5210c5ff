#include "szn/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace szn::oracle {

std::vector<Vec2> zonotope_polygon(const Vec2& center, const Eigen::Matrix2Xd& generators) {
    std::vector<Vec2> gens;
    for (Eigen::Index i = 0; i < generators.cols(); ++i) {
        Vec2 g = generators.col(i);
        if (g.norm() <= 1e-15) continue;
        // Half-turn normalization keeps the segment set identical.
        if (g.y() < 0.0 || (g.y() == 0.0 && g.x() < 0.0)) g = -g;
        gens.push_back(g);
    }
    if (gens.empty()) return {center};
    std::sort(gens.begin(), gens.end(), [](const Vec2& a, const Vec2& b) {
        return std::atan2(a.y(), a.x()) < std::atan2(b.y(), b.x());
    });

    // Lowest vertex, then edges +2g in angle order up the right side and
    // -2g back down the left.
    Vec2 v = center;
    for (const Vec2& g : gens) v -= g;
    std::vector<Vec2> poly;
    poly.reserve(2 * gens.size());
    for (const Vec2& g : gens) {
        poly.push_back(v);
        v += 2.0 * g;
    }
    for (const Vec2& g : gens) {
        poly.push_back(v);
        v -= 2.0 * g;
    }
    return poly;
}

namespace {

void project(const std::vector<Vec2>& poly, const Vec2& axis, double& lo, double& hi) {
    lo = std::numeric_limits<double>::infinity();
    hi = -std::numeric_limits<double>::infinity();
    for (const Vec2& p : poly) {
        const double t = axis.dot(p);
        lo = std::min(lo, t);
        hi = std::max(hi, t);
    }
}

}  // namespace

double sat_separation(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
    double best = -std::numeric_limits<double>::infinity();
    for (const std::vector<Vec2>* poly : {&a, &b}) {
        const size_t n = poly->size();
        for (size_t i = 0; i < n; ++i) {
            const Vec2 edge = (*poly)[(i + 1) % n] - (*poly)[i];
            const double len = edge.norm();
            if (len <= 1e-15) continue;
            const Vec2 axis(-edge.y() / len, edge.x() / len);
            double alo, ahi, blo, bhi;
            project(a, axis, alo, ahi);
            project(b, axis, blo, bhi);
            best = std::max(best, std::max(blo - ahi, alo - bhi));
        }
    }
    return best;
}

double support_radius(const Eigen::Matrix2Xd& generators, const Vec2& unit_dir) {
    double r = 0.0;
    for (Eigen::Index i = 0; i < generators.cols(); ++i) {
        r += std::abs(unit_dir.dot(generators.col(i)));
    }
    return r;
}

LipEndpoint rk4_lip(double v0, double u_f, double omega, double T, int substeps) {
    const double h = T / substeps;
    double x = 0.0;
    double v = v0;
    const double w2 = omega * omega;
    const auto acc = [&](double xi) { return w2 * (xi - u_f); };
    for (int k = 0; k < substeps; ++k) {
        const double k1x = v;
        const double k1v = acc(x);
        const double k2x = v + 0.5 * h * k1v;
        const double k2v = acc(x + 0.5 * h * k1x);
        const double k3x = v + 0.5 * h * k2v;
        const double k3v = acc(x + 0.5 * h * k2x);
        const double k4x = v + h * k3v;
        const double k4v = acc(x + h * k3x);
        x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }
    return {x, v};
}

}  // namespace szn::oracle
