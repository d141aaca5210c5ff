#include <doctest.h>

#include <random>

#include "szn/errors.hpp"
#include "szn/geometry.hpp"
#include "szn/oracle.hpp"

using namespace szn;

namespace {

Zonotope2 zono(double cx, double cy, std::initializer_list<std::pair<double, double>> gens) {
    Zonotope2 z;
    z.center = Vec2(cx, cy);
    z.generators.resize(2, static_cast<Eigen::Index>(gens.size()));
    Eigen::Index i = 0;
    for (const auto& [gx, gy] : gens) z.generators.col(i++) = Vec2(gx, gy);
    return z;
}

Zonotope2 random_zonotope(std::mt19937_64& rng, int max_gens = 8) {
    std::uniform_int_distribution<int> n_dist(1, max_gens);
    std::uniform_real_distribution<double> c_dist(-3.0, 3.0);
    std::uniform_real_distribution<double> g_dist(-1.0, 1.0);
    Zonotope2 z;
    z.center = Vec2(c_dist(rng), c_dist(rng));
    const int n = n_dist(rng);
    z.generators.resize(2, n);
    for (int i = 0; i < n; ++i) {
        Vec2 g;
        do {
            g = Vec2(g_dist(rng), g_dist(rng));
        } while (g.norm() < 1e-6);
        z.generators.col(i) = g;
    }
    return z;
}

Vec2 sample_point(const Zonotope2& z, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> beta(-1.0, 1.0);
    Vec2 p = z.center;
    for (int i = 0; i < z.num_generators(); ++i) p += beta(rng) * z.generators.col(i);
    return p;
}

}  // namespace

TEST_CASE("minkowski sum follows the definition") {
    const Zonotope2 a = zono(0, 0, {{1, 0}});
    const Zonotope2 b = zono(1, 1, {{0, 1}});
    const Zonotope2 s = minkowski_sum(a, b);
    CHECK(s.center.x() == doctest::Approx(1.0));
    CHECK(s.center.y() == doctest::Approx(1.0));
    REQUIRE(s.num_generators() == 2);
    CHECK(s.generators(0, 0) == 1.0);
    CHECK(s.generators(1, 0) == 0.0);
    CHECK(s.generators(0, 1) == 0.0);
    CHECK(s.generators(1, 1) == 1.0);
}

TEST_CASE("minkowski sum with a zero-generator zonotope keeps the set") {
    const Zonotope2 a = zono(2, -1, {{0.5, 0.2}, {-0.1, 0.4}});
    const Zonotope2 zero = zono(0, 0, {{0, 0}});
    const Zonotope2 s = minkowski_sum(a, zero);
    CHECK(s.center == a.center);
    REQUIRE(s.num_generators() == 3);
    CHECK(s.generators.col(2).norm() == 0.0);
    // Same set: the padded generator contributes nothing.
    std::mt19937_64 rng(3);
    for (int k = 0; k < 50; ++k) {
        const Vec2 p = sample_point(a, rng);
        CHECK(contains_point(s, p));
    }
}

TEST_CASE("minkowski sum membership: sampled sums stay inside") {
    std::mt19937_64 rng(11);
    for (int k = 0; k < 100; ++k) {
        const Zonotope2 a = random_zonotope(rng);
        const Zonotope2 b = random_zonotope(rng);
        const Zonotope2 s = minkowski_sum(a, b);
        const Vec2 p = sample_point(a, rng) + sample_point(b, rng);
        CHECK(contains_point(s, p));
    }
}

TEST_CASE("to_halfspace of an axis-aligned box") {
    const Zonotope2 box = zono(0, 0, {{1, 0}, {0, 2}});
    const HalfspacePoly hs = to_halfspace(box);
    REQUIRE(hs.normals.rows() == 4);
    // Generator order, positive rows first: (0,1), (-1,0), then negations.
    CHECK(hs.normals(0, 0) == doctest::Approx(0.0));
    CHECK(hs.normals(0, 1) == doctest::Approx(1.0));
    CHECK(hs.normals(1, 0) == doctest::Approx(-1.0));
    CHECK(hs.normals(1, 1) == doctest::Approx(0.0));
    CHECK(hs.normals.row(2) == -hs.normals.row(0));
    CHECK(hs.normals.row(3) == -hs.normals.row(1));
    CHECK(hs.offsets(0) == doctest::Approx(2.0));
    CHECK(hs.offsets(1) == doctest::Approx(1.0));
    CHECK(hs.offsets(2) == doctest::Approx(2.0));
    CHECK(hs.offsets(3) == doctest::Approx(1.0));
    // The represented box is [-1,1] x [-2,2].
    CHECK(contains_point(box, Vec2(1.0, 2.0)));
    CHECK(contains_point(box, Vec2(-1.0, -2.0)));
    CHECK(!contains_point(box, Vec2(1.01, 0.0)));
    CHECK(!contains_point(box, Vec2(0.0, 2.01)));
}

TEST_CASE("to_halfspace rows are unit, antipodal, and keep the center strictly inside") {
    std::mt19937_64 rng(17);
    for (int k = 0; k < 200; ++k) {
        const Zonotope2 z = random_zonotope(rng);
        const HalfspacePoly hs = to_halfspace(z);
        const Eigen::Index m = z.num_generators();
        REQUIRE(hs.normals.rows() == 2 * m);
        for (Eigen::Index i = 0; i < 2 * m; ++i) {
            CHECK(hs.normals.row(i).norm() == doctest::Approx(1.0).epsilon(1e-12));
        }
        for (Eigen::Index i = 0; i < m; ++i) {
            CHECK((hs.normals.row(i) + hs.normals.row(m + i)).norm() == doctest::Approx(0.0));
        }
        const double worst = (hs.normals * z.center - hs.offsets).maxCoeff();
        if (m >= 2) CHECK(worst < 0.0);  // spanning zonotopes: strictly interior center
        CHECK(contains_point(z, z.center));
    }
}

TEST_CASE("to_halfspace rejects degenerate generators") {
    const Zonotope2 z = zono(0, 0, {{1, 0}, {0, 0}});
    CHECK_THROWS_AS(to_halfspace(z), DegenerateGenerator);
}

TEST_CASE("contains_point accepts beta samples and the all-ones vertex") {
    std::mt19937_64 rng(23);
    for (int k = 0; k < 200; ++k) {
        const Zonotope2 z = random_zonotope(rng);
        for (int s = 0; s < 50; ++s) CHECK(contains_point(z, sample_point(z, rng)));
        Vec2 vertex = z.center;
        for (int i = 0; i < z.num_generators(); ++i) vertex += z.generators.col(i);
        CHECK(contains_point(z, vertex));
    }
}

TEST_CASE("contains_point rejects support-direction pushes") {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);
    for (int k = 0; k < 500; ++k) {
        const Zonotope2 z = random_zonotope(rng);
        const double a = ang(rng);
        const Vec2 d(std::cos(a), std::sin(a));
        const double radius = oracle::support_radius(z.generators, d);
        CHECK(!contains_point(z, Vec2(z.center + (1.0 + 1e-3) * radius * d)));
    }
}

TEST_CASE("a point zonotope degrades to a ball test") {
    const Zonotope2 z = zono(1, 2, {{0, 0}});
    CHECK(contains_point(z, Vec2(1, 2)));
    CHECK(contains_point(z, Vec2(1 + 0.9e-9, 2)));
    CHECK(!contains_point(z, Vec2(1 + 1e-6, 2)));
}

TEST_CASE("symmetry about the center: p inside implies 2c - p inside") {
    std::mt19937_64 rng(31);
    for (int k = 0; k < 100; ++k) {
        const Zonotope2 z = random_zonotope(rng);
        const Vec2 p = sample_point(z, rng);
        CHECK(contains_point(z, Vec2(2.0 * z.center - p)));
    }
}

TEST_CASE("intersects: identical sets and far boxes") {
    const Zonotope2 box = zono(0, 0, {{1, 0}, {0, 1}});
    CHECK(intersects(box, box));
    const Zonotope2 far = zono(10, 0, {{1, 0}, {0, 1}});
    CHECK(!intersects(box, far));
}

TEST_CASE("intersects is symmetric and matches the separating-axis oracle") {
    std::mt19937_64 rng(37);
    int compared = 0;
    for (int k = 0; k < 1000; ++k) {
        const Zonotope2 a = random_zonotope(rng);
        const Zonotope2 b = random_zonotope(rng);
        const bool ab = intersects(a, b);
        CHECK(ab == intersects(b, a));
        const double sep = oracle::sat_separation(
            oracle::zonotope_polygon(a.center, a.generators),
            oracle::zonotope_polygon(b.center, b.generators));
        if (std::abs(sep) < 1e-9) continue;  // inside the agreement tolerance
        CHECK(ab == (sep <= 0.0));
        ++compared;
    }
    CHECK(compared > 900);
}

TEST_CASE("zonotope vertices trace the boundary polygon") {
    const Zonotope2 box = zono(0, 0, {{1, 0}, {0, 2}});
    const auto verts = zonotope_vertices(box);
    REQUIRE(verts.size() == 4);
    // CCW from the lowest vertex.
    CHECK(verts[0] == Vec2(-1, -2));
    CHECK(verts[1] == Vec2(1, -2));
    CHECK(verts[2] == Vec2(1, 2));
    CHECK(verts[3] == Vec2(-1, 2));
}
