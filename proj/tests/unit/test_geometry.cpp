#include <doctest.h>

#include <cmath>

#include "labyrinth/geometry.hpp"
#include "labyrinth/rng.hpp"

using namespace lab;

TEST_CASE("circumsphere of a right triangle") {
    Simplex s({make_vec({0, 0}), make_vec({1, 0}), make_vec({0, 1})});
    Sphere c = circumsphere(s);
    CHECK(c.center[0] == doctest::Approx(0.5));
    CHECK(c.center[1] == doctest::Approx(0.5));
    CHECK(c.radius == doctest::Approx(std::sqrt(2.0) / 2));
}

TEST_CASE("circumsphere of a regular tetrahedron") {
    Simplex s({make_vec({1, 1, 1}), make_vec({1, -1, -1}), make_vec({-1, 1, -1}), make_vec({-1, -1, 1})});
    double edge = (s.v[0] - s.v[1]).norm();
    for (auto& v : s.v) v /= edge;
    CHECK(circumsphere(s).radius == doctest::Approx(std::sqrt(3.0 / 8.0)));
}

TEST_CASE("circumsphere residuals on a random simplex") {
    Rng rng(7);
    Simplex s;
    for (int i = 0; i < 4; ++i) s.v.push_back(make_vec({rng.normal(), rng.normal(), rng.normal()}));
    Sphere c = circumsphere(s);
    for (const auto& v : s.v) CHECK(std::abs((v - c.center).norm() - c.radius) < 1e-12);
}

TEST_CASE("degenerate simplex is rejected") {
    Simplex s({make_vec({0, 0}), make_vec({1, 1}), make_vec({2, 2})});
    CHECK_THROWS_AS(circumsphere(s), Error);
}

TEST_CASE("supporting hyperplane") {
    Hyperplane h = supporting_hyperplane(Simplex({make_vec({1, 0}), make_vec({0, 1})}));
    CHECK(h.normal[0] == doctest::Approx(std::sqrt(0.5)));
    CHECK(h.normal[1] == doctest::Approx(std::sqrt(0.5)));
    CHECK(h.offset == doctest::Approx(std::sqrt(0.5)));

    Rng rng(3);
    Simplex s;
    for (int i = 0; i < 4; ++i) {
        Vec p = make_vec({0.1 * rng.normal(), 0.1 * rng.normal(), 0.1 * rng.normal(), 0.0});
        p[3] = std::sqrt(0.5625 - p.head(3).squaredNorm());
        s.v.push_back(p);
    }
    Hyperplane g = supporting_hyperplane(s);
    for (const auto& v : s.v) CHECK(std::abs(g.normal.dot(v) - g.offset) < 1e-9);
    CHECK(g.normal[3] > 0.9);

    try {
        supporting_hyperplane(Simplex({make_vec({1, 1}), make_vec({-1, -1})}));
        FAIL("expected OrientationUndefined");
    } catch (const Error& e) {
        CHECK(e.code() == "geometry.OrientationUndefined");
    }
}

TEST_CASE("radial projection and coordinate helpers") {
    Vec p = radial_projection(make_vec({3, 4}));
    CHECK(p[0] == doctest::Approx(0.6));
    CHECK(p[1] == doctest::Approx(0.8));
    CHECK_THROWS_AS(radial_projection(make_vec({0, 0})), Error);
    Vec u = radial_projection(make_vec({0.6, 0.8}));
    CHECK((u - make_vec({0.6, 0.8})).norm() < 1e-15);
    Vec a = drop_last(make_vec({1, 2, 3}));
    CHECK(a.size() == 2);
    CHECK(a[1] == 2);
    CHECK(drop_last(append(a, 0.0)) == a);
}

TEST_CASE("barycentric coordinates") {
    Simplex s({make_vec({0, 0}), make_vec({1, 0}), make_vec({0, 1})});
    Barycentric b = point_in_simplex(s.centroid(), s);
    CHECK(b.inside);
    for (double l : b.lambda) CHECK(l == doctest::Approx(1.0 / 3));
    Barycentric v = point_in_simplex(s.v[1], s);
    CHECK(v.lambda[1] == doctest::Approx(1.0));
    Barycentric o = point_in_simplex(make_vec({1, 1}), s);
    CHECK_FALSE(o.inside);
    CHECK(*std::min_element(o.lambda.begin(), o.lambda.end()) < 0);
}

TEST_CASE("point to simplex distance matches dense sampling") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        Simplex tri;
        for (int i = 0; i < 3; ++i) tri.v.push_back(make_vec({rng.normal(), rng.normal(), rng.normal()}));
        Vec x = make_vec({2 * rng.normal(), 2 * rng.normal(), 2 * rng.normal()});
        double exact = point_simplex_distance(x, tri);
        double brute = 1e300;
        const int n = 200;
        for (int i = 0; i <= n; ++i)
            for (int j = 0; i + j <= n; ++j) {
                Vec p = tri.v[0] + (double(i) / n) * (tri.v[1] - tri.v[0]) + (double(j) / n) * (tri.v[2] - tri.v[0]);
                brute = std::min(brute, (p - x).norm());
            }
        CHECK(exact <= brute + 1e-12);
        CHECK(exact >= brute - 0.02);
    }
}

TEST_CASE("shell interval and boxes") {
    ShellInterval j(0.5, 1.0);
    CHECK_FALSE(j.contains(0.5));
    CHECK(j.contains(1.0));
    CHECK(j.contains(0.7));
    CHECK_THROWS_AS(ShellInterval(1.0, 0.5), Error);
    SphericalBox b{make_vec({0, 0, 1}), 0.2, j};
    CHECK(b.contains(make_vec({0, 0, 0.8})));
    CHECK_FALSE(b.contains(make_vec({0.8, 0, 0})));
}

TEST_CASE("rotation between unit vectors") {
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        Vec a = make_vec({rng.normal(), rng.normal(), rng.normal(), rng.normal()}).normalized();
        Vec b = make_vec({rng.normal(), rng.normal(), rng.normal(), rng.normal()}).normalized();
        Mat r = rotation_between(a, b);
        CHECK((r * a - b).norm() < 1e-12);
        CHECK((r.transpose() * r - Mat::Identity(4, 4)).norm() < 1e-12);
        CHECK(r.determinant() == doctest::Approx(1.0));
    }
    Vec e = unit(3, 2);
    CHECK((rotation_between(e, e) - Mat::Identity(3, 3)).norm() < 1e-12);
}
