#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "labyrinth/path.hpp"
#include "labyrinth/rng.hpp"

using namespace lab;
using test::Planar;

namespace {

struct PlanarBox {
    Planar P;
    ShellInterval J{0.55, 0.95};
    BoxPlan plan;
    BoxBarrier b;
    PlanarBox() {
        plan = plan_box(1.0, J, P.mu, P.omega, 2, coverage_tau_bound(P.chart, P.t));
        b = assemble_box(plan, unit(2, 1), max_cap_radius(P.chart, J.hi), P.chart, P.t, P.shifts);
    }
};

const PlanarBox& box() {
    static PlanarBox pb;
    return pb;
}

}  // namespace

TEST_CASE("polyline length") {
    CHECK(polyline_length(Polyline({make_vec({0, 0}), make_vec({3, 4})})) == doctest::Approx(5.0));
    Polyline sq({make_vec({0, 0}), make_vec({1, 0}), make_vec({1, 1}), make_vec({0, 1}), make_vec({0, 0})});
    CHECK(sq.length() == doctest::Approx(4.0));
    Rng rng(3);
    Vec a = make_vec({0.1, -0.2, 0.3}), b = make_vec({1.0, 2.0, -1.0});
    std::vector<double> ts{0.0, 1.0};
    for (int i = 0; i < 20; ++i) ts.push_back(rng.uniform());
    std::sort(ts.begin(), ts.end());
    Polyline p;
    for (double t : ts) p.pts.push_back((1 - t) * a + t * b);
    CHECK(p.length() == doctest::Approx((b - a).norm()).epsilon(1e-13));
    CHECK(p.length() >= (p.pts.back() - p.pts.front()).norm());
}

TEST_CASE("crosses_barrier") {
    const auto& B = box();
    const BarrierLayer& L = B.b.layers[B.b.layers.size() / 2];
    FacetIndex one({&L});
    // the facet nearest the cap axis
    int best = 0;
    for (int i = 0; i < static_cast<int>(L.facets.size()); ++i)
        if (std::abs(L.facets[i].facet.centroid()[0]) < std::abs(L.facets[best].facet.centroid()[0])) best = i;
    Vec c = L.facets[best].facet.centroid();
    REQUIRE(L.in_piece(c, best));
    CHECK(crosses_barrier(Polyline({0.98 * c, 1.02 * c}), one));
    // through a skeleton vertex: a hole
    Vec v = L.facets[best].facet.v[0];
    REQUIRE(L.skeleton.distance(v) < L.eta_s);
    CHECK_FALSE(crosses_barrier(Polyline({0.98 * v, 1.02 * v}), one));
    // just off the vertex, still inside the eta_s hole
    Vec t = (L.facets[best].facet.v[1] - v).normalized();
    Vec w = v + 0.5 * L.eta_s * t;
    CHECK_FALSE(crosses_barrier(Polyline({w - 0.01 * v, w + 0.01 * v}), one));
    // beyond the hole
    Vec z = v + 1.5 * L.eta_s * t;
    CHECK(crosses_barrier(Polyline({z - 0.01 * v, z + 0.01 * v}), one));
    // outside the box entirely
    CHECK_FALSE(crosses_barrier(Polyline({make_vec({0.0, -0.6}), make_vec({0.0, -0.9})}), B.b));
    CHECK_FALSE(crosses_barrier(Polyline({make_vec({0.9, 0.1}), make_vec({0.5, 0.1})}), B.b));
}

TEST_CASE("shortest crossing: empty barrier control") {
    const auto& B = box();
    BoxBarrier empty = B.b;
    empty.layers.clear();
    for (double h : {B.J.width() / 50, B.J.width() / 80}) {
        CrossingResult r = shortest_crossing(empty, h);
        REQUIRE(r.reachable);
        CHECK(std::abs(r.length - B.J.width()) <= 0.02 * B.J.width());
        CHECK(r.length >= B.J.width() - 1e-12);
    }
    CHECK_THROWS_AS(shortest_crossing(empty, 0.0), Error);
    GridOptions tiny;
    tiny.node_budget = 10;
    CHECK_THROWS_AS(shortest_crossing(empty, 0.01, tiny), Error);
}

TEST_CASE("shortest crossing: single layer detours through a hole") {
    const auto& B = box();
    BoxBarrier one = B.b;
    one.layers = {B.b.layers[B.b.layers.size() / 2]};
    double h = B.plan.eta_s;
    CrossingResult r = shortest_crossing(one, h);
    REQUIRE(r.reachable);
    CHECK(std::isfinite(r.length));
    CHECK(r.length >= B.J.width() - 1e-12);
    CHECK_FALSE(crosses_barrier(r.witness, one));
}

TEST_CASE("length certificate for a full planar box") {
    const auto& B = box();
    // layers sit width/(m ell) < eta_s apart; the grid must resolve that spacing
    double h = 0.5 * B.plan.eta_s;
    LengthCertificate c = certify_box(B.b, h);
    CHECK(c.coarse.reachable);
    CHECK(c.fine.reachable);
    CHECK(c.witness_clear);
    CHECK(c.coarse.length > 1.0);
    CHECK(c.fine.length > 1.0);
    CHECK(c.analytic == doctest::Approx(1.5));
    CHECK(c.pass());
    // refinement only adds paths, up to snapping
    CHECK(c.fine.length <= 1.01 * c.coarse.length);
    // verdict is exactly the conjunction
    LengthCertificate d = c;
    d.fine.length = 0.5;
    CHECK_FALSE(d.pass());
    d = c;
    d.analytic = 0.9;
    CHECK_FALSE(d.pass());
    auto j = to_json(c);
    CHECK(j["verdict"] == "pass");
    CHECK(polyline_csv(c.fine.witness).rfind("x0,x1\n", 0) == 0);
}

TEST_CASE("chained skeleton bound") {
    const auto& B = box();
    CHECK(chained_skeleton_bound(B.plan) == doctest::Approx(B.plan.A + 0.5));
    BoxPlan p = B.plan;
    double lo = chained_skeleton_bound(p);
    p.mu *= 1.1;
    CHECK(chained_skeleton_bound(p) > lo);
}

TEST_CASE("random crossing audit") {
    const auto& B = box();
    // straight radial crossings at various lateral offsets all hit a piece
    auto straight = random_crossings(B.b, 50, 5, 1.05 * B.J.width(), 0);
    REQUIRE(straight.size() == 50);
    FacetIndex idx(B.b);
    for (const auto& p : straight) CHECK(crosses_barrier(p, idx));
    AuditReport a = random_crossing_audit(B.b, 100, 7, B.plan.A);
    CHECK(a.count == 100);
    for (const auto& p : a.paths) {
        CHECK(p.length() <= B.plan.A);
        CHECK(p.pts.front().norm() == doctest::Approx(B.J.lo).epsilon(1e-12));
        CHECK(p.pts.back().norm() == doctest::Approx(B.J.hi).epsilon(1e-12));
    }
    CHECK(a.uncontested() == 0);
    CHECK(to_json(a)["hits"] == 100);
}
